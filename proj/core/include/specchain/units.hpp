// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace specchain {

/// Sentinel for "no power at all": below every finite dBm value, so it
/// composes with threshold comparisons without a special case.
inline constexpr double kNoPowerDbm = -std::numeric_limits<double>::infinity();

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double mw_to_dbm(double mw) {
  return mw > 0.0 ? 10.0 * std::log10(mw) : kNoPowerDbm;
}

/// dBm values travel on the wire as integer thousandths of a dB (millidB).
/// Config files accept one decimal place, so the scaling is always exact.
using MilliDbm = int32_t;

inline MilliDbm dbm_to_mdb(double dbm) {
  return static_cast<MilliDbm>(std::llround(dbm * 1000.0));
}

inline double mdb_to_dbm(MilliDbm mdb) { return static_cast<double>(mdb) / 1000.0; }

/// Linear interference-budget quantities travel as integer attowatts
/// (1 aW = 1e-15 mW). Conversions round toward "give less, need more" so a
/// quantized transfer can never overshoot the slack it was cut from.
inline constexpr double kMwPerAw = 1e-15;

/// Largest double strictly below 2^64, used to saturate conversions.
inline constexpr double kMaxAwAsDouble = 18446744073709549568.0;

inline uint64_t mw_to_aw_floor(double mw) {
  if (mw <= 0.0) return 0;
  double aw = std::floor(mw / kMwPerAw);
  return aw > kMaxAwAsDouble ? UINT64_MAX : static_cast<uint64_t>(aw);
}

inline uint64_t mw_to_aw_ceil(double mw) {
  if (mw <= 0.0) return 0;
  double aw = std::ceil(mw / kMwPerAw);
  return aw > kMaxAwAsDouble ? UINT64_MAX : static_cast<uint64_t>(aw);
}

inline double aw_to_mw(uint64_t aw) { return static_cast<double>(aw) * kMwPerAw; }

}  // namespace specchain
