// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace specchain {

/// A point on the 2-D scenario plane. Coordinates are integer millimeters so
/// locations survive serialization and replay bit-for-bit.
struct Location {
  int64_t x_mm = 0;
  int64_t y_mm = 0;

  friend bool operator==(const Location&, const Location&) = default;
};

inline Location location_from_meters(double x_m, double y_m) {
  if (!std::isfinite(x_m) || !std::isfinite(y_m)) {
    throw std::invalid_argument("location coordinates must be finite");
  }
  return Location{static_cast<int64_t>(std::llround(x_m * 1000.0)),
                  static_cast<int64_t>(std::llround(y_m * 1000.0))};
}

inline double distance_m(const Location& a, const Location& b) {
  double dx = static_cast<double>(a.x_mm - b.x_mm) * 1e-3;
  double dy = static_cast<double>(a.y_mm - b.y_mm) * 1e-3;
  return std::hypot(dx, dy);
}

}  // namespace specchain
