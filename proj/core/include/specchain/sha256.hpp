// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace specchain {

using Digest = std::array<uint8_t, 32>;

inline constexpr Digest kZeroDigest{};

Digest sha256(std::span<const uint8_t> data);

std::string to_hex(const Digest& d);

}  // namespace specchain
