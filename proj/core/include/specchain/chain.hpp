// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specchain/block.hpp"

namespace specchain::ledger {

/// Append-only hash chain. Blocks are linked by prev_hash and heights rise
/// by exactly one from the genesis block at height 0.
class Chain {
 public:
  Chain() = default;

  static Chain with_genesis(Block genesis);

  void append(Block block);  // throws std::invalid_argument on a broken link

  bool empty() const { return blocks_.empty(); }
  uint64_t height() const;  // tip height; chain must be non-empty
  const Block& tip() const;
  std::span<const Block> blocks() const { return blocks_; }

  std::vector<uint8_t> serialize() const;

  friend bool operator==(const Chain&, const Chain&) = default;

 private:
  std::vector<Block> blocks_;
};

struct VerifyResult {
  bool ok = false;
  // Lowest height whose block fails hashing, linking, or parsing. Meaningful
  // only when !ok. A file whose tail is garbage reports the first height the
  // garbage occupies.
  uint64_t first_bad_height = 0;
  std::string detail;
};

/// Verifies a serialized ledger standalone: framing, hashes, links, heights.
VerifyResult verify_chain_bytes(std::span<const uint8_t> bytes);

/// Re-checks an in-memory chain by reserializing it.
VerifyResult verify_chain(const Chain& chain);

/// Parses a serialized ledger. Call verify_chain_bytes first; this throws
/// WireError or std::invalid_argument on malformed input.
Chain parse_chain(std::span<const uint8_t> bytes);

void save_chain(const Chain& chain, const std::filesystem::path& path);
std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace specchain::ledger
