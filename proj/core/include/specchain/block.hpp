// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "specchain/sha256.hpp"
#include "specchain/transaction.hpp"

namespace specchain::ledger {

/// Who approved a transaction: the validation-zone voters, and the protection
/// points whose interference environment the transaction touched. Stored per
/// transaction so the chain alone documents every approval.
struct ZoneRecord {
  std::vector<std::string> voter_ids;            // sorted
  std::vector<std::string> protection_point_ids; // sorted

  friend bool operator==(const ZoneRecord&, const ZoneRecord&) = default;
};

struct Block {
  uint64_t height = 0;
  Digest prev_hash{};
  std::vector<Transaction> txs;
  std::vector<ZoneRecord> zones;  // parallel to txs
  Digest block_hash{};

  friend bool operator==(const Block&, const Block&) = default;
};

/// Canonical bytes covered by the block hash: height, prev_hash, transactions
/// and zone records. The framing length and the hash itself are excluded.
std::vector<uint8_t> serialize_block_body(const Block& block);

Digest compute_block_hash(const Block& block);

/// Framed form used in the ledger file: u32 length, body, 32-byte block hash.
std::vector<uint8_t> serialize_block(const Block& block);

/// Parses one framed block. Throws WireError on malformed input; does not
/// check the hash (verification walks the raw bytes separately).
Block parse_block(std::span<const uint8_t> frame_body);

Block make_block(uint64_t height, const Digest& prev_hash,
                 std::vector<Transaction> txs, std::vector<ZoneRecord> zones);

}  // namespace specchain::ledger
