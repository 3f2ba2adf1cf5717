// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/block.hpp"

#include <stdexcept>

#include "specchain/wire.hpp"

namespace specchain::ledger {

std::vector<uint8_t> serialize_block_body(const Block& block) {
  if (block.txs.size() != block.zones.size()) {
    throw std::invalid_argument("zone records must parallel transactions");
  }
  ByteWriter w;
  w.u64(block.height);
  w.raw(block.prev_hash);
  w.u32(static_cast<uint32_t>(block.txs.size()));
  for (const auto& tx : block.txs) {
    auto bytes = serialize_tx(tx);
    w.u32(static_cast<uint32_t>(bytes.size()));
    w.raw(bytes);
  }
  w.u32(static_cast<uint32_t>(block.zones.size()));
  for (const auto& zone : block.zones) {
    w.u32(static_cast<uint32_t>(zone.voter_ids.size()));
    for (const auto& id : zone.voter_ids) w.str(id);
    w.u32(static_cast<uint32_t>(zone.protection_point_ids.size()));
    for (const auto& id : zone.protection_point_ids) w.str(id);
  }
  return w.take();
}

Digest compute_block_hash(const Block& block) {
  return sha256(serialize_block_body(block));
}

std::vector<uint8_t> serialize_block(const Block& block) {
  auto body = serialize_block_body(block);
  ByteWriter w;
  w.u32(static_cast<uint32_t>(body.size() + block.block_hash.size()));
  w.raw(body);
  w.raw(block.block_hash);
  return w.take();
}

Block parse_block(std::span<const uint8_t> frame_body) {
  if (frame_body.size() < 32) throw WireError("block frame too short");
  ByteReader r(frame_body.first(frame_body.size() - 32));
  Block block;
  block.height = r.u64();
  auto prev = r.raw(32);
  std::copy(prev.begin(), prev.end(), block.prev_hash.begin());
  auto tx_count = r.u32();
  block.txs.reserve(tx_count);
  for (uint32_t i = 0; i < tx_count; ++i) {
    auto len = r.u32();
    block.txs.push_back(parse_tx(r.raw(len)));
  }
  auto zone_count = r.u32();
  if (zone_count != tx_count) throw WireError("zone record count mismatch");
  block.zones.reserve(zone_count);
  for (uint32_t i = 0; i < zone_count; ++i) {
    ZoneRecord zone;
    auto voters = r.u32();
    for (uint32_t v = 0; v < voters; ++v) zone.voter_ids.push_back(r.str());
    auto points = r.u32();
    for (uint32_t p = 0; p < points; ++p) {
      zone.protection_point_ids.push_back(r.str());
    }
    block.zones.push_back(std::move(zone));
  }
  if (!r.done()) throw WireError("trailing bytes in block body");
  auto stored = frame_body.last(32);
  std::copy(stored.begin(), stored.end(), block.block_hash.begin());
  return block;
}

Block make_block(uint64_t height, const Digest& prev_hash,
                 std::vector<Transaction> txs, std::vector<ZoneRecord> zones) {
  Block block;
  block.height = height;
  block.prev_hash = prev_hash;
  block.txs = std::move(txs);
  block.zones = std::move(zones);
  block.block_hash = compute_block_hash(block);
  return block;
}

}  // namespace specchain::ledger
