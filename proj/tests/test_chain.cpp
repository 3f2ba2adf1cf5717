// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/chain.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "specchain/block.hpp"
#include "specchain/transaction.hpp"

using namespace specchain;
using namespace specchain::ledger;

namespace {

Transaction trade_at(uint64_t tick, const std::string& seller_grant,
                     const std::string& buyer) {
  Transaction tx;
  tx.timestamp = tick;
  tx.auth_id = "n1";
  tx.data = TradeData{seller_grant, buyer, Location{1000 * (int64_t)tick, 0},
                      radio::RadioParams{20000, 1}, 1};
  return tx;
}

// A structurally valid chain of `n` blocks (genesis plus n-1 successors).
Chain chain_of(size_t n) {
  Transaction genesis_tx;
  genesis_tx.auth_id = "genesis";
  genesis_tx.data =
      GenesisData{GenesisConfigData{AllocationPolicy::kEqual, 1}};
  Chain chain = Chain::with_genesis(
      make_block(0, kZeroDigest, {genesis_tx}, {ZoneRecord{}}));
  for (size_t h = 1; h < n; ++h) {
    ZoneRecord zone;
    zone.voter_ids = {"n1", "n2"};
    chain.append(make_block(h, chain.tip().block_hash,
                            {trade_at(h, "g1", "n2")}, {zone}));
  }
  return chain;
}

}  // namespace

TEST_SUITE("chain") {

TEST_CASE("append enforces the hash link") {
  Chain chain = chain_of(3);
  CHECK(chain.height() == 2);
  CHECK(chain.blocks().size() == 3);

  Block wrong_height = make_block(7, chain.tip().block_hash, {}, {});
  CHECK_THROWS_AS(chain.append(wrong_height), std::invalid_argument);

  Digest bogus;
  bogus.fill(0xEE);
  Block wrong_link = make_block(3, bogus, {}, {});
  CHECK_THROWS_AS(chain.append(wrong_link), std::invalid_argument);
}

TEST_CASE("serialize and parse invert each other") {
  Chain chain = chain_of(5);
  auto bytes = chain.serialize();
  Chain back = parse_chain(bytes);
  CHECK(back == chain);
  CHECK(back.serialize() == bytes);
}

TEST_CASE("an intact chain verifies") {
  auto bytes = chain_of(6).serialize();
  VerifyResult v = verify_chain_bytes(bytes);
  CHECK(v.ok);
}

TEST_CASE("empty input fails verification") {
  VerifyResult v = verify_chain_bytes({});
  CHECK_FALSE(v.ok);
  CHECK(v.first_bad_height == 0);
}

TEST_CASE("tampering any payload byte is detected at or before its block") {
  Chain chain = chain_of(4);
  auto bytes = chain.serialize();

  // Map every byte offset to the height of the block frame it sits in.
  std::vector<uint64_t> height_of(bytes.size(), 0);
  size_t offset = 0;
  for (const Block& b : chain.blocks()) {
    size_t frame = serialize_block(b).size();
    for (size_t i = 0; i < frame; ++i) height_of[offset + i] = b.height;
    offset += frame;
  }
  REQUIRE(offset == bytes.size());

  for (size_t pos = 0; pos < bytes.size(); pos += 7) {
    auto copy = bytes;
    copy[pos] ^= 0x01;
    VerifyResult v = verify_chain_bytes(copy);
    CHECK_FALSE(v.ok);
    CHECK(v.first_bad_height <= height_of[pos]);
  }
}

TEST_CASE("truncated tails are detected") {
  auto bytes = chain_of(4).serialize();
  for (size_t cut : {1UL, 5UL, 33UL}) {
    std::vector<uint8_t> shorter(bytes.begin(), bytes.end() - cut);
    VerifyResult v = verify_chain_bytes(shorter);
    CHECK_FALSE(v.ok);
    CHECK(v.first_bad_height <= 3);
  }
}

TEST_CASE("appended garbage is attributed past the valid prefix") {
  auto bytes = chain_of(3).serialize();
  bytes.insert(bytes.end(), {0xDE, 0xAD, 0xBE, 0xEF});
  VerifyResult v = verify_chain_bytes(bytes);
  CHECK_FALSE(v.ok);
  CHECK(v.first_bad_height == 3);  // first height the garbage occupies
}

TEST_CASE("file roundtrip preserves bytes") {
  Chain chain = chain_of(2);
  auto path = std::filesystem::temp_directory_path() / "specchain_rt.bin";
  save_chain(chain, path);
  auto bytes = read_file_bytes(path);
  CHECK(bytes == chain.serialize());
  std::filesystem::remove(path);
}

}  // TEST_SUITE
