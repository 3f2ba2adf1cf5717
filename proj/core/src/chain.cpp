// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/chain.hpp"

#include <fstream>
#include <stdexcept>

#include "specchain/wire.hpp"

namespace specchain::ledger {

Chain Chain::with_genesis(Block genesis) {
  if (genesis.height != 0) throw std::invalid_argument("genesis height must be 0");
  if (genesis.prev_hash != kZeroDigest) {
    throw std::invalid_argument("genesis prev_hash must be zero");
  }
  Chain chain;
  chain.blocks_.push_back(std::move(genesis));
  return chain;
}

void Chain::append(Block block) {
  if (blocks_.empty()) throw std::invalid_argument("append before genesis");
  if (block.height != tip().height + 1) {
    throw std::invalid_argument("block height must extend the tip");
  }
  if (block.prev_hash != tip().block_hash) {
    throw std::invalid_argument("block prev_hash does not match tip");
  }
  blocks_.push_back(std::move(block));
}

uint64_t Chain::height() const {
  if (blocks_.empty()) throw std::logic_error("chain is empty");
  return blocks_.back().height;
}

const Block& Chain::tip() const {
  if (blocks_.empty()) throw std::logic_error("chain is empty");
  return blocks_.back();
}

std::vector<uint8_t> Chain::serialize() const {
  std::vector<uint8_t> out;
  for (const auto& block : blocks_) {
    auto frame = serialize_block(block);
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

VerifyResult verify_chain_bytes(std::span<const uint8_t> bytes) {
  uint64_t expected_height = 0;
  Digest expected_prev = kZeroDigest;
  size_t pos = 0;

  auto fail = [&](const std::string& why) {
    return VerifyResult{false, expected_height, why};
  };

  if (bytes.empty()) return fail("empty ledger");

  while (pos < bytes.size()) {
    if (bytes.size() - pos < 4) return fail("truncated frame length");
    ByteReader lr(bytes.subspan(pos, 4));
    uint32_t len = lr.u32();
    pos += 4;
    if (len < 32 || len > bytes.size() - pos) return fail("bad frame length");
    auto frame = bytes.subspan(pos, len);
    pos += len;

    auto body = frame.first(len - 32);
    auto stored = frame.last(32);
    Digest recomputed = sha256(body);
    if (!std::equal(stored.begin(), stored.end(), recomputed.begin())) {
      return fail("block hash mismatch");
    }

    Block block;
    try {
      block = parse_block(frame);
    } catch (const WireError& e) {
      return fail(std::string("malformed block: ") + e.what());
    }
    if (block.height != expected_height) return fail("unexpected height");
    if (block.prev_hash != expected_prev) return fail("broken hash link");

    expected_prev = block.block_hash;
    ++expected_height;
  }
  return VerifyResult{true, 0, ""};
}

VerifyResult verify_chain(const Chain& chain) {
  return verify_chain_bytes(chain.serialize());
}

Chain parse_chain(std::span<const uint8_t> bytes) {
  Chain chain;
  size_t pos = 0;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 4) throw WireError("truncated frame length");
    ByteReader lr(bytes.subspan(pos, 4));
    uint32_t len = lr.u32();
    pos += 4;
    if (len < 32 || len > bytes.size() - pos) throw WireError("bad frame length");
    Block block = parse_block(bytes.subspan(pos, len));
    pos += len;
    if (chain.empty()) {
      chain = Chain::with_genesis(std::move(block));
    } else {
      chain.append(std::move(block));
    }
  }
  if (chain.empty()) throw WireError("empty ledger");
  return chain;
}

void save_chain(const Chain& chain, const std::filesystem::path& path) {
  auto bytes = chain.serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto size = in.tellg();
  in.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!in) throw std::runtime_error("read failed for " + path.string());
  return bytes;
}

}  // namespace specchain::ledger
