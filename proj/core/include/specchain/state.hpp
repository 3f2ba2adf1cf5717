// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specchain/chain.hpp"
#include "specchain/geometry.hpp"
#include "specchain/radio.hpp"
#include "specchain/transaction.hpp"
#include "specchain/units.hpp"

namespace specchain::ledger {

struct NodeRecord {
  Location location;
  uint64_t balance = 0;
  // Max aggregate interference the node tolerates at its own receiver.
  MilliDbm tolerance_mdb = 0;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct GrantRecord {
  std::string id;
  std::string holder;
  radio::RadioParams radio;
  Location location;
  uint8_t tier = 1;  // 1 = highest secondary priority, rank <= tier count
  uint32_t weight = 1;
  // Inactive grants are registered entrant candidates: they hold budget
  // allowances but do not transmit.
  bool active = true;
  // A locked grant stays an active interferer but cannot be traded or locked
  // again until the cross-chain transfer that locked it resolves.
  bool locked = false;
  std::string lock_trade_id;
  std::string lock_dest_chain;
  uint64_t lock_expiry_tick = 0;

  friend bool operator==(const GrantRecord&, const GrantRecord&) = default;
};

struct PointRecord {
  Location location;
  MilliDbm threshold_mdb = 0;

  friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

/// Initial on-chain population, normalized into the genesis block.
struct GenesisSpec {
  AllocationPolicy policy = AllocationPolicy::kEqual;
  uint8_t tier_count = 1;
  std::vector<GenesisNodeData> nodes;
  std::vector<GenesisPointData> points;
  std::vector<GenesisGrantData> grants;
};

struct ApplyError {
  std::string reason;
};

/// Registry state derived by replaying the chain. All containers are ordered
/// maps so that iteration, and everything computed from it, is deterministic.
struct LedgerState {
  AllocationPolicy policy = AllocationPolicy::kEqual;
  uint8_t tier_count = 1;
  std::map<std::string, NodeRecord> nodes;
  std::map<std::string, GrantRecord> grants;
  std::map<std::string, PointRecord> points;
  // allowances[point][grant] = interference allowance in integer attowatts
  // (linear domain). Integer bookkeeping makes transfers conserve exactly and
  // replay bit-reproducible. Grants without an entry hold a zero allowance.
  std::map<std::string, std::map<std::string, uint64_t>> allowances;
  // Cross-chain trade lifecycle, maintained only on the decision chain.
  std::map<std::string, DecisionPhase> decisions;

  /// Validates and applies one transaction. On error the state is unchanged.
  std::optional<ApplyError> apply(const Transaction& tx, uint64_t block_height);

  friend bool operator==(const LedgerState&, const LedgerState&) = default;
};

uint64_t allowance_of(const LedgerState& state, const std::string& point_id,
                      const std::string& grant_id);

/// Splits every protection point's linear budget across all registered grants
/// (inactive candidates included, so their allowances are fixed up front)
/// according to the configured policy. The budget is floored to attowatts and
/// the division remainder goes to the first grants in id order, so the shares
/// sum exactly to the quantized budget. Allowances are derived, never
/// serialized: replay reproduces them bit-exactly from the genesis records.
void derive_initial_allowances(LedgerState& state);

Block build_genesis_block(const GenesisSpec& spec);

/// Builds the genesis chain and the state it induces.
/// Throws std::invalid_argument on duplicate or dangling ids.
std::pair<Chain, LedgerState> make_genesis(const GenesisSpec& spec);

/// Applies a whole block atomically: on error the state is unchanged.
/// Height 0 accepts only Genesis transactions and derives allowances.
std::optional<ApplyError> apply_block(LedgerState& state, const Block& block);

/// Replays a chain from genesis. Throws std::runtime_error if any block
/// fails to apply; a chain produced by this library always replays cleanly.
LedgerState replay_chain(const Chain& chain);

}  // namespace specchain::ledger
