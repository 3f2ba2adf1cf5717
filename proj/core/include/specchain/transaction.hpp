// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "specchain/geometry.hpp"
#include "specchain/radio.hpp"
#include "specchain/sha256.hpp"
#include "specchain/units.hpp"

namespace specchain::ledger {

/// Wire ids are part of the canonical serialization and must never change.
enum class TxKind : uint8_t {
  kTrade = 0,
  kBudgetAdjust = 1,
  kGenesis = 2,
  kLock = 3,
  kUnlock = 4,
  kCrossRetire = 5,
  kCrossMint = 6,
  kDecision = 7,
};

enum class GenesisRecordKind : uint8_t {
  kNode = 0,
  kPoint = 1,
  kGrant = 2,
  kConfig = 3,
};

enum class AllocationPolicy : uint8_t { kEqual = 0, kProportional = 1 };

/// A spectrum trade: the seller's grant is retired and an equivalent right is
/// minted for the buyer with a relocated transmitter.
struct TradeData {
  std::string seller_grant_id;
  std::string buyer_id;
  Location new_location;
  radio::RadioParams new_radio;
  uint64_t price = 0;

  friend bool operator==(const TradeData&, const TradeData&) = default;
};

/// Moves interference allowance between two grants at one protection point.
/// The amount is linear (attowatts); log-domain quantities do not add.
struct BudgetAdjustData {
  std::string donor_grant_id;
  std::string recipient_grant_id;
  std::string point_id;
  uint64_t delta_aw = 0;

  friend bool operator==(const BudgetAdjustData&, const BudgetAdjustData&) = default;
};

struct GenesisNodeData {
  std::string node_id;
  Location location;
  uint64_t balance = 0;
  MilliDbm tolerance_mdb = 0;

  friend bool operator==(const GenesisNodeData&, const GenesisNodeData&) = default;
};

struct GenesisPointData {
  std::string point_id;
  Location location;
  MilliDbm threshold_mdb = 0;

  friend bool operator==(const GenesisPointData&, const GenesisPointData&) = default;
};

struct GenesisGrantData {
  std::string grant_id;
  std::string holder_id;
  radio::RadioParams radio;
  Location location;
  uint8_t tier = 1;
  uint32_t weight = 1;
  // Inactive genesis grants are registered entrant candidates: they take part
  // in budget allocation but do not transmit until admitted.
  bool active = true;

  friend bool operator==(const GenesisGrantData&, const GenesisGrantData&) = default;
};

struct GenesisConfigData {
  AllocationPolicy policy = AllocationPolicy::kEqual;
  uint8_t tier_count = 1;

  friend bool operator==(const GenesisConfigData&, const GenesisConfigData&) = default;
};

/// Marks a grant untradeable while a cross-chain transfer is in flight.
struct LockData {
  std::string grant_id;
  std::string trade_id;
  std::string dest_chain_id;
  uint64_t expiry_tick = 0;

  friend bool operator==(const LockData&, const LockData&) = default;
};

struct UnlockData {
  std::string grant_id;
  std::string trade_id;

  friend bool operator==(const UnlockData&, const UnlockData&) = default;
};

struct CrossRetireData {
  std::string grant_id;
  std::string trade_id;
  Digest decision_ref{};

  friend bool operator==(const CrossRetireData&, const CrossRetireData&) = default;
};

struct CrossMintData {
  std::string trade_id;
  Digest decision_ref{};
  GenesisGrantData grant;

  friend bool operator==(const CrossMintData&, const CrossMintData&) = default;
};

enum class DecisionPhase : uint8_t {
  kLocked = 0,
  kAttested = 1,
  kCommitted = 2,
  kAborted = 3,
};

const char* to_string(DecisionPhase phase);

/// One lifecycle step of a cross-chain trade on the decision blockchain.
struct DecisionData {
  std::string trade_id;
  DecisionPhase phase = DecisionPhase::kLocked;
  std::vector<std::string> notary_ids;  // attesting committee members, sorted

  friend bool operator==(const DecisionData&, const DecisionData&) = default;
};

using GenesisData = std::variant<GenesisNodeData, GenesisPointData,
                                 GenesisGrantData, GenesisConfigData>;

using TxData = std::variant<TradeData, BudgetAdjustData, GenesisData, LockData,
                            UnlockData, CrossRetireData, CrossMintData,
                            DecisionData>;

struct Transaction {
  uint64_t timestamp = 0;  // simulation tick of proposal
  std::string auth_id;     // node id authorizing the tx (modeled signature)
  TxData data;

  TxKind kind() const { return static_cast<TxKind>(data.index()); }

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

std::vector<uint8_t> serialize_tx(const Transaction& tx);
Transaction parse_tx(std::span<const uint8_t> bytes);

inline Digest tx_id(const Transaction& tx) { return sha256(serialize_tx(tx)); }
inline std::string tx_id_hex(const Transaction& tx) { return to_hex(tx_id(tx)); }

/// Deterministic id of the grant a trade mints, derived from the trade's own id.
std::string minted_grant_id(const Digest& trade_tx_id);

}  // namespace specchain::ledger
