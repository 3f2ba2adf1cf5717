// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "specchain/block.hpp"
#include "specchain/radio.hpp"
#include "specchain/state.hpp"
#include "specchain/transaction.hpp"

namespace specchain::consensus {

enum class Verdict : uint8_t { kApprove, kReject };

enum class Reason : uint8_t {
  kOk = 0,
  kOwnership = 1,        // authorizer does not control the named grant
  kBudgetViolation = 2,  // a protection point budget or threshold would break
  kOwnInterference = 3,  // the voter's own receiver would exceed its tolerance
};

const char* to_string(Reason reason);

struct Vote {
  std::string voter;
  Digest tx{};
  Verdict verdict = Verdict::kReject;
  Reason reason = Reason::kOk;

  friend bool operator==(const Vote&, const Vote&) = default;
};

struct ConsensusConfig {
  double sensitivity_dbm = -100.0;  // zone construction floor
  uint64_t vote_timeout_ticks = 0;  // 0: derived from network round-trip time
};

/// Snapshot of every transmitter and protection point in the world. Radio
/// propagation ignores chain boundaries, so interference checks always run
/// against the union of all regional chains (plus any reserved incoming
/// grants whose cross-chain transfer is still in flight).
struct EnvGrant {
  std::string id;
  std::string holder;
  Location location;
  radio::RadioParams radio;
};

struct EnvPoint {
  std::string id;
  Location location;
  MilliDbm threshold_mdb = 0;
};

struct EnvView {
  radio::PropagationModel prop;
  std::vector<EnvGrant> grants;  // transmitting (active) grants only
  std::vector<EnvPoint> points;
};

/// Environment slice contributed by one chain's state: its active grants and
/// its protection points.
EnvView env_from_state(const ledger::LedgerState& state,
                       const radio::PropagationModel& prop);

void merge_env(EnvView& dst, const EnvView& extra);

/// Hypothetical radio change a transaction would cause if applied.
struct TradeDelta {
  std::vector<std::string> removed;  // grant ids silenced
  std::vector<EnvGrant> added;       // transmitters introduced
};

/// Aggregate interference at a receiver with the delta applied. Grants held
/// by exclude_holder are skipped: a node's own transmissions are not
/// interference to its own receiver.
double aggregate_dbm(const EnvView& env, const Location& rx,
                     const TradeDelta& delta,
                     const std::string& exclude_holder = "");

struct PointMargin {
  std::string point_id;
  double aggregate_dbm = kNoPowerDbm;
  double threshold_dbm = 0.0;
  double margin_db = 0.0;  // aggregate - threshold; safe iff <= 0
};

/// Brute-force interference audit of the current environment.
std::vector<PointMargin> point_margins(const EnvView& env);

/// Validation zone and touched protection points for any transaction kind.
/// Nodes and points are the voting chain's own; interference checks inside
/// the votes still use the global environment.
ledger::ZoneRecord zone_for_tx(const ledger::Transaction& tx,
                               const ledger::LedgerState& state,
                               const radio::PropagationModel& prop,
                               double sensitivity_dbm);

/// One node's verdict, evaluated against the committed state plus this
/// transaction alone. Checks in order: (a) authorization over the named
/// grant, (c) every protection point stays within its threshold, (b) the
/// voter's own receiver stays within its tolerance.
Vote node_vote(const std::string& voter, const ledger::Transaction& tx,
               const ledger::LedgerState& state, const EnvView& env,
               const ConsensusConfig& config);

/// Destination-side verdict on a grant arriving by cross-chain trade. The
/// grant is evaluated as an additional transmitter; the still-locked source
/// grant keeps counting, which errs on the safe side while both exist.
Vote node_vote_incoming(const std::string& voter, const Digest& probe_id,
                        const ledger::GrantRecord& incoming,
                        const ledger::LedgerState& state, const EnvView& env,
                        const ConsensusConfig& config);

/// Unanimity: accepted iff every zone member voted approve. A missing vote
/// rejects; conflicting votes from one voter reject (equivocation); votes
/// from outside the zone are ignored.
bool finalize(const std::set<std::string>& zone_voters,
              std::span<const Vote> votes);

struct PendingTx {
  ledger::Transaction tx;
  ledger::ZoneRecord zone;

  friend bool operator==(const PendingTx&, const PendingTx&) = default;
};

struct BlockFormation {
  std::optional<ledger::Block> block;  // absent when nothing survived
  std::vector<PendingTx> included;
  std::vector<PendingTx> dropped;
  ledger::LedgerState next_state;
};

/// Deterministic block assembly from individually accepted transactions.
/// Orders by (timestamp, tx_id), then re-validates each one sequentially
/// against the evolving scratch state: ledger application plus, for trades,
/// the full interference checks for every protection point and zone voter.
/// Votes ran against the committed tip, so cross-transaction interactions
/// surface only here; whatever fails is dropped.
BlockFormation form_block(const ledger::LedgerState& tip_state,
                          const EnvView& external_env,
                          const radio::PropagationModel& prop,
                          const ConsensusConfig& config,
                          std::vector<PendingTx> pending, uint64_t next_height,
                          const Digest& prev_hash);

}  // namespace specchain::consensus
