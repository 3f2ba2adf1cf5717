// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "specchain/chain.hpp"
#include "specchain/consensus.hpp"
#include "specchain/simnet.hpp"
#include "specchain/state.hpp"

namespace specchain::protocol {

// Messages on the simulated wire. Consensus: Propose, VoteMsg, Commit.
// Cross-chain: Lock, LockAck, DestVerdict, Attest, AbortVote, CommitMint,
// CommitRetire, AbortInstr, AbortRequest, Ack. The rest are local timers and
// kickoffs. Every struct is small enough to copy freely.

struct StartTrade {
  ledger::TradeData trade;
};

struct StartCross {
  std::string trade_id;
  std::string grant_id;
  std::string dest_chain;
  std::string buyer_id;
  Location new_location;
  radio::RadioParams new_radio;
};

struct Propose {
  ledger::Transaction tx;
  ledger::ZoneRecord zone;
};

struct VoteMsg {
  consensus::Vote vote;
};

struct VoteTimeout {
  std::string round_ref;
};

struct Submit {
  ledger::Transaction tx;
  ledger::ZoneRecord zone;
};

struct FormBlockTimer {};

struct Commit {
  uint64_t height = 0;
  std::string block_ref;
};

/// Cross-chain lock announcement: evidence for notaries, validation request
/// for the destination authority.
struct Lock {
  std::string trade_id;
  std::string source_chain;
  std::string dest_chain;
  ledger::GenesisGrantData incoming;  // grant as it would exist on dest
};

struct LockAck {
  std::string trade_id;
};

/// Destination-side zone consensus verdict on the incoming grant. Carries the
/// chain pair so a notary can route an abort without the lock evidence.
struct DestVerdict {
  std::string trade_id;
  bool accepted = false;
  std::string source_chain;
  std::string dest_chain;
};

struct ProbeAssign {
  std::string trade_id;
  ledger::GenesisGrantData incoming;
};

struct ProbeRequest {
  std::string trade_id;
  Digest probe_id{};
  ledger::GenesisGrantData incoming;
  ledger::ZoneRecord zone;
};

struct ProbeResult {
  std::string trade_id;
  bool accepted = false;
};

/// Notary attestation: both facts observed (source lock committed, dest zone
/// accepted). The evidence rides along so the decision chain can push the
/// commit without a separate lookup round.
struct Attest {
  std::string trade_id;
  std::string notary_id;
  Lock evidence;
};

struct AbortVote {
  std::string trade_id;
  std::string notary_id;
  std::string source_chain;
  std::string dest_chain;
};

struct CommitMint {
  std::string trade_id;
  Digest decision_ref{};
  ledger::GenesisGrantData grant;
};

struct CommitRetire {
  std::string trade_id;
  Digest decision_ref{};
  std::string grant_id;
};

struct AbortInstr {
  std::string trade_id;
};

/// Sent by the source authority when a lock expires undecided. The source
/// never unlocks unilaterally: the decision chain serializes the outcome.
struct AbortRequest {
  std::string trade_id;
  std::string source_chain;
  std::string dest_chain;
};

struct Ack {
  std::string scope;  // which retry loop this acknowledges
  std::string trade_id;
};

struct LockExpiry {
  std::string trade_id;
};

struct DecisionTimeout {
  std::string trade_id;
};

struct RetryTick {
  std::string loop_key;
};

using Payload =
    std::variant<StartTrade, StartCross, Propose, VoteMsg, VoteTimeout, Submit,
                 FormBlockTimer, Commit, Lock, LockAck, DestVerdict, ProbeAssign,
                 ProbeRequest, ProbeResult, Attest, AbortVote, CommitMint,
                 CommitRetire, AbortInstr, AbortRequest, Ack, LockExpiry,
                 DecisionTimeout, RetryTick>;

std::string trace_kind(const Payload& payload);
std::string trace_ref(const Payload& payload);

enum class Mode : uint8_t { kZone = 0, kFlood = 1 };

struct WorldConfig {
  radio::PropagationModel prop;
  consensus::ConsensusConfig consensus;
  simnet::NetworkConfig net;
  Mode mode = Mode::kZone;
  uint64_t form_block_delay = 1;
  uint64_t retry_interval = 0;     // 0: derived from the network config
  uint64_t lock_expiry = 0;        // 0: derived
  uint64_t decision_timeout = 0;   // 0: derived
  uint64_t notary_quorum = 1;      // m of the configured notaries
  std::vector<std::string> notary_ids;
  std::optional<uint64_t> t_max;   // safety cap; empty runs to quiescence
};

struct ChainSetup {
  std::string chain_id;
  ledger::GenesisSpec genesis;
};

struct TxMetric {
  std::string tx_ref;  // hex transaction id
  std::string chain_id;
  std::string proposer;
  uint64_t propose_tick = 0;
  uint64_t finalize_tick = 0;
  uint64_t latency = 0;
  uint64_t zone_size = 0;
  bool accepted = false;   // unanimity outcome at the proposer
  bool committed = false;  // landed in a block
};

struct CrossRecord {
  std::string trade_id;
  std::string source_chain;
  std::string dest_chain;
  std::string grant_id;
  std::string minted_grant_id;  // same id: the grant moves, it is not copied
  uint64_t start_tick = 0;
};

/// One chain's runtime: the authority actor that owns the ledger, collects
/// submissions, and forms blocks.
struct ChainRuntime {
  std::string chain_id;
  ledger::Chain chain;
  ledger::LedgerState state;
  std::vector<consensus::PendingTx> pending;
  bool form_scheduled = false;
  std::vector<uint64_t> queue_samples;  // pending size at each submission
  // Cross-trade lifecycle transactions already enqueued or committed here,
  // keyed by trade id. Redelivered instructions ack instead of re-applying.
  std::set<std::string> retire_pending, retire_done;
  std::set<std::string> unlock_pending, unlock_done;
  std::set<std::string> mint_pending, mint_done;
};

/// The simulated world: regional chains, their nodes, the notary committee,
/// and the decision chain, all driven by one seeded event queue.
class World {
 public:
  World(WorldConfig config, std::vector<ChainSetup> chains);

  /// Schedules an intra-chain trade kickoff at the seller node.
  void schedule_trade(uint64_t tick, const std::string& seller_node,
                      const ledger::TradeData& trade);

  /// Schedules a cross-chain trade kickoff at the seller node.
  void schedule_cross(uint64_t tick, const std::string& seller_node,
                      const StartCross& cross);

  void run();

  const std::map<std::string, ChainRuntime>& chains() const { return chains_; }
  const ChainRuntime& decision_chain() const { return decision_; }
  const std::vector<CrossRecord>& cross_trades() const { return cross_records_; }
  std::vector<TxMetric> tx_metrics() const;  // committed flags resolved
  simnet::Simulation<Payload>& sim() { return sim_; }
  const simnet::Simulation<Payload>& sim() const { return sim_; }

  /// Environment of every chain except `except_chain`, plus all in-flight
  /// reserved incoming grants.
  consensus::EnvView external_env(const std::string& except_chain) const;

 private:
  struct VoteRound {
    ledger::Transaction tx;
    ledger::ZoneRecord zone;
    std::string chain_id;
    std::vector<std::string> recipients;  // everyone expected to respond
    std::vector<consensus::Vote> votes;
    std::set<std::string> responded;
    uint64_t propose_tick = 0;
    size_t metric_index = 0;
    bool done = false;
  };

  struct ProbeRound {
    std::string trade_id;
    Digest probe_id{};
    ledger::GenesisGrantData incoming;
    std::set<std::string> zone_voters;
    std::vector<std::string> recipients;
    std::vector<consensus::Vote> votes;
    std::set<std::string> responded;
    bool done = false;
  };

  struct NotaryState {
    std::map<std::string, Lock> lock_seen;  // trade -> evidence
    std::map<std::string, bool> verdicts;   // trade -> dest accepted
    std::set<std::string> reported;         // attest or abort sent
  };

  struct DecisionState {
    std::optional<ledger::DecisionPhase> phase;
    std::set<std::string> attests;
    std::set<std::string> quorum;  // attest set when the quorum was reached
    std::optional<Lock> evidence;  // from the first attestation
    Digest attested_ref{};
    bool mint_acked = false;
    bool retire_acked = false;
    std::string source_authority;
    std::string dest_authority;
  };

  struct SourceTrade {
    StartCross request;
    std::string holder;
    bool lock_committed = false;
    bool decision_seen = false;  // a commit or abort instruction arrived
    bool closed = false;         // retire or unlock committed
  };

  struct DestTrade {
    Lock lock;
    bool verdict_known = false;
    bool accepted = false;
    bool closed = false;  // minted or aborted
  };

  struct RetryLoop {
    std::string target;
    Payload payload;
  };

  // Actor dispatch.
  void handle(const std::string& self, const simnet::Envelope<Payload>& env);
  void node_handle(const std::string& self, const simnet::Envelope<Payload>& env);
  void authority_handle(const std::string& chain_id,
                        const simnet::Envelope<Payload>& env);
  void notary_handle(const std::string& self,
                     const simnet::Envelope<Payload>& env);
  void decision_handle(const simnet::Envelope<Payload>& env);

  // Consensus rounds at the proposer node.
  void start_round(const std::string& proposer, ledger::Transaction tx);
  void record_vote(const std::string& proposer, const consensus::Vote& vote);
  void finalize_round(const std::string& proposer, const std::string& round_ref);

  // Destination-side validation of an incoming grant.
  void start_probe(const std::string& buyer, const std::string& trade_id,
                   const ledger::GenesisGrantData& incoming);
  void finalize_probe(const std::string& buyer, const std::string& probe_ref);

  // Chain authority internals.
  void submit_tx(ChainRuntime& rt, consensus::PendingTx pending);
  void form_block_now(ChainRuntime& rt);
  void committed_tx_hook(ChainRuntime& rt, const ledger::Transaction& tx);

  // Decision chain internals.
  Digest append_decision(const std::string& trade_id,
                         ledger::DecisionPhase phase,
                         const std::set<std::string>& notaries);
  void decide_abort(const std::string& trade_id);
  void push_abort_instructions(const std::string& trade_id);
  DecisionState& learn_of_trade(const std::string& trade_id,
                                const std::string& source_chain,
                                const std::string& dest_chain);
  void maybe_attested(const std::string& trade_id);

  // Notary bookkeeping.
  void notary_ready_check(const std::string& self, const std::string& trade_id);

  // Retry plumbing. Loop keys look like scope/trade or scope/trade/peer.
  void start_loop(const std::string& owner, const std::string& key,
                  const std::string& target, Payload payload);
  void stop_loop(const std::string& owner, const std::string& key);
  void stop_trade_loops(const std::string& owner, const std::string& trade_id);
  void retry_fire(const std::string& owner, const std::string& key);

  ChainRuntime& runtime_of(const std::string& chain_id);
  ChainRuntime& runtime_of_node(const std::string& node_id);
  const std::string& chain_of_node(const std::string& node_id) const;
  consensus::EnvView env_for_chain(const ChainRuntime& rt) const;
  std::vector<std::string> round_recipients(const ChainRuntime& rt,
                                            const ledger::ZoneRecord& zone,
                                            const std::string& proposer) const;
  std::string authority_id(const std::string& chain_id) const;

  WorldConfig config_;
  simnet::Simulation<Payload> sim_;
  std::map<std::string, ChainRuntime> chains_;
  ChainRuntime decision_;
  std::map<std::string, std::string> node_chain_;  // node id -> chain id
  std::map<std::string, VoteRound> rounds_;  // tx hex -> round (at proposer)
  std::map<std::string, ProbeRound> probes_;  // probe hex -> round (at buyer)
  std::map<std::string, NotaryState> notaries_;
  std::map<std::string, DecisionState> decisions_;
  std::map<std::string, SourceTrade> source_trades_;
  std::map<std::string, DestTrade> dest_trades_;
  std::map<std::string, consensus::EnvGrant> reservations_;  // trade -> grant
  std::map<std::string, std::map<std::string, RetryLoop>> loops_;  // owner -> key
  std::vector<TxMetric> metrics_;
  std::vector<CrossRecord> cross_records_;
  uint64_t vote_timeout_ = 1;
  uint64_t retry_interval_ = 1;
  uint64_t lock_expiry_ = 1;
  uint64_t decision_timeout_ = 1;
};

}  // namespace specchain::protocol
