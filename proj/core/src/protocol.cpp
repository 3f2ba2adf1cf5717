// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace specchain::protocol {
namespace {

constexpr char kDecisionChainId[] = "decision";

template <class... Ts>
struct Overload : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overload(Ts...) -> Overload<Ts...>;

std::string short_ref(const Digest& digest) {
  return to_hex(digest).substr(0, 16);
}

std::string short_ref(const ledger::Transaction& tx) {
  return short_ref(ledger::tx_id(tx));
}

/// Second '/'-separated segment of a retry-loop key: the trade id.
std::string loop_trade(const std::string& key) {
  auto first = key.find('/');
  if (first == std::string::npos) return "";
  auto second = key.find('/', first + 1);
  return key.substr(first + 1, second == std::string::npos
                                   ? std::string::npos
                                   : second - first - 1);
}

ledger::GrantRecord record_from(const ledger::GenesisGrantData& g) {
  ledger::GrantRecord rec;
  rec.id = g.grant_id;
  rec.holder = g.holder_id;
  rec.radio = g.radio;
  rec.location = g.location;
  rec.tier = g.tier;
  rec.weight = g.weight;
  rec.active = g.active;
  return rec;
}

}  // namespace

std::string trace_kind(const Payload& payload) {
  return std::visit(
      Overload{
          [](const StartTrade&) { return "StartTrade"; },
          [](const StartCross&) { return "StartCross"; },
          [](const Propose&) { return "Propose"; },
          [](const VoteMsg&) { return "Vote"; },
          [](const VoteTimeout&) { return "VoteTimeout"; },
          [](const Submit&) { return "Submit"; },
          [](const FormBlockTimer&) { return "FormBlock"; },
          [](const Commit&) { return "Commit"; },
          [](const Lock&) { return "Lock"; },
          [](const LockAck&) { return "LockAck"; },
          [](const DestVerdict&) { return "DestVerdict"; },
          [](const ProbeAssign&) { return "ProbeAssign"; },
          [](const ProbeRequest&) { return "ProbeRequest"; },
          [](const ProbeResult&) { return "ProbeResult"; },
          [](const Attest&) { return "Attest"; },
          [](const AbortVote&) { return "AbortVote"; },
          [](const CommitMint&) { return "CommitMint"; },
          [](const CommitRetire&) { return "CommitRetire"; },
          [](const AbortInstr&) { return "Abort"; },
          [](const AbortRequest&) { return "AbortRequest"; },
          [](const Ack&) { return "Ack"; },
          [](const LockExpiry&) { return "LockExpiry"; },
          [](const DecisionTimeout&) { return "DecisionTimeout"; },
          [](const RetryTick&) { return "Retry"; },
      },
      payload);
}

std::string trace_ref(const Payload& payload) {
  return std::visit(
      Overload{
          [](const StartTrade& p) { return p.trade.seller_grant_id; },
          [](const StartCross& p) { return p.trade_id; },
          [](const Propose& p) { return short_ref(p.tx); },
          [](const VoteMsg& p) {
            return short_ref(p.vote.tx) +
                   (p.vote.verdict == consensus::Verdict::kApprove ? "/approve"
                                                                   : "/reject");
          },
          [](const VoteTimeout& p) { return p.round_ref.substr(0, 16); },
          [](const Submit& p) { return short_ref(p.tx); },
          [](const FormBlockTimer&) { return std::string("-"); },
          [](const Commit& p) { return p.block_ref; },
          [](const Lock& p) { return p.trade_id; },
          [](const LockAck& p) { return p.trade_id; },
          [](const DestVerdict& p) {
            return p.trade_id + (p.accepted ? "/accept" : "/reject");
          },
          [](const ProbeAssign& p) { return p.trade_id; },
          [](const ProbeRequest& p) { return p.trade_id; },
          [](const ProbeResult& p) {
            return p.trade_id + (p.accepted ? "/accept" : "/reject");
          },
          [](const Attest& p) { return p.trade_id; },
          [](const AbortVote& p) { return p.trade_id; },
          [](const CommitMint& p) { return p.trade_id; },
          [](const CommitRetire& p) { return p.trade_id; },
          [](const AbortInstr& p) { return p.trade_id; },
          [](const AbortRequest& p) { return p.trade_id; },
          [](const Ack& p) { return p.scope + "/" + p.trade_id; },
          [](const LockExpiry& p) { return p.trade_id; },
          [](const DecisionTimeout& p) { return p.trade_id; },
          [](const RetryTick& p) { return p.loop_key; },
      },
      payload);
}

World::World(WorldConfig config, std::vector<ChainSetup> chains)
    : config_(std::move(config)), sim_(config_.net) {
  if (chains.empty()) throw std::invalid_argument("world needs a chain");
  if (config_.notary_quorum == 0 ||
      (!config_.notary_ids.empty() &&
       config_.notary_quorum > config_.notary_ids.size())) {
    throw std::invalid_argument("notary quorum out of range");
  }
  uint64_t span = config_.net.base_latency + config_.net.jitter;
  vote_timeout_ = config_.consensus.vote_timeout_ticks
                      ? config_.consensus.vote_timeout_ticks
                      : 2 * span + 1;
  retry_interval_ = config_.retry_interval ? config_.retry_interval : 2 * span + 2;
  lock_expiry_ = config_.lock_expiry ? config_.lock_expiry : 40 * (span + 1);
  decision_timeout_ =
      config_.decision_timeout ? config_.decision_timeout : 30 * (span + 1);

  for (auto& setup : chains) {
    if (setup.chain_id.empty() || setup.chain_id == kDecisionChainId) {
      throw std::invalid_argument("bad chain id");
    }
    auto [chain, state] = ledger::make_genesis(setup.genesis);
    ChainRuntime rt;
    rt.chain_id = setup.chain_id;
    rt.chain = std::move(chain);
    rt.state = std::move(state);
    for (const auto& [node_id, node] : rt.state.nodes) {
      if (!node_chain_.emplace(node_id, setup.chain_id).second) {
        throw std::invalid_argument("node on two chains: " + node_id);
      }
    }
    if (!chains_.emplace(setup.chain_id, std::move(rt)).second) {
      throw std::invalid_argument("duplicate chain id " + setup.chain_id);
    }
  }
  {
    auto [chain, state] = ledger::make_genesis(ledger::GenesisSpec{});
    decision_.chain_id = kDecisionChainId;
    decision_.chain = std::move(chain);
    decision_.state = std::move(state);
  }

  auto handler = [this](const std::string& self) {
    return [this, self](const simnet::Envelope<Payload>& env) {
      handle(self, env);
    };
  };
  for (const auto& [node_id, chain_id] : node_chain_) {
    sim_.add_node(node_id, handler(node_id));
  }
  for (const auto& [chain_id, rt] : chains_) {
    sim_.add_node(authority_id(chain_id), handler(authority_id(chain_id)));
  }
  sim_.add_node(authority_id(kDecisionChainId),
                handler(authority_id(kDecisionChainId)));
  for (const auto& notary : config_.notary_ids) {
    sim_.add_node(notary, handler(notary));
  }
}

std::string World::authority_id(const std::string& chain_id) const {
  return "auth:" + chain_id;
}

ChainRuntime& World::runtime_of(const std::string& chain_id) {
  if (chain_id == kDecisionChainId) return decision_;
  return chains_.at(chain_id);
}

const std::string& World::chain_of_node(const std::string& node_id) const {
  return node_chain_.at(node_id);
}

ChainRuntime& World::runtime_of_node(const std::string& node_id) {
  return chains_.at(chain_of_node(node_id));
}

consensus::EnvView World::external_env(const std::string& except_chain) const {
  consensus::EnvView env;
  env.prop = config_.prop;
  for (const auto& [chain_id, rt] : chains_) {
    if (chain_id == except_chain) continue;
    consensus::merge_env(env, consensus::env_from_state(rt.state, config_.prop));
  }
  for (const auto& [trade_id, grant] : reservations_) {
    env.grants.push_back(grant);
  }
  return env;
}

consensus::EnvView World::env_for_chain(const ChainRuntime& rt) const {
  consensus::EnvView env = consensus::env_from_state(rt.state, config_.prop);
  consensus::merge_env(env, external_env(rt.chain_id));
  return env;
}

std::vector<std::string> World::round_recipients(
    const ChainRuntime& rt, const ledger::ZoneRecord& zone,
    const std::string& proposer) const {
  std::vector<std::string> out;
  if (config_.mode == Mode::kFlood) {
    for (const auto& [node_id, node] : rt.state.nodes) {
      if (node_id != proposer) out.push_back(node_id);
    }
    // Zone members from outside this chain's node set (counterparties in a
    // misconfigured scenario) still get asked so unanimity can fail honestly.
    for (const auto& voter : zone.voter_ids) {
      if (voter != proposer && !rt.state.nodes.count(voter) &&
          sim_.has_node(voter)) {
        out.push_back(voter);
      }
    }
  } else {
    for (const auto& voter : zone.voter_ids) {
      if (voter != proposer && sim_.has_node(voter)) out.push_back(voter);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void World::schedule_trade(uint64_t tick, const std::string& seller_node,
                           const ledger::TradeData& trade) {
  sim_.schedule(seller_node, tick, StartTrade{trade});
}

void World::schedule_cross(uint64_t tick, const std::string& seller_node,
                           const StartCross& cross) {
  if (!chains_.count(cross.dest_chain)) {
    throw std::invalid_argument("unknown destination chain " + cross.dest_chain);
  }
  CrossRecord rec;
  rec.trade_id = cross.trade_id;
  rec.source_chain = chain_of_node(seller_node);
  rec.dest_chain = cross.dest_chain;
  rec.grant_id = cross.grant_id;
  rec.minted_grant_id = cross.grant_id;
  rec.start_tick = tick;
  cross_records_.push_back(std::move(rec));
  sim_.schedule(seller_node, tick, cross);
}

void World::run() { sim_.run(config_.t_max); }

void World::handle(const std::string& self, const simnet::Envelope<Payload>& env) {
  if (const auto* tick = std::get_if<RetryTick>(&env.payload)) {
    retry_fire(self, tick->loop_key);
    return;
  }
  if (node_chain_.count(self)) {
    node_handle(self, env);
  } else if (self == authority_id(kDecisionChainId)) {
    decision_handle(env);
  } else if (self.rfind("auth:", 0) == 0) {
    authority_handle(self.substr(5), env);
  } else {
    notary_handle(self, env);
  }
}

// ---------------------------------------------------------------------------
// Radio node actor: proposes transactions, votes, runs probe rounds.

void World::node_handle(const std::string& self,
                        const simnet::Envelope<Payload>& env) {
  std::visit(
      Overload{
          [&](const StartTrade& p) {
            ledger::Transaction tx;
            tx.timestamp = sim_.now();
            tx.auth_id = self;
            tx.data = p.trade;
            start_round(self, std::move(tx));
          },
          [&](const StartCross& p) {
            SourceTrade st;
            st.request = p;
            st.holder = self;
            source_trades_[p.trade_id] = st;
            ledger::LockData lock;
            lock.grant_id = p.grant_id;
            lock.trade_id = p.trade_id;
            lock.dest_chain_id = p.dest_chain;
            lock.expiry_tick = sim_.now() + lock_expiry_;
            ledger::Transaction tx;
            tx.timestamp = sim_.now();
            tx.auth_id = self;
            tx.data = lock;
            start_round(self, std::move(tx));
          },
          [&](const Propose& p) {
            bool in_zone = std::binary_search(p.zone.voter_ids.begin(),
                                              p.zone.voter_ids.end(), self);
            consensus::Vote vote;
            if (in_zone) {
              ChainRuntime& rt = runtime_of_node(self);
              vote = consensus::node_vote(self, p.tx, rt.state,
                                          env_for_chain(rt), config_.consensus);
            } else {
              // Flood-mode filler: acknowledge without evaluating. The
              // outcome only counts zone votes.
              vote.voter = self;
              vote.tx = ledger::tx_id(p.tx);
              vote.verdict = consensus::Verdict::kApprove;
            }
            sim_.send(self, env.from, VoteMsg{vote});
          },
          [&](const ProbeRequest& p) {
            bool in_zone = std::binary_search(p.zone.voter_ids.begin(),
                                              p.zone.voter_ids.end(), self);
            consensus::Vote vote;
            if (in_zone) {
              ChainRuntime& rt = runtime_of_node(self);
              vote = consensus::node_vote_incoming(
                  self, p.probe_id, record_from(p.incoming), rt.state,
                  env_for_chain(rt), config_.consensus);
            } else {
              vote.voter = self;
              vote.tx = p.probe_id;
              vote.verdict = consensus::Verdict::kApprove;
            }
            sim_.send(self, env.from, VoteMsg{vote});
          },
          [&](const VoteMsg& p) { record_vote(self, p.vote); },
          [&](const VoteTimeout& p) {
            if (auto it = rounds_.find(p.round_ref);
                it != rounds_.end() && !it->second.done) {
              finalize_round(self, p.round_ref);
            } else if (auto pit = probes_.find(p.round_ref);
                       pit != probes_.end() && !pit->second.done) {
              finalize_probe(self, p.round_ref);
            }
          },
          [&](const ProbeAssign& p) { start_probe(self, p.trade_id, p.incoming); },
          [&](const Commit&) {},  // notification only
          [&](const auto&) {},
      },
      env.payload);
}

void World::start_round(const std::string& proposer, ledger::Transaction tx) {
  ChainRuntime& rt = runtime_of_node(proposer);
  ledger::ZoneRecord zone = consensus::zone_for_tx(
      tx, rt.state, config_.prop, config_.consensus.sensitivity_dbm);
  std::string ref = ledger::tx_id_hex(tx);
  if (rounds_.count(ref)) return;  // identical tx already in flight

  VoteRound round;
  round.zone = zone;
  round.chain_id = rt.chain_id;
  round.recipients = round_recipients(rt, zone, proposer);
  round.propose_tick = sim_.now();
  round.metric_index = metrics_.size();

  TxMetric metric;
  metric.tx_ref = ref;
  metric.chain_id = rt.chain_id;
  metric.proposer = proposer;
  metric.propose_tick = sim_.now();
  metric.zone_size = zone.voter_ids.size();
  metrics_.push_back(metric);

  if (std::binary_search(zone.voter_ids.begin(), zone.voter_ids.end(),
                         proposer)) {
    round.votes.push_back(consensus::node_vote(
        proposer, tx, rt.state, env_for_chain(rt), config_.consensus));
  }
  for (const auto& recipient : round.recipients) {
    sim_.send(proposer, recipient, Propose{tx, zone});
  }
  bool immediate = round.recipients.empty();
  round.tx = std::move(tx);
  rounds_.emplace(ref, std::move(round));
  if (immediate) {
    finalize_round(proposer, ref);
  } else {
    sim_.schedule(proposer, vote_timeout_, VoteTimeout{ref});
  }
}

void World::record_vote(const std::string& proposer,
                        const consensus::Vote& vote) {
  std::string ref = to_hex(vote.tx);
  if (auto it = rounds_.find(ref); it != rounds_.end()) {
    VoteRound& round = it->second;
    if (round.done) return;
    round.votes.push_back(vote);
    round.responded.insert(vote.voter);
    if (round.responded.size() == round.recipients.size()) {
      finalize_round(proposer, ref);
    }
    return;
  }
  if (auto it = probes_.find(ref); it != probes_.end()) {
    ProbeRound& probe = it->second;
    if (probe.done) return;
    probe.votes.push_back(vote);
    probe.responded.insert(vote.voter);
    if (probe.responded.size() == probe.recipients.size()) {
      finalize_probe(proposer, ref);
    }
  }
}

void World::finalize_round(const std::string& proposer,
                           const std::string& round_ref) {
  VoteRound& round = rounds_.at(round_ref);
  round.done = true;
  std::set<std::string> zone_set(round.zone.voter_ids.begin(),
                                 round.zone.voter_ids.end());
  bool accepted = consensus::finalize(zone_set, round.votes);

  TxMetric& metric = metrics_[round.metric_index];
  metric.finalize_tick = sim_.now();
  metric.latency = sim_.now() - round.propose_tick;
  metric.accepted = accepted;

  if (accepted) {
    sim_.send(proposer, authority_id(round.chain_id),
              Submit{round.tx, round.zone});
  }
}

void World::start_probe(const std::string& buyer, const std::string& trade_id,
                        const ledger::GenesisGrantData& incoming) {
  std::string tag = "probe:" + trade_id;
  Digest probe_id = sha256(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(tag.data()), tag.size()));
  std::string ref = to_hex(probe_id);
  if (probes_.count(ref)) return;

  ChainRuntime& rt = runtime_of_node(buyer);
  ProbeRound probe;
  probe.trade_id = trade_id;
  probe.probe_id = probe_id;
  probe.incoming = incoming;
  // Destination zone: the buyer plus every local node that would hear the
  // incoming transmitter. The source transmitter keeps counting until the
  // retire commits, so only the addition needs approval here.
  probe.zone_voters.insert(buyer);
  for (const auto& [node_id, node] : rt.state.nodes) {
    double rx = radio::received_power_at_dbm(config_.prop, incoming.location,
                                             incoming.radio.tx_power_dbm(),
                                             node.location);
    if (rx > config_.consensus.sensitivity_dbm) probe.zone_voters.insert(node_id);
  }
  ledger::ZoneRecord zone;
  zone.voter_ids.assign(probe.zone_voters.begin(), probe.zone_voters.end());
  probe.recipients = round_recipients(rt, zone, buyer);

  probe.votes.push_back(consensus::node_vote_incoming(
      buyer, probe_id, record_from(incoming), rt.state, env_for_chain(rt),
      config_.consensus));
  for (const auto& recipient : probe.recipients) {
    sim_.send(buyer, recipient, ProbeRequest{trade_id, probe_id, incoming, zone});
  }
  bool immediate = probe.recipients.empty();
  probes_.emplace(ref, std::move(probe));
  if (immediate) {
    finalize_probe(buyer, ref);
  } else {
    sim_.schedule(buyer, vote_timeout_, VoteTimeout{ref});
  }
}

void World::finalize_probe(const std::string& buyer,
                           const std::string& probe_ref) {
  ProbeRound& probe = probes_.at(probe_ref);
  probe.done = true;
  bool accepted = consensus::finalize(probe.zone_voters, probe.votes);
  sim_.send(buyer, authority_id(chain_of_node(buyer)),
            ProbeResult{probe.trade_id, accepted});
}

// ---------------------------------------------------------------------------
// Regional chain authority actor.

void World::authority_handle(const std::string& chain_id,
                             const simnet::Envelope<Payload>& env) {
  ChainRuntime& rt = chains_.at(chain_id);
  const std::string self = authority_id(chain_id);
  std::visit(
      Overload{
          [&](const Submit& p) {
            submit_tx(rt, consensus::PendingTx{p.tx, p.zone});
          },
          [&](const FormBlockTimer&) {
            rt.form_scheduled = false;
            form_block_now(rt);
          },
          [&](const Lock& p) {
            // Destination side: lock announcement doubles as the validation
            // request. Idempotent by trade id.
            sim_.send(self, env.from, LockAck{p.trade_id});
            if (dest_trades_.count(p.trade_id)) return;
            DestTrade dt;
            dt.lock = p;
            dest_trades_.emplace(p.trade_id, std::move(dt));
            const std::string& buyer = p.incoming.holder_id;
            bool admissible = rt.state.nodes.count(buyer) > 0 &&
                              p.incoming.tier >= 1 &&
                              p.incoming.tier <= rt.state.tier_count &&
                              !rt.state.grants.count(p.incoming.grant_id);
            if (admissible) {
              sim_.send(self, buyer, ProbeAssign{p.trade_id, p.incoming});
            } else {
              // The grant could never be minted here; reject without a vote.
              DestTrade& bad = dest_trades_.at(p.trade_id);
              bad.verdict_known = true;
              bad.accepted = false;
              for (const auto& notary : config_.notary_ids) {
                start_loop(self, "verdict/" + p.trade_id + "/" + notary, notary,
                           DestVerdict{p.trade_id, false, p.source_chain,
                                       p.dest_chain});
              }
            }
          },
          [&](const ProbeResult& p) {
            auto it = dest_trades_.find(p.trade_id);
            if (it == dest_trades_.end()) return;
            DestTrade& dt = it->second;
            if (dt.verdict_known || dt.closed) return;
            dt.verdict_known = true;
            dt.accepted = p.accepted;
            if (p.accepted) {
              // Reserve the incoming transmitter so every interference check
              // world-wide counts it while the transfer is in flight.
              consensus::EnvGrant g;
              g.id = dt.lock.incoming.grant_id;
              g.holder = dt.lock.incoming.holder_id;
              g.location = dt.lock.incoming.location;
              g.radio = dt.lock.incoming.radio;
              reservations_[p.trade_id] = g;
            }
            for (const auto& notary : config_.notary_ids) {
              start_loop(self, "verdict/" + p.trade_id + "/" + notary, notary,
                         DestVerdict{p.trade_id, p.accepted,
                                     dt.lock.source_chain, dt.lock.dest_chain});
            }
          },
          [&](const LockAck& p) {
            // Source side: a notary or the destination acknowledged the lock.
            if (env.from.rfind("auth:", 0) == 0) {
              stop_loop(self, "lockD/" + p.trade_id);
            } else {
              stop_loop(self, "lock/" + p.trade_id + "/" + env.from);
            }
          },
          [&](const CommitMint& p) {
            if (rt.mint_done.count(p.trade_id)) {
              sim_.send(self, env.from, Ack{"mint", p.trade_id});
              return;
            }
            if (rt.mint_pending.count(p.trade_id)) return;
            rt.mint_pending.insert(p.trade_id);
            ledger::Transaction tx;
            tx.timestamp = sim_.now();
            tx.auth_id = p.grant.holder_id;
            tx.data = ledger::CrossMintData{p.trade_id, p.decision_ref, p.grant};
            submit_tx(rt, consensus::PendingTx{
                              tx, consensus::zone_for_tx(
                                      tx, rt.state, config_.prop,
                                      config_.consensus.sensitivity_dbm)});
          },
          [&](const CommitRetire& p) {
            auto st = source_trades_.find(p.trade_id);
            if (st != source_trades_.end()) {
              st->second.decision_seen = true;
              stop_loop(self, "abortreq/" + p.trade_id);
            }
            if (rt.retire_done.count(p.trade_id)) {
              sim_.send(self, env.from, Ack{"retire", p.trade_id});
              return;
            }
            if (rt.retire_pending.count(p.trade_id)) return;
            auto grant_it = rt.state.grants.find(p.grant_id);
            if (grant_it == rt.state.grants.end()) {
              // A commit instruction always follows a lock this chain holds.
              throw std::logic_error("retire for unknown grant " + p.grant_id);
            }
            rt.retire_pending.insert(p.trade_id);
            ledger::Transaction tx;
            tx.timestamp = sim_.now();
            tx.auth_id = grant_it->second.holder;
            tx.data =
                ledger::CrossRetireData{p.grant_id, p.trade_id, p.decision_ref};
            submit_tx(rt, consensus::PendingTx{
                              tx, consensus::zone_for_tx(
                                      tx, rt.state, config_.prop,
                                      config_.consensus.sensitivity_dbm)});
          },
          [&](const AbortInstr& p) {
            // Both authorities of the trade receive this instruction; the
            // trade records are world-global, so the side is decided by
            // whether the locked grant lives on this chain.
            auto st = source_trades_.find(p.trade_id);
            if (st != source_trades_.end() &&
                chain_of_node(st->second.holder) == rt.chain_id) {
              // Source side: unlock unless already resolved.
              st->second.decision_seen = true;
              stop_trade_loops(self, p.trade_id);
              sim_.send(self, env.from, Ack{"abort-s", p.trade_id});
              if (rt.unlock_done.count(p.trade_id) ||
                  rt.unlock_pending.count(p.trade_id)) {
                return;
              }
              const std::string& grant_id = st->second.request.grant_id;
              auto grant_it = rt.state.grants.find(grant_id);
              if (grant_it == rt.state.grants.end() ||
                  !grant_it->second.locked ||
                  grant_it->second.lock_trade_id != p.trade_id) {
                return;
              }
              rt.unlock_pending.insert(p.trade_id);
              ledger::Transaction tx;
              tx.timestamp = sim_.now();
              tx.auth_id = grant_it->second.holder;
              tx.data = ledger::UnlockData{grant_id, p.trade_id};
              submit_tx(rt, consensus::PendingTx{
                                tx, consensus::zone_for_tx(
                                        tx, rt.state, config_.prop,
                                        config_.consensus.sensitivity_dbm)});
            } else {
              // Destination side: drop the reservation.
              sim_.send(self, env.from, Ack{"abort-d", p.trade_id});
              reservations_.erase(p.trade_id);
              stop_trade_loops(self, p.trade_id);
              if (auto dt = dest_trades_.find(p.trade_id);
                  dt != dest_trades_.end()) {
                dt->second.closed = true;
              }
            }
          },
          [&](const Ack& p) {
            // Per-peer loops carry the peer in the key; try both forms.
            stop_loop(self, p.scope + "/" + p.trade_id);
            stop_loop(self, p.scope + "/" + p.trade_id + "/" + env.from);
          },
          [&](const LockExpiry& p) {
            auto st = source_trades_.find(p.trade_id);
            if (st == source_trades_.end() || st->second.closed ||
                st->second.decision_seen) {
              return;
            }
            if (rt.retire_pending.count(p.trade_id) ||
                rt.unlock_pending.count(p.trade_id)) {
              return;
            }
            auto grant_it = rt.state.grants.find(st->second.request.grant_id);
            if (grant_it == rt.state.grants.end() || !grant_it->second.locked ||
                grant_it->second.lock_trade_id != p.trade_id) {
              return;
            }
            start_loop(self, "abortreq/" + p.trade_id,
                       authority_id(kDecisionChainId),
                       AbortRequest{p.trade_id, rt.chain_id,
                                    st->second.request.dest_chain});
          },
          [&](const auto&) {},
      },
      env.payload);
}

void World::submit_tx(ChainRuntime& rt, consensus::PendingTx pending) {
  rt.pending.push_back(std::move(pending));
  rt.queue_samples.push_back(rt.pending.size());
  if (!rt.form_scheduled) {
    rt.form_scheduled = true;
    sim_.schedule(authority_id(rt.chain_id), config_.form_block_delay,
                  FormBlockTimer{});
  }
}

void World::form_block_now(ChainRuntime& rt) {
  if (rt.pending.empty()) return;
  std::vector<consensus::PendingTx> pending;
  pending.swap(rt.pending);
  consensus::BlockFormation bf = consensus::form_block(
      rt.state, external_env(rt.chain_id), config_.prop, config_.consensus,
      std::move(pending), rt.chain.height() + 1, rt.chain.tip().block_hash);
  if (!bf.block) return;
  rt.chain.append(*bf.block);
  rt.state = std::move(bf.next_state);

  std::set<std::string> notify;
  for (const auto& ptx : bf.included) {
    committed_tx_hook(rt, ptx.tx);
    for (const auto& voter : ptx.zone.voter_ids) {
      if (sim_.has_node(voter)) notify.insert(voter);
    }
  }
  Commit commit{rt.chain.height(), short_ref(rt.chain.tip().block_hash)};
  const std::string self = authority_id(rt.chain_id);
  for (const auto& voter : notify) {
    sim_.send(self, voter, commit);
  }
}

void World::committed_tx_hook(ChainRuntime& rt, const ledger::Transaction& tx) {
  const std::string self = authority_id(rt.chain_id);
  switch (tx.kind()) {
    case ledger::TxKind::kLock: {
      const auto& lock = std::get<ledger::LockData>(tx.data);
      auto st = source_trades_.find(lock.trade_id);
      if (st == source_trades_.end()) return;
      st->second.lock_committed = true;
      const auto& req = st->second.request;
      const auto& grant = rt.state.grants.at(lock.grant_id);
      Lock evidence;
      evidence.trade_id = lock.trade_id;
      evidence.source_chain = rt.chain_id;
      evidence.dest_chain = req.dest_chain;
      evidence.incoming.grant_id = req.grant_id;
      evidence.incoming.holder_id = req.buyer_id;
      evidence.incoming.radio = req.new_radio;
      evidence.incoming.location = req.new_location;
      evidence.incoming.tier = grant.tier;
      evidence.incoming.weight = grant.weight;
      evidence.incoming.active = true;
      for (const auto& notary : config_.notary_ids) {
        start_loop(self, "lock/" + lock.trade_id + "/" + notary, notary,
                   evidence);
      }
      start_loop(self, "lockD/" + lock.trade_id, authority_id(req.dest_chain),
                 evidence);
      uint64_t delay = lock.expiry_tick > sim_.now()
                           ? lock.expiry_tick - sim_.now()
                           : 0;
      sim_.schedule(self, delay, LockExpiry{lock.trade_id});
      break;
    }
    case ledger::TxKind::kUnlock: {
      const auto& unlock = std::get<ledger::UnlockData>(tx.data);
      rt.unlock_pending.erase(unlock.trade_id);
      rt.unlock_done.insert(unlock.trade_id);
      if (auto st = source_trades_.find(unlock.trade_id);
          st != source_trades_.end()) {
        st->second.closed = true;
      }
      break;
    }
    case ledger::TxKind::kCrossRetire: {
      const auto& retire = std::get<ledger::CrossRetireData>(tx.data);
      rt.retire_pending.erase(retire.trade_id);
      rt.retire_done.insert(retire.trade_id);
      if (auto st = source_trades_.find(retire.trade_id);
          st != source_trades_.end()) {
        st->second.closed = true;
      }
      stop_trade_loops(self, retire.trade_id);
      sim_.send(self, authority_id(kDecisionChainId),
                Ack{"retire", retire.trade_id});
      break;
    }
    case ledger::TxKind::kCrossMint: {
      const auto& mint = std::get<ledger::CrossMintData>(tx.data);
      rt.mint_pending.erase(mint.trade_id);
      rt.mint_done.insert(mint.trade_id);
      reservations_.erase(mint.trade_id);
      if (auto dt = dest_trades_.find(mint.trade_id);
          dt != dest_trades_.end()) {
        dt->second.closed = true;
      }
      stop_trade_loops(self, mint.trade_id);
      sim_.send(self, authority_id(kDecisionChainId),
                Ack{"mint", mint.trade_id});
      break;
    }
    default:
      break;
  }
}

// ---------------------------------------------------------------------------
// Notary actor.

void World::notary_handle(const std::string& self,
                          const simnet::Envelope<Payload>& env) {
  NotaryState& ns = notaries_[self];
  std::visit(
      Overload{
          [&](const Lock& p) {
            ns.lock_seen.emplace(p.trade_id, p);
            sim_.send(self, env.from, LockAck{p.trade_id});
            notary_ready_check(self, p.trade_id);
          },
          [&](const DestVerdict& p) {
            ns.verdicts[p.trade_id] = p.accepted;
            sim_.send(self, env.from, Ack{"verdict", p.trade_id});
            if (!p.accepted && !ns.reported.count(p.trade_id)) {
              ns.reported.insert(p.trade_id);
              start_loop(self, "abortv/" + p.trade_id,
                         authority_id(kDecisionChainId),
                         AbortVote{p.trade_id, self, p.source_chain,
                                   p.dest_chain});
              return;
            }
            notary_ready_check(self, p.trade_id);
          },
          [&](const Ack& p) { stop_loop(self, p.scope + "/" + p.trade_id); },
          [&](const auto&) {},
      },
      env.payload);
}

void World::notary_ready_check(const std::string& self,
                               const std::string& trade_id) {
  NotaryState& ns = notaries_[self];
  if (ns.reported.count(trade_id)) return;
  auto evidence = ns.lock_seen.find(trade_id);
  if (evidence == ns.lock_seen.end()) return;
  auto verdict = ns.verdicts.find(trade_id);
  if (verdict == ns.verdicts.end() || !verdict->second) return;
  ns.reported.insert(trade_id);
  start_loop(self, "attest/" + trade_id, authority_id(kDecisionChainId),
             Attest{trade_id, self, evidence->second});
}

// ---------------------------------------------------------------------------
// Decision chain authority actor.

void World::decision_handle(const simnet::Envelope<Payload>& env) {
  const std::string self = authority_id(kDecisionChainId);
  std::visit(
      Overload{
          [&](const Attest& p) {
            sim_.send(self, env.from, Ack{"attest", p.trade_id});
            DecisionState& ds =
                learn_of_trade(p.trade_id, p.evidence.source_chain,
                               p.evidence.dest_chain);
            if (!ds.evidence) ds.evidence = p.evidence;
            if (ds.phase != ledger::DecisionPhase::kLocked) return;
            ds.attests.insert(p.notary_id);
            maybe_attested(p.trade_id);
          },
          [&](const AbortVote& p) {
            sim_.send(self, env.from, Ack{"abortv", p.trade_id});
            DecisionState& ds =
                learn_of_trade(p.trade_id, p.source_chain, p.dest_chain);
            if (ds.phase == ledger::DecisionPhase::kLocked) {
              decide_abort(p.trade_id);
            } else if (ds.phase == ledger::DecisionPhase::kAborted) {
              push_abort_instructions(p.trade_id);
            }
          },
          [&](const AbortRequest& p) {
            sim_.send(self, env.from, Ack{"abortreq", p.trade_id});
            DecisionState& ds =
                learn_of_trade(p.trade_id, p.source_chain, p.dest_chain);
            if (ds.phase == ledger::DecisionPhase::kLocked) {
              decide_abort(p.trade_id);
            } else if (ds.phase == ledger::DecisionPhase::kAborted) {
              // The authorities may only now be known; repeat the orders.
              push_abort_instructions(p.trade_id);
            }
          },
          [&](const Ack& p) {
            stop_loop(self, p.scope + "/" + p.trade_id);
            auto it = decisions_.find(p.trade_id);
            if (it == decisions_.end()) return;
            DecisionState& ds = it->second;
            if (p.scope == "mint") ds.mint_acked = true;
            if (p.scope == "retire") ds.retire_acked = true;
            if (ds.phase == ledger::DecisionPhase::kAttested && ds.mint_acked &&
                ds.retire_acked) {
              append_decision(p.trade_id, ledger::DecisionPhase::kCommitted,
                              ds.quorum);
              ds.phase = ledger::DecisionPhase::kCommitted;
            }
          },
          [&](const DecisionTimeout& p) {
            auto it = decisions_.find(p.trade_id);
            if (it != decisions_.end() &&
                it->second.phase == ledger::DecisionPhase::kLocked) {
              decide_abort(p.trade_id);
            }
          },
          [&](const auto&) {},
      },
      env.payload);
}

World::DecisionState& World::learn_of_trade(const std::string& trade_id,
                                            const std::string& source_chain,
                                            const std::string& dest_chain) {
  const std::string self = authority_id(kDecisionChainId);
  auto [it, inserted] = decisions_.try_emplace(trade_id);
  DecisionState& ds = it->second;
  if (ds.source_authority.empty() && !source_chain.empty() &&
      chains_.count(source_chain)) {
    ds.source_authority = authority_id(source_chain);
  }
  if (ds.dest_authority.empty() && !dest_chain.empty() &&
      chains_.count(dest_chain)) {
    ds.dest_authority = authority_id(dest_chain);
  }
  if (inserted) {
    append_decision(trade_id, ledger::DecisionPhase::kLocked, {});
    ds.phase = ledger::DecisionPhase::kLocked;
    sim_.schedule(self, decision_timeout_, DecisionTimeout{trade_id});
  }
  return ds;
}

void World::maybe_attested(const std::string& trade_id) {
  const std::string self = authority_id(kDecisionChainId);
  DecisionState& ds = decisions_.at(trade_id);
  if (ds.phase != ledger::DecisionPhase::kLocked) return;
  if (ds.attests.size() < config_.notary_quorum) return;
  if (!ds.evidence || ds.source_authority.empty() || ds.dest_authority.empty()) {
    return;
  }
  ds.quorum = ds.attests;
  ds.attested_ref =
      append_decision(trade_id, ledger::DecisionPhase::kAttested, ds.quorum);
  ds.phase = ledger::DecisionPhase::kAttested;
  start_loop(self, "mint/" + trade_id, ds.dest_authority,
             CommitMint{trade_id, ds.attested_ref, ds.evidence->incoming});
  start_loop(self, "retire/" + trade_id, ds.source_authority,
             CommitRetire{trade_id, ds.attested_ref,
                          ds.evidence->incoming.grant_id});
}

void World::decide_abort(const std::string& trade_id) {
  DecisionState& ds = decisions_.at(trade_id);
  append_decision(trade_id, ledger::DecisionPhase::kAborted, ds.attests);
  ds.phase = ledger::DecisionPhase::kAborted;
  push_abort_instructions(trade_id);
}

void World::push_abort_instructions(const std::string& trade_id) {
  const std::string self = authority_id(kDecisionChainId);
  DecisionState& ds = decisions_.at(trade_id);
  if (!ds.source_authority.empty()) {
    start_loop(self, "abort-s/" + trade_id, ds.source_authority,
               AbortInstr{trade_id});
  }
  if (!ds.dest_authority.empty()) {
    start_loop(self, "abort-d/" + trade_id, ds.dest_authority,
               AbortInstr{trade_id});
  }
}

Digest World::append_decision(const std::string& trade_id,
                              ledger::DecisionPhase phase,
                              const std::set<std::string>& notaries) {
  ledger::Transaction tx;
  tx.timestamp = sim_.now();
  tx.auth_id = authority_id(kDecisionChainId);
  ledger::DecisionData data;
  data.trade_id = trade_id;
  data.phase = phase;
  data.notary_ids.assign(notaries.begin(), notaries.end());
  tx.data = data;

  ledger::Block block = ledger::make_block(
      decision_.chain.height() + 1, decision_.chain.tip().block_hash, {tx},
      {ledger::ZoneRecord{}});
  if (auto err = ledger::apply_block(decision_.state, block)) {
    throw std::logic_error("decision chain rejected " + trade_id + ": " +
                           err->reason);
  }
  decision_.chain.append(block);
  return ledger::tx_id(tx);
}

// ---------------------------------------------------------------------------
// Retry plumbing.

void World::start_loop(const std::string& owner, const std::string& key,
                       const std::string& target, Payload payload) {
  auto [it, inserted] = loops_[owner].try_emplace(key, RetryLoop{target, payload});
  if (!inserted) return;
  sim_.send(owner, target, std::move(payload));
  sim_.schedule(owner, retry_interval_, RetryTick{key});
}

void World::stop_loop(const std::string& owner, const std::string& key) {
  if (auto it = loops_.find(owner); it != loops_.end()) it->second.erase(key);
}

void World::stop_trade_loops(const std::string& owner,
                             const std::string& trade_id) {
  auto it = loops_.find(owner);
  if (it == loops_.end()) return;
  for (auto loop = it->second.begin(); loop != it->second.end();) {
    if (loop_trade(loop->first) == trade_id) {
      loop = it->second.erase(loop);
    } else {
      ++loop;
    }
  }
}

void World::retry_fire(const std::string& owner, const std::string& key) {
  auto it = loops_.find(owner);
  if (it == loops_.end()) return;
  auto loop = it->second.find(key);
  if (loop == it->second.end()) return;
  sim_.send(owner, loop->second.target, loop->second.payload);
  sim_.schedule(owner, retry_interval_, RetryTick{key});
}

// ---------------------------------------------------------------------------
// Results.

std::vector<TxMetric> World::tx_metrics() const {
  std::set<std::string> committed;
  auto scan = [&committed](const ChainRuntime& rt) {
    for (const auto& block : rt.chain.blocks()) {
      for (const auto& tx : block.txs) committed.insert(ledger::tx_id_hex(tx));
    }
  };
  for (const auto& [chain_id, rt] : chains_) scan(rt);
  scan(decision_);

  std::vector<TxMetric> out = metrics_;
  for (auto& metric : out) {
    metric.committed = committed.count(metric.tx_ref) > 0;
  }
  return out;
}

}  // namespace specchain::protocol
