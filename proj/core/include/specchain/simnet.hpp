// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace specchain::simnet {

/// splitmix64. Seeded, tiny, and bit-identical on every platform, which the
/// standard library distributions do not guarantee.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound). bound must be nonzero.
  uint64_t below(uint64_t bound) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

  /// Uniform integer in [lo, hi], inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

 private:
  uint64_t state_;
};

struct NetworkConfig {
  uint64_t base_latency = 1;  // ticks
  uint64_t jitter = 0;        // max extra ticks, uniform inclusive
  double loss_prob = 0.0;     // must stay below 1
  uint64_t seed = 1;
};

template <typename P>
struct Envelope {
  std::string from;
  std::string to;
  P payload;
};

/// Discrete-event message transport with an integer tick clock. Events fire
/// in (fire_time, sequence) order; all randomness (loss, jitter) comes from
/// one seeded generator, so a (scenario, seed) pair replays identically.
///
/// The payload type P must provide free functions trace_kind(p) and
/// trace_ref(p) returning strings for the event trace.
template <typename P>
class Simulation {
 public:
  using Handler = std::function<void(const Envelope<P>&)>;

  explicit Simulation(const NetworkConfig& config)
      : config_(config), rng_(config.seed) {
    if (config.loss_prob < 0.0 || config.loss_prob >= 1.0) {
      throw std::invalid_argument("loss probability must lie in [0, 1)");
    }
  }

  void add_node(const std::string& id, Handler handler) {
    if (!handlers_.emplace(id, std::move(handler)).second) {
      throw std::invalid_argument("duplicate node id " + id);
    }
  }

  bool has_node(const std::string& id) const { return handlers_.count(id) > 0; }

  /// Unicast with loss and jitter. Throws on an unknown endpoint.
  void send(const std::string& from, const std::string& to, P payload) {
    require_node(from);
    require_node(to);
    uint64_t seq = next_seq_++;
    if (rng_.bernoulli(config_.loss_prob)) {
      ++dropped_;
      if (trace_enabled_) {
        trace_.push_back(line(now_, seq, "drop:" + trace_kind(payload), from, to,
                              trace_ref(payload)));
      }
      return;
    }
    uint64_t latency = config_.base_latency;
    if (config_.jitter > 0) latency += rng_.below(config_.jitter + 1);
    push(now_ + latency, seq, Envelope<P>{from, to, std::move(payload)});
  }

  /// Lossless self-delivery after a fixed delay: the timer primitive.
  void schedule(const std::string& target, uint64_t delay, P payload) {
    require_node(target);
    push(now_ + delay, next_seq_++, Envelope<P>{target, target, std::move(payload)});
  }

  /// Processes one event. Returns false when the queue is empty.
  bool step() {
    if (queue_.empty()) return false;
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.fire_time;
    ++processed_;
    if (trace_enabled_) {
      trace_.push_back(line(ev.fire_time, ev.seq, trace_kind(ev.envelope.payload),
                            ev.envelope.from, ev.envelope.to,
                            trace_ref(ev.envelope.payload)));
    }
    handlers_.at(ev.envelope.to)(ev.envelope);
    return true;
  }

  /// Runs to quiescence, or stops before the first event past t_max.
  void run(std::optional<uint64_t> t_max = std::nullopt) {
    while (!queue_.empty()) {
      if (t_max && queue_.top().fire_time > *t_max) return;
      step();
    }
  }

  uint64_t now() const { return now_; }
  uint64_t scheduled_count() const { return scheduled_; }
  uint64_t processed_count() const { return processed_; }
  uint64_t dropped_count() const { return dropped_; }
  uint64_t pending_count() const { return queue_.size(); }

  void enable_trace(bool on) { trace_enabled_ = on; }
  const std::vector<std::string>& trace() const { return trace_; }

 private:
  struct Event {
    uint64_t fire_time;
    uint64_t seq;
    Envelope<P> envelope;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.seq > b.seq;
    }
  };

  void require_node(const std::string& id) const {
    if (!handlers_.count(id)) throw std::invalid_argument("unknown node " + id);
  }

  void push(uint64_t fire_time, uint64_t seq, Envelope<P> envelope) {
    ++scheduled_;
    queue_.push(Event{fire_time, seq, std::move(envelope)});
  }

  static std::string line(uint64_t time, uint64_t seq, const std::string& kind,
                          const std::string& from, const std::string& to,
                          const std::string& ref) {
    return std::to_string(time) + " " + std::to_string(seq) + " " + kind + " " +
           from + " " + to + " " + ref;
  }

  NetworkConfig config_;
  Rng rng_;
  std::map<std::string, Handler> handlers_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  uint64_t now_ = 0;
  uint64_t next_seq_ = 0;
  uint64_t scheduled_ = 0;
  uint64_t processed_ = 0;
  uint64_t dropped_ = 0;
  bool trace_enabled_ = false;
  std::vector<std::string> trace_;
};

}  // namespace specchain::simnet
