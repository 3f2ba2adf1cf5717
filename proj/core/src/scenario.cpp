// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "specchain/tiers.hpp"

namespace specchain::scenario {
namespace {

using json = nlohmann::json;

constexpr uint32_t kSchemaVersion = 1;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& message) {
  throw ScenarioError(origin + ": " + (path.empty() ? "" : path + ": ") +
                      message);
}

void check_keys(const json& obj, const std::string& origin,
                const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      fail(origin, path, "unknown key '" + key + "'");
    }
  }
}

const json& require(const json& obj, const std::string& origin,
                    const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(origin, path, std::string("missing key '") + key + "'");
  return *it;
}

double get_f64(const json& v, const std::string& origin,
               const std::string& path) {
  if (!v.is_number()) fail(origin, path, "expected a number");
  return v.get<double>();
}

uint64_t get_u64(const json& v, const std::string& origin,
                 const std::string& path) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer()) {
    int64_t x = v.get<int64_t>();
    if (x < 0) fail(origin, path, "expected a non-negative integer");
    return static_cast<uint64_t>(x);
  }
  fail(origin, path, "expected a non-negative integer");
}

std::string get_str(const json& v, const std::string& origin,
                    const std::string& path) {
  if (!v.is_string()) fail(origin, path, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& origin,
              const std::string& path) {
  if (!v.is_boolean()) fail(origin, path, "expected a boolean");
  return v.get<bool>();
}

/// dBm config values carry at most one decimal place so the millidB scaling
/// is exact and round trips through the wire format losslessly.
MilliDbm get_dbm(const json& v, const std::string& origin,
                 const std::string& path) {
  double d = get_f64(v, origin, path);
  if (!std::isfinite(d)) fail(origin, path, "dBm value must be finite");
  double tenths = d * 10.0;
  if (std::fabs(tenths - std::round(tenths)) > 1e-6) {
    fail(origin, path, "dBm values use at most one decimal place");
  }
  return static_cast<MilliDbm>(std::llround(tenths) * 100);
}

Location get_location(const json& obj, const std::string& origin,
                      const std::string& path) {
  double x = get_f64(require(obj, origin, path, "x_m"), origin, path + ".x_m");
  double y = get_f64(require(obj, origin, path, "y_m"), origin, path + ".y_m");
  if (!std::isfinite(x) || !std::isfinite(y)) {
    fail(origin, path, "coordinates must be finite");
  }
  return location_from_meters(x, y);
}

uint16_t get_channel(const json& v, const std::string& origin,
                     const std::string& path) {
  uint64_t c = get_u64(v, origin, path);
  if (c > UINT16_MAX) fail(origin, path, "channel out of range");
  return static_cast<uint16_t>(c);
}

void parse_propagation(const json& obj, const std::string& origin,
                       Scenario& s) {
  const std::string path = "propagation";
  check_keys(obj, origin, path,
             {"ref_loss_db", "exponent", "ref_distance_m", "min_distance_m"});
  if (auto it = obj.find("ref_loss_db"); it != obj.end()) {
    s.prop.ref_loss_db = get_f64(*it, origin, path + ".ref_loss_db");
  }
  if (auto it = obj.find("exponent"); it != obj.end()) {
    s.prop.exponent = get_f64(*it, origin, path + ".exponent");
    if (s.prop.exponent <= 0) fail(origin, path, "exponent must be positive");
  }
  if (auto it = obj.find("ref_distance_m"); it != obj.end()) {
    s.prop.d0_m = get_f64(*it, origin, path + ".ref_distance_m");
    if (s.prop.d0_m <= 0) fail(origin, path, "ref_distance_m must be positive");
  }
  if (auto it = obj.find("min_distance_m"); it != obj.end()) {
    s.prop.min_distance_m = get_f64(*it, origin, path + ".min_distance_m");
    if (s.prop.min_distance_m <= 0) {
      fail(origin, path, "min_distance_m must be positive");
    }
  }
}

void parse_consensus(const json& obj, const std::string& origin, Scenario& s) {
  const std::string path = "consensus";
  check_keys(obj, origin, path, {"sensitivity_dbm", "vote_timeout_ticks"});
  if (auto it = obj.find("sensitivity_dbm"); it != obj.end()) {
    s.consensus.sensitivity_dbm =
        mdb_to_dbm(get_dbm(*it, origin, path + ".sensitivity_dbm"));
  }
  if (auto it = obj.find("vote_timeout_ticks"); it != obj.end()) {
    s.consensus.vote_timeout_ticks =
        get_u64(*it, origin, path + ".vote_timeout_ticks");
  }
}

void parse_network(const json& obj, const std::string& origin, Scenario& s) {
  const std::string path = "network";
  check_keys(obj, origin, path, {"base_latency", "jitter", "loss_prob", "seed"});
  if (auto it = obj.find("base_latency"); it != obj.end()) {
    s.net.base_latency = get_u64(*it, origin, path + ".base_latency");
  }
  if (auto it = obj.find("jitter"); it != obj.end()) {
    s.net.jitter = get_u64(*it, origin, path + ".jitter");
  }
  if (auto it = obj.find("loss_prob"); it != obj.end()) {
    s.net.loss_prob = get_f64(*it, origin, path + ".loss_prob");
    if (s.net.loss_prob < 0.0 || s.net.loss_prob >= 1.0) {
      fail(origin, path, "loss_prob must lie in [0, 1)");
    }
  }
  if (auto it = obj.find("seed"); it != obj.end()) {
    s.net.seed = get_u64(*it, origin, path + ".seed");
  }
}

void parse_notaries(const json& obj, const std::string& origin, Scenario& s) {
  const std::string path = "notaries";
  check_keys(obj, origin, path, {"count", "quorum"});
  if (auto it = obj.find("count"); it != obj.end()) {
    s.notary_count = get_u64(*it, origin, path + ".count");
  }
  if (auto it = obj.find("quorum"); it != obj.end()) {
    s.notary_quorum = get_u64(*it, origin, path + ".quorum");
  }
  if (s.notary_quorum == 0 || s.notary_quorum > std::max<uint64_t>(s.notary_count, 1)) {
    fail(origin, path, "quorum must lie in [1, count]");
  }
}

void parse_timing(const json& obj, const std::string& origin, Scenario& s) {
  const std::string path = "timing";
  check_keys(obj, origin, path,
             {"form_block_delay", "lock_expiry", "decision_timeout",
              "retry_interval"});
  if (auto it = obj.find("form_block_delay"); it != obj.end()) {
    s.form_block_delay = get_u64(*it, origin, path + ".form_block_delay");
    if (s.form_block_delay == 0) {
      fail(origin, path, "form_block_delay must be positive");
    }
  }
  if (auto it = obj.find("lock_expiry"); it != obj.end()) {
    s.lock_expiry = get_u64(*it, origin, path + ".lock_expiry");
  }
  if (auto it = obj.find("decision_timeout"); it != obj.end()) {
    s.decision_timeout = get_u64(*it, origin, path + ".decision_timeout");
  }
  if (auto it = obj.find("retry_interval"); it != obj.end()) {
    s.retry_interval = get_u64(*it, origin, path + ".retry_interval");
  }
}

void parse_allocation(const json& obj, const std::string& origin, Scenario& s) {
  const std::string path = "allocation";
  check_keys(obj, origin, path, {"policy", "tier_count"});
  if (auto it = obj.find("policy"); it != obj.end()) {
    std::string policy = get_str(*it, origin, path + ".policy");
    if (policy == "equal") {
      s.genesis.policy = ledger::AllocationPolicy::kEqual;
    } else if (policy == "proportional") {
      s.genesis.policy = ledger::AllocationPolicy::kProportional;
    } else {
      fail(origin, path, "policy must be 'equal' or 'proportional'");
    }
  }
  if (auto it = obj.find("tier_count"); it != obj.end()) {
    uint64_t t = get_u64(*it, origin, path + ".tier_count");
    if (t < 1 || t > 255) fail(origin, path, "tier_count must lie in [1, 255]");
    s.genesis.tier_count = static_cast<uint8_t>(t);
  }
}

void parse_nodes(const json& arr, const std::string& origin, Scenario& s) {
  if (!arr.is_array()) fail(origin, "nodes", "expected an array");
  size_t i = 0;
  for (const auto& item : arr) {
    std::string path = "nodes[" + std::to_string(i++) + "]";
    if (!item.is_object()) fail(origin, path, "expected an object");
    check_keys(item, origin, path,
               {"id", "x_m", "y_m", "balance", "tolerance_dbm"});
    ledger::GenesisNodeData node;
    node.node_id = get_str(require(item, origin, path, "id"), origin,
                           path + ".id");
    if (node.node_id.empty()) fail(origin, path, "id must be non-empty");
    node.location = get_location(item, origin, path);
    if (auto it = item.find("balance"); it != item.end()) {
      node.balance = get_u64(*it, origin, path + ".balance");
    }
    node.tolerance_mdb = get_dbm(require(item, origin, path, "tolerance_dbm"),
                                 origin, path + ".tolerance_dbm");
    s.genesis.nodes.push_back(std::move(node));
  }
}

void parse_points(const json& arr, const std::string& origin, Scenario& s) {
  if (!arr.is_array()) fail(origin, "points", "expected an array");
  size_t i = 0;
  for (const auto& item : arr) {
    std::string path = "points[" + std::to_string(i++) + "]";
    if (!item.is_object()) fail(origin, path, "expected an object");
    check_keys(item, origin, path, {"id", "x_m", "y_m", "threshold_dbm"});
    ledger::GenesisPointData point;
    point.point_id =
        get_str(require(item, origin, path, "id"), origin, path + ".id");
    if (point.point_id.empty()) fail(origin, path, "id must be non-empty");
    point.location = get_location(item, origin, path);
    point.threshold_mdb = get_dbm(require(item, origin, path, "threshold_dbm"),
                                  origin, path + ".threshold_dbm");
    s.genesis.points.push_back(std::move(point));
  }
}

void parse_grants(const json& arr, const std::string& origin, Scenario& s) {
  if (!arr.is_array()) fail(origin, "grants", "expected an array");
  size_t i = 0;
  for (const auto& item : arr) {
    std::string path = "grants[" + std::to_string(i++) + "]";
    if (!item.is_object()) fail(origin, path, "expected an object");
    check_keys(item, origin, path,
               {"id", "holder", "x_m", "y_m", "power_dbm", "channel", "tier",
                "weight", "active"});
    ledger::GenesisGrantData grant;
    grant.grant_id =
        get_str(require(item, origin, path, "id"), origin, path + ".id");
    if (grant.grant_id.empty()) fail(origin, path, "id must be non-empty");
    grant.holder_id = get_str(require(item, origin, path, "holder"), origin,
                              path + ".holder");
    grant.location = get_location(item, origin, path);
    grant.radio.tx_power_mdb = get_dbm(
        require(item, origin, path, "power_dbm"), origin, path + ".power_dbm");
    grant.radio.channel = get_channel(require(item, origin, path, "channel"),
                                      origin, path + ".channel");
    if (auto it = item.find("tier"); it != item.end()) {
      uint64_t t = get_u64(*it, origin, path + ".tier");
      if (t < 1 || t > 255) fail(origin, path, "tier must lie in [1, 255]");
      grant.tier = static_cast<uint8_t>(t);
    }
    if (auto it = item.find("weight"); it != item.end()) {
      uint64_t w = get_u64(*it, origin, path + ".weight");
      if (w < 1 || w > UINT32_MAX) fail(origin, path, "weight out of range");
      grant.weight = static_cast<uint32_t>(w);
    }
    if (auto it = item.find("active"); it != item.end()) {
      grant.active = get_bool(*it, origin, path + ".active");
    }
    s.genesis.grants.push_back(std::move(grant));
  }
}

void parse_workload(const json& obj, const std::string& origin, Scenario& s) {
  const std::string path = "workload";
  check_keys(obj, origin, path, {"script", "random"});
  if (auto it = obj.find("script"); it != obj.end()) {
    if (!it->is_array()) fail(origin, path + ".script", "expected an array");
    size_t i = 0;
    for (const auto& item : *it) {
      std::string p = path + ".script[" + std::to_string(i++) + "]";
      if (!item.is_object()) fail(origin, p, "expected an object");
      check_keys(item, origin, p,
                 {"tick", "seller_grant", "buyer", "x_m", "y_m", "power_dbm",
                  "channel", "price"});
      ScriptTrade t;
      t.tick = get_u64(require(item, origin, p, "tick"), origin, p + ".tick");
      t.seller_grant = get_str(require(item, origin, p, "seller_grant"), origin,
                               p + ".seller_grant");
      t.buyer = get_str(require(item, origin, p, "buyer"), origin, p + ".buyer");
      t.new_location = get_location(item, origin, p);
      t.new_radio.tx_power_mdb =
          get_dbm(require(item, origin, p, "power_dbm"), origin,
                  p + ".power_dbm");
      t.new_radio.channel =
          get_channel(require(item, origin, p, "channel"), origin,
                      p + ".channel");
      if (auto pit = item.find("price"); pit != item.end()) {
        t.price = get_u64(*pit, origin, p + ".price");
      }
      s.script.push_back(std::move(t));
    }
  }
  if (auto it = obj.find("random"); it != obj.end()) {
    const std::string p = path + ".random";
    if (!it->is_object()) fail(origin, p, "expected an object");
    check_keys(*it, origin, p,
               {"count", "cross_fraction", "start_tick", "mean_spacing",
                "max_move_m", "price_max"});
    WorkloadRandom r;
    r.count = get_u64(require(*it, origin, p, "count"), origin, p + ".count");
    if (auto f = it->find("cross_fraction"); f != it->end()) {
      r.cross_fraction = get_f64(*f, origin, p + ".cross_fraction");
      if (r.cross_fraction < 0.0 || r.cross_fraction > 1.0) {
        fail(origin, p, "cross_fraction must lie in [0, 1]");
      }
    }
    if (auto f = it->find("start_tick"); f != it->end()) {
      r.start_tick = get_u64(*f, origin, p + ".start_tick");
    }
    if (auto f = it->find("mean_spacing"); f != it->end()) {
      r.mean_spacing = get_u64(*f, origin, p + ".mean_spacing");
    }
    if (auto f = it->find("max_move_m"); f != it->end()) {
      r.max_move_m = get_f64(*f, origin, p + ".max_move_m");
      if (!(r.max_move_m >= 0.0)) fail(origin, p, "max_move_m must be >= 0");
    }
    if (auto f = it->find("price_max"); f != it->end()) {
      r.price_max = get_u64(*f, origin, p + ".price_max");
    }
    s.random_workload = r;
  }
}

void parse_market(const json& obj, const std::string& origin, Scenario& s) {
  const std::string path = "market";
  check_keys(obj, origin, path, {"capacity", "alpha", "grid_step", "followers"});
  s.market.enabled = true;
  s.market.capacity = get_f64(require(obj, origin, path, "capacity"), origin,
                              path + ".capacity");
  if (s.market.capacity <= 0) fail(origin, path, "capacity must be positive");
  if (auto it = obj.find("alpha"); it != obj.end()) {
    s.market.alpha = get_f64(*it, origin, path + ".alpha");
    if (s.market.alpha < 0.0 || s.market.alpha > 1.0) {
      fail(origin, path, "alpha must lie in [0, 1]");
    }
  }
  if (auto it = obj.find("grid_step"); it != obj.end()) {
    s.market.grid_step = get_f64(*it, origin, path + ".grid_step");
    if (s.market.grid_step < 0) fail(origin, path, "grid_step must be >= 0");
  }
  const json& followers = require(obj, origin, path, "followers");
  if (!followers.is_array() || followers.empty()) {
    fail(origin, path, "followers must be a non-empty array");
  }
  size_t i = 0;
  for (const auto& item : followers) {
    std::string p = path + ".followers[" + std::to_string(i++) + "]";
    if (!item.is_object()) fail(origin, p, "expected an object");
    check_keys(item, origin, p, {"id", "valuation"});
    incentives::FollowerProfile f;
    f.id = get_str(require(item, origin, p, "id"), origin, p + ".id");
    f.valuation = get_f64(require(item, origin, p, "valuation"), origin,
                          p + ".valuation");
    if (f.valuation <= 0) fail(origin, p, "valuation must be positive");
    s.market.followers.push_back(std::move(f));
  }
}

void validate_references(const Scenario& s, const std::string& origin) {
  std::set<std::string> node_ids, point_ids, grant_ids;
  for (const auto& n : s.genesis.nodes) {
    if (!node_ids.insert(n.node_id).second) {
      fail(origin, "nodes", "duplicate id '" + n.node_id + "'");
    }
  }
  for (const auto& p : s.genesis.points) {
    if (!point_ids.insert(p.point_id).second) {
      fail(origin, "points", "duplicate id '" + p.point_id + "'");
    }
  }
  for (const auto& g : s.genesis.grants) {
    if (!grant_ids.insert(g.grant_id).second) {
      fail(origin, "grants", "duplicate id '" + g.grant_id + "'");
    }
    if (!node_ids.count(g.holder_id)) {
      fail(origin, "grants", "grant '" + g.grant_id + "' holder '" +
                                 g.holder_id + "' is not a node");
    }
    if (g.tier > s.genesis.tier_count) {
      fail(origin, "grants",
           "grant '" + g.grant_id + "' tier exceeds tier_count");
    }
  }
  std::set<std::string> seen_entrants;
  for (const auto& e : s.entrants) {
    if (!grant_ids.count(e)) {
      fail(origin, "entrants", "'" + e + "' is not a grant");
    }
    if (!seen_entrants.insert(e).second) {
      fail(origin, "entrants", "duplicate entrant '" + e + "'");
    }
    auto it = std::find_if(s.genesis.grants.begin(), s.genesis.grants.end(),
                           [&](const auto& g) { return g.grant_id == e; });
    if (it->active) {
      fail(origin, "entrants", "'" + e + "' must be an inactive grant");
    }
  }
  size_t i = 0;
  for (const auto& t : s.script) {
    std::string p = "workload.script[" + std::to_string(i++) + "]";
    if (!grant_ids.count(t.seller_grant)) {
      fail(origin, p, "seller_grant '" + t.seller_grant + "' is not a grant");
    }
    if (!node_ids.count(t.buyer)) {
      fail(origin, p, "buyer '" + t.buyer + "' is not a node");
    }
  }
  if (s.chain_count == 0) fail(origin, "chains", "must be at least 1");
  if (s.genesis.nodes.empty()) fail(origin, "nodes", "at least one node required");
}

}  // namespace

Scenario parse_scenario_text(const std::string& text,
                             const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    byte = std::min(byte, text.size());
    size_t line = 1 + static_cast<size_t>(std::count(text.begin(),
                                                     text.begin() + byte, '\n'));
    size_t last_nl = text.rfind('\n', byte > 0 ? byte - 1 : 0);
    size_t col = last_nl == std::string::npos ? byte + 1 : byte - last_nl;
    throw ScenarioError(origin + ":" + std::to_string(line) + ":" +
                        std::to_string(col) + ": " + e.what());
  }
  if (!root.is_object()) fail(origin, "", "top level must be an object");
  check_keys(root, origin, "",
             {"schema", "name", "propagation", "consensus", "network", "chains",
              "notaries", "timing", "allocation", "nodes", "points", "grants",
              "workload", "entrants", "market"});
  uint64_t schema =
      get_u64(require(root, origin, "", "schema"), origin, "schema");
  if (schema != kSchemaVersion) {
    fail(origin, "schema",
         "unsupported schema version " + std::to_string(schema) +
             " (expected " + std::to_string(kSchemaVersion) + ")");
  }

  Scenario s;
  if (auto it = root.find("name"); it != root.end()) {
    s.name = get_str(*it, origin, "name");
  }
  if (auto it = root.find("propagation"); it != root.end()) {
    if (!it->is_object()) fail(origin, "propagation", "expected an object");
    parse_propagation(*it, origin, s);
  }
  if (auto it = root.find("consensus"); it != root.end()) {
    if (!it->is_object()) fail(origin, "consensus", "expected an object");
    parse_consensus(*it, origin, s);
  }
  if (auto it = root.find("network"); it != root.end()) {
    if (!it->is_object()) fail(origin, "network", "expected an object");
    parse_network(*it, origin, s);
  }
  if (auto it = root.find("chains"); it != root.end()) {
    uint64_t k = get_u64(*it, origin, "chains");
    if (k < 1 || k > 64) fail(origin, "chains", "must lie in [1, 64]");
    s.chain_count = static_cast<uint32_t>(k);
  }
  if (auto it = root.find("notaries"); it != root.end()) {
    if (!it->is_object()) fail(origin, "notaries", "expected an object");
    parse_notaries(*it, origin, s);
  }
  if (auto it = root.find("timing"); it != root.end()) {
    if (!it->is_object()) fail(origin, "timing", "expected an object");
    parse_timing(*it, origin, s);
  }
  if (auto it = root.find("allocation"); it != root.end()) {
    if (!it->is_object()) fail(origin, "allocation", "expected an object");
    parse_allocation(*it, origin, s);
  }
  parse_nodes(require(root, origin, "", "nodes"), origin, s);
  if (auto it = root.find("points"); it != root.end()) {
    parse_points(*it, origin, s);
  }
  if (auto it = root.find("grants"); it != root.end()) {
    parse_grants(*it, origin, s);
  }
  if (auto it = root.find("workload"); it != root.end()) {
    if (!it->is_object()) fail(origin, "workload", "expected an object");
    parse_workload(*it, origin, s);
  }
  if (auto it = root.find("entrants"); it != root.end()) {
    if (!it->is_array()) fail(origin, "entrants", "expected an array");
    size_t i = 0;
    for (const auto& item : *it) {
      s.entrants.push_back(
          get_str(item, origin, "entrants[" + std::to_string(i++) + "]"));
    }
  }
  if (auto it = root.find("market"); it != root.end()) {
    if (!it->is_object()) fail(origin, "market", "expected an object");
    parse_market(*it, origin, s);
  }
  validate_references(s, origin);
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

// ---------------------------------------------------------------------------
// Region partitioning.

namespace {

struct Partition {
  int64_t min_x = 0;
  int64_t width = 1;
  uint32_t k = 1;

  uint32_t band(const Location& loc) const {
    if (k == 1) return 0;
    int64_t off = loc.x_mm - min_x;
    if (off < 0) return 0;
    auto idx = static_cast<uint64_t>(off) / static_cast<uint64_t>(width);
    return static_cast<uint32_t>(std::min<uint64_t>(idx, k - 1));
  }
};

Partition make_partition(const Scenario& s, uint32_t k) {
  Partition part;
  part.k = k;
  if (k == 1) return part;
  int64_t min_x = s.genesis.nodes.front().location.x_mm;
  int64_t max_x = min_x;
  for (const auto& n : s.genesis.nodes) {
    min_x = std::min(min_x, n.location.x_mm);
    max_x = std::max(max_x, n.location.x_mm);
  }
  part.min_x = min_x;
  int64_t span = max_x - min_x + 1;
  part.width = (span + k - 1) / k;
  if (part.width < 1) part.width = 1;
  return part;
}

std::string region_id(uint32_t band) { return "r" + std::to_string(band); }

}  // namespace

BuiltSetup build_setup(const Scenario& s, uint64_t seed, protocol::Mode mode,
                       uint32_t chains_override) {
  uint32_t k = chains_override ? chains_override : s.chain_count;
  if (k == 0) throw ScenarioError(s.name + ": chain count must be at least 1");
  Partition part = make_partition(s, k);

  BuiltSetup out;
  std::vector<ledger::GenesisSpec> specs(k);
  for (auto& spec : specs) {
    spec.policy = s.genesis.policy;
    spec.tier_count = s.genesis.tier_count;
  }
  for (const auto& n : s.genesis.nodes) {
    uint32_t band = part.band(n.location);
    specs[band].nodes.push_back(n);
    out.node_chain[n.node_id] = region_id(band);
  }
  for (uint32_t band = 0; band < k; ++band) {
    if (specs[band].nodes.empty()) {
      throw ScenarioError(s.name + ": region " + region_id(band) +
                          " has no nodes; reduce chain count");
    }
  }
  for (const auto& p : s.genesis.points) {
    specs[part.band(p.location)].points.push_back(p);
  }
  for (const auto& g : s.genesis.grants) {
    uint32_t band = part.band(g.location);
    if (out.node_chain.at(g.holder_id) != region_id(band)) {
      throw ScenarioError(s.name + ": grant " + g.grant_id + " and holder " +
                          g.holder_id + " fall in different regions");
    }
    specs[band].grants.push_back(g);
    out.grant_chain[g.grant_id] = region_id(band);
  }
  for (uint32_t band = 0; band < k; ++band) {
    out.chains.push_back(
        protocol::ChainSetup{region_id(band), std::move(specs[band])});
  }

  out.config.prop = s.prop;
  out.config.consensus = s.consensus;
  out.config.net = s.net;
  out.config.net.seed = seed;
  out.config.mode = mode;
  out.config.form_block_delay = s.form_block_delay;
  out.config.retry_interval = s.retry_interval;
  out.config.lock_expiry = s.lock_expiry;
  out.config.decision_timeout = s.decision_timeout;
  out.config.notary_quorum = s.notary_quorum;
  for (uint64_t i = 0; i < s.notary_count; ++i) {
    out.config.notary_ids.push_back("notary:" + std::to_string(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Workload expansion.

namespace {

/// Predicted custody of one genesis grant's lineage, assuming every trade of
/// it succeeds.
struct Lineage {
  std::string current_id;
  std::string holder;
  std::string chain;
  radio::RadioParams radio;
  bool active = true;
};

}  // namespace

std::vector<WorkloadItem> build_workload(const Scenario& s,
                                         const BuiltSetup& setup,
                                         uint64_t seed) {
  std::map<std::string, Lineage> lineages;
  for (const auto& g : s.genesis.grants) {
    Lineage l;
    l.current_id = g.grant_id;
    l.holder = g.holder_id;
    l.chain = setup.grant_chain.at(g.grant_id);
    l.radio = g.radio;
    l.active = g.active;
    lineages[g.grant_id] = std::move(l);
  }
  std::map<std::string, std::vector<std::string>> chain_nodes;
  for (const auto& [node, chain] : setup.node_chain) {
    chain_nodes[chain].push_back(node);  // sorted: map iteration order
  }
  std::vector<std::string> chain_ids;
  for (const auto& [chain, nodes] : chain_nodes) chain_ids.push_back(chain);
  std::map<std::string, Location> node_location;
  for (const auto& n : s.genesis.nodes) node_location[n.node_id] = n.location;

  std::vector<WorkloadItem> out;
  uint64_t next_cross = 0;

  auto emit = [&](uint64_t tick, const std::string& genesis_id,
                  const std::string& buyer, const Location& new_location,
                  const radio::RadioParams& new_radio, uint64_t price) {
    Lineage& l = lineages.at(genesis_id);
    const std::string& buyer_chain = setup.node_chain.at(buyer);
    WorkloadItem item;
    item.tick = tick;
    item.seller_node = l.holder;
    if (buyer_chain == l.chain) {
      item.cross = false;
      item.trade.seller_grant_id = l.current_id;
      item.trade.buyer_id = buyer;
      item.trade.new_location = new_location;
      item.trade.new_radio = new_radio;
      item.trade.price = price;
      ledger::Transaction tx;
      tx.timestamp = tick;
      tx.auth_id = l.holder;
      tx.data = item.trade;
      l.current_id = ledger::minted_grant_id(ledger::tx_id(tx));
    } else {
      item.cross = true;
      item.transfer.trade_id = "xt" + std::to_string(next_cross++);
      item.transfer.grant_id = l.current_id;
      item.transfer.dest_chain = buyer_chain;
      item.transfer.buyer_id = buyer;
      item.transfer.new_location = new_location;
      item.transfer.new_radio = new_radio;
      l.chain = buyer_chain;
    }
    l.holder = buyer;
    l.radio = new_radio;
    out.push_back(std::move(item));
  };

  for (const auto& t : s.script) {
    emit(t.tick, t.seller_grant, t.buyer, t.new_location, t.new_radio, t.price);
  }

  if (s.random_workload) {
    const WorkloadRandom& r = *s.random_workload;
    simnet::Rng rng(seed ^ 0x8BADF00D5EEDF00Dull);
    std::vector<std::string> tradeable;
    for (const auto& g : s.genesis.grants) {
      if (g.active) tradeable.push_back(g.grant_id);
    }
    if (!tradeable.empty()) {
      int64_t move_mm = static_cast<int64_t>(std::llround(r.max_move_m * 1000.0));
      uint64_t tick = r.start_tick;
      for (uint64_t i = 0; i < r.count; ++i) {
        const std::string& genesis_id =
            tradeable[rng.below(tradeable.size())];
        Lineage& l = lineages.at(genesis_id);
        bool cross = chain_ids.size() > 1 && r.cross_fraction > 0.0 &&
                     rng.unit() < r.cross_fraction;
        std::string target_chain = l.chain;
        if (cross) {
          uint64_t pick = rng.below(chain_ids.size() - 1);
          for (const auto& c : chain_ids) {
            if (c == l.chain) continue;
            if (pick == 0) {
              target_chain = c;
              break;
            }
            --pick;
          }
        }
        const auto& nodes = chain_nodes.at(target_chain);
        std::string buyer = nodes[rng.below(nodes.size())];
        if (!cross && nodes.size() > 1) {
          for (int attempt = 0; attempt < 16 && buyer == l.holder; ++attempt) {
            buyer = nodes[rng.below(nodes.size())];
          }
          if (buyer == l.holder) {
            for (const auto& n : nodes) {
              if (n != l.holder) {
                buyer = n;
                break;
              }
            }
          }
        }
        Location base = node_location.at(buyer);
        Location dest{base.x_mm + (move_mm ? rng.range(-move_mm, move_mm) : 0),
                      base.y_mm + (move_mm ? rng.range(-move_mm, move_mm) : 0)};
        uint64_t price = cross ? 0 : rng.below(r.price_max + 1);
        emit(tick, genesis_id, buyer, dest, l.radio, price);
        tick += 1 + (r.mean_spacing ? rng.below(2 * r.mean_spacing) : 0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic scenario families.

namespace {

std::string pad2(uint64_t v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

/// Aggregate received power (dBm) at `rx` over active grants.
double aggregate_at(const Scenario& s, const Location& rx,
                    const std::string& exclude_holder) {
  std::vector<double> levels;
  for (const auto& g : s.genesis.grants) {
    if (!g.active || g.holder_id == exclude_holder) continue;
    levels.push_back(radio::received_power_at_dbm(
        s.prop, g.location, mdb_to_dbm(g.radio.tx_power_mdb), rx));
  }
  return radio::aggregate_interference_dbm(levels);
}

MilliDbm round_dbm_tenths(double dbm) {
  return static_cast<MilliDbm>(std::llround(dbm * 10.0) * 100);
}

}  // namespace

Scenario synth_safety(uint64_t seed) {
  Scenario s;
  s.name = "safety-" + std::to_string(seed);
  s.prop = radio::PropagationModel{40.0, 1.0, 3.2, 1.0};
  s.consensus.sensitivity_dbm = -100.0;
  s.net = simnet::NetworkConfig{1, 2, 0.02, seed};
  s.genesis.policy = ledger::AllocationPolicy::kEqual;
  s.genesis.tier_count = 3;

  simnet::Rng rng(seed * 2654435761u + 1);
  const int64_t side_mm = 3000000;  // 3 km square
  for (uint64_t i = 0; i < 50; ++i) {
    ledger::GenesisNodeData n;
    n.node_id = "n" + pad2(i);
    n.location = Location{rng.range(0, side_mm), rng.range(0, side_mm)};
    n.balance = 1000;
    n.tolerance_mdb = 0;  // filled after grants are placed
    s.genesis.nodes.push_back(n);

    ledger::GenesisGrantData g;
    g.grant_id = "g" + pad2(i);
    g.holder_id = n.node_id;
    g.location = n.location;
    g.radio.tx_power_mdb = 17000 + 100 * static_cast<MilliDbm>(rng.below(61));
    g.radio.channel = static_cast<uint16_t>(1 + rng.below(3));
    g.tier = static_cast<uint8_t>(1 + rng.below(3));
    g.weight = static_cast<uint32_t>(1 + rng.below(3));
    s.genesis.grants.push_back(g);
  }
  for (uint64_t i = 0; i < 5; ++i) {
    ledger::GenesisPointData p;
    p.point_id = "p" + std::to_string(i);
    p.location = Location{rng.range(0, side_mm), rng.range(0, side_mm)};
    double agg = aggregate_at(s, p.location, "");
    double margin = 2.0 + 0.1 * static_cast<double>(rng.below(30));
    p.threshold_mdb = round_dbm_tenths(agg + margin);
    s.genesis.points.push_back(p);
  }
  for (auto& n : s.genesis.nodes) {
    double agg = aggregate_at(s, n.location, n.node_id);
    double margin = 8.0 + 0.1 * static_cast<double>(rng.below(40));
    n.tolerance_mdb = round_dbm_tenths(agg + margin);
  }
  WorkloadRandom w;
  w.count = 200;
  w.cross_fraction = 0.0;
  w.start_tick = 1;
  w.mean_spacing = 2;
  w.max_move_m = 250.0;
  w.price_max = 5;
  s.random_workload = w;
  return s;
}

Scenario synth_latency(uint64_t seed) {
  Scenario s;
  s.name = "latency-" + std::to_string(seed);
  s.prop = radio::PropagationModel{40.0, 1.0, 3.0, 1.0};
  s.consensus.sensitivity_dbm = -100.0;
  s.net = simnet::NetworkConfig{1, 4, 0.0, seed};
  s.genesis.tier_count = 1;

  simnet::Rng rng(seed * 2654435761u + 17);
  const int64_t side_mm = 10000000;  // 10 km square
  for (uint64_t i = 0; i < 100; ++i) {
    ledger::GenesisNodeData n;
    n.node_id = "n" + pad2(i);
    n.location = Location{rng.range(0, side_mm), rng.range(0, side_mm)};
    n.balance = 1000;
    s.genesis.nodes.push_back(n);

    ledger::GenesisGrantData g;
    g.grant_id = "g" + pad2(i);
    g.holder_id = n.node_id;
    g.location = n.location;
    g.radio.tx_power_mdb = 30000;
    g.radio.channel = 1;
    g.tier = 1;
    s.genesis.grants.push_back(g);
  }
  for (uint64_t i = 0; i < 3; ++i) {
    ledger::GenesisPointData p;
    p.point_id = "p" + std::to_string(i);
    p.location = Location{rng.range(0, side_mm), rng.range(0, side_mm)};
    p.threshold_mdb = round_dbm_tenths(aggregate_at(s, p.location, "") + 6.0);
    s.genesis.points.push_back(p);
  }
  for (auto& n : s.genesis.nodes) {
    n.tolerance_mdb = round_dbm_tenths(aggregate_at(s, n.location, n.node_id) + 12.0);
  }
  WorkloadRandom w;
  w.count = 40;
  w.cross_fraction = 0.0;
  w.start_tick = 1;
  w.mean_spacing = 5;
  w.max_move_m = 400.0;
  w.price_max = 3;
  s.random_workload = w;
  return s;
}

Scenario synth_cross(uint64_t seed, uint32_t chains, uint64_t trades,
                     double loss_prob) {
  Scenario s;
  s.name = "cross-" + std::to_string(seed);
  s.prop = radio::PropagationModel{40.0, 1.0, 3.5, 1.0};
  s.consensus.sensitivity_dbm = -100.0;
  s.net = simnet::NetworkConfig{1, 1, loss_prob, seed};
  s.chain_count = chains;
  s.notary_count = 3;
  s.notary_quorum = 2;
  s.genesis.tier_count = 1;

  simnet::Rng rng(seed * 2654435761u + 29);
  const int64_t band_mm = 5000000;   // 5 km per region
  const int64_t height_mm = 5000000;
  uint64_t idx = 0;
  for (uint32_t band = 0; band < chains; ++band) {
    int64_t x0 = static_cast<int64_t>(band) * band_mm;
    for (uint64_t i = 0; i < 16; ++i, ++idx) {
      ledger::GenesisNodeData n;
      n.node_id = "n" + pad2(idx);
      n.location =
          Location{x0 + rng.range(0, band_mm - 1), rng.range(0, height_mm)};
      n.balance = 1000;
      s.genesis.nodes.push_back(n);

      ledger::GenesisGrantData g;
      g.grant_id = "g" + pad2(idx);
      g.holder_id = n.node_id;
      g.location = n.location;
      g.radio.tx_power_mdb = 20000;
      g.radio.channel = 1;
      g.tier = 1;
      s.genesis.grants.push_back(g);
    }
    ledger::GenesisPointData p;
    p.point_id = "p" + std::to_string(band);
    p.location =
        Location{x0 + rng.range(0, band_mm - 1), rng.range(0, height_mm)};
    s.genesis.points.push_back(p);
  }
  for (auto& p : s.genesis.points) {
    p.threshold_mdb = round_dbm_tenths(aggregate_at(s, p.location, "") + 10.0);
  }
  for (auto& n : s.genesis.nodes) {
    n.tolerance_mdb = round_dbm_tenths(aggregate_at(s, n.location, n.node_id) + 15.0);
  }
  WorkloadRandom w;
  w.count = trades;
  w.cross_fraction = 1.0;
  w.start_tick = 1;
  w.mean_spacing = 2;
  w.max_move_m = 300.0;
  w.price_max = 0;
  s.random_workload = w;
  return s;
}

Scenario synth_admission(uint64_t seed) {
  Scenario s;
  s.name = "admission-" + std::to_string(seed);
  s.prop = radio::PropagationModel{40.0, 1.0, 3.0, 1.0};
  s.consensus.sensitivity_dbm = -100.0;
  s.net = simnet::NetworkConfig{1, 0, 0.0, seed};
  s.genesis.policy = ledger::AllocationPolicy::kEqual;
  s.genesis.tier_count = 3;

  simnet::Rng rng(seed * 2654435761u + 43);
  const int64_t side_mm = 2000000;  // 2 km square
  // Upper-tier incumbents of the secondary band: active, far-ranging slack.
  for (uint64_t i = 0; i < 10; ++i) {
    ledger::GenesisNodeData n;
    n.node_id = "a" + pad2(i);
    n.location = Location{rng.range(0, side_mm), rng.range(0, side_mm)};
    n.balance = 1000;
    s.genesis.nodes.push_back(n);

    ledger::GenesisGrantData g;
    g.grant_id = "ga" + pad2(i);
    g.holder_id = n.node_id;
    g.location = n.location;
    g.radio.tx_power_mdb = 16000 + 100 * static_cast<MilliDbm>(rng.below(41));
    g.radio.channel = 1;
    g.tier = 1;
    s.genesis.grants.push_back(g);
  }
  // Lower-tier entrant candidates: inactive, admitted by the experiment.
  for (uint64_t i = 0; i < 6; ++i) {
    ledger::GenesisNodeData n;
    n.node_id = "e" + pad2(i);
    n.location = Location{rng.range(0, side_mm), rng.range(0, side_mm)};
    n.balance = 1000;
    s.genesis.nodes.push_back(n);

    ledger::GenesisGrantData g;
    g.grant_id = "ge" + pad2(i);
    g.holder_id = n.node_id;
    g.location = n.location;
    g.radio.tx_power_mdb = 14000 + 100 * static_cast<MilliDbm>(rng.below(61));
    g.radio.channel = 1;
    g.tier = static_cast<uint8_t>(2 + rng.below(2));
    g.active = false;
    s.genesis.grants.push_back(g);
    s.entrants.push_back(g.grant_id);
  }
  for (uint64_t i = 0; i < 3; ++i) {
    ledger::GenesisPointData p;
    p.point_id = "p" + std::to_string(i);
    p.location = Location{rng.range(0, side_mm), rng.range(0, side_mm)};
    double margin = 3.0 + 0.1 * static_cast<double>(rng.below(20));
    p.threshold_mdb = round_dbm_tenths(aggregate_at(s, p.location, "") + margin);
    s.genesis.points.push_back(p);
  }
  for (auto& n : s.genesis.nodes) {
    n.tolerance_mdb = round_dbm_tenths(aggregate_at(s, n.location, n.node_id) + 20.0);
  }
  return s;
}

}  // namespace specchain::scenario
