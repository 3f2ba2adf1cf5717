// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/radio.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace specchain::radio {

double path_loss_db(const PropagationModel& model, double distance_m) {
  if (distance_m < 0.0) throw std::invalid_argument("negative distance");
  double d = std::max(distance_m, model.min_distance_m);
  return model.ref_loss_db + 10.0 * model.exponent * std::log10(d / model.d0_m);
}

double received_power_at_dbm(const PropagationModel& model, const Location& tx,
                             double tx_power_dbm, const Location& rx) {
  return received_power_dbm(tx_power_dbm, path_loss_db(model, distance_m(tx, rx)));
}

double aggregate_interference_dbm(std::span<const double> levels_dbm) {
  double sum_mw = 0.0;
  for (double level : levels_dbm) {
    sum_mw += dbm_to_mw(level);
  }
  return mw_to_dbm(sum_mw);
}

bool InterferenceGraph::has_edge(const std::string& from,
                                 const std::string& to) const {
  auto it = out_edges.find(from);
  return it != out_edges.end() && it->second.count(to) > 0;
}

size_t InterferenceGraph::edge_count() const {
  size_t n = 0;
  for (const auto& [_, targets] : out_edges) n += targets.size();
  return n;
}

InterferenceGraph build_interference_graph(std::span<const GraphNode> nodes,
                                           const PropagationModel& model,
                                           double sensitivity_dbm) {
  std::unordered_set<std::string> seen;
  for (const auto& node : nodes) {
    if (!seen.insert(node.id).second) {
      throw std::invalid_argument("duplicate node id: " + node.id);
    }
  }

  InterferenceGraph graph;
  graph.sensitivity_dbm = sensitivity_dbm;
  for (const auto& from : nodes) {
    for (const auto& to : nodes) {
      if (from.id == to.id) continue;
      double rx = received_power_at_dbm(model, from.location,
                                        from.radio.tx_power_dbm(), to.location);
      if (rx >= sensitivity_dbm) {
        graph.out_edges[from.id][to.id] = rx;
      }
    }
  }
  return graph;
}

ValidationZone validation_zone(const ZoneQuery& query,
                               std::span<const ZonePoint> nodes,
                               std::span<const ZonePoint> protection_points,
                               const PropagationModel& model,
                               double sensitivity_dbm) {
  ValidationZone zone;
  zone.voters.insert(query.seller_id);
  zone.voters.insert(query.buyer_id);

  auto affected = [&](const Location& at) {
    double from_new = received_power_at_dbm(model, query.new_location,
                                            query.new_tx_power_dbm, at);
    double from_old = received_power_at_dbm(model, query.old_location,
                                            query.old_tx_power_dbm, at);
    return from_new >= sensitivity_dbm || from_old >= sensitivity_dbm;
  };

  for (const auto& node : nodes) {
    if (affected(node.location)) zone.voters.insert(node.id);
  }
  for (const auto& point : protection_points) {
    if (affected(point.location)) zone.protection_points.insert(point.id);
  }
  return zone;
}

}  // namespace specchain::radio
