// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "specchain/geometry.hpp"
#include "specchain/units.hpp"

namespace specchain::radio {

struct RadioParams {
  MilliDbm tx_power_mdb = 0;
  uint16_t channel = 0;

  double tx_power_dbm() const { return mdb_to_dbm(tx_power_mdb); }

  friend bool operator==(const RadioParams&, const RadioParams&) = default;
};

/// Log-distance path loss, clamped at min_distance so co-located transmitters
/// stay finite. loss(d) = ref_loss_db + 10 * exponent * log10(max(d, min) / d0).
struct PropagationModel {
  double ref_loss_db = 40.0;
  double d0_m = 1.0;
  double exponent = 3.0;
  double min_distance_m = 1.0;
};

double path_loss_db(const PropagationModel& model, double distance_m);

inline double received_power_dbm(double tx_power_dbm, double path_loss) {
  return tx_power_dbm - path_loss;
}

/// Predicted received power at `rx` from a transmitter at `tx`.
double received_power_at_dbm(const PropagationModel& model, const Location& tx,
                             double tx_power_dbm, const Location& rx);

/// Power sum in the linear milliwatt domain, reported back in dBm.
/// An empty list aggregates to kNoPowerDbm.
double aggregate_interference_dbm(std::span<const double> levels_dbm);

struct GraphNode {
  std::string id;
  Location location;
  RadioParams radio;
};

/// Directed who-hears-whom graph: edge i -> j exists iff the predicted
/// received power at j from i's transmitter reaches the sensitivity floor.
struct InterferenceGraph {
  double sensitivity_dbm = 0.0;
  // out_edges[i][j] = predicted received power at j from i, dBm.
  std::map<std::string, std::map<std::string, double>> out_edges;

  bool has_edge(const std::string& from, const std::string& to) const;
  size_t edge_count() const;
};

InterferenceGraph build_interference_graph(std::span<const GraphNode> nodes,
                                           const PropagationModel& model,
                                           double sensitivity_dbm);

struct ZonePoint {
  std::string id;
  Location location;
};

/// The node subset that must unanimously approve a spectrum trade, plus the
/// protection points whose interference environment the trade touches. The
/// trade changes the radio picture in two places: where the transmitter leaves
/// (old location) and where it lands (new location); every node that hears
/// either is affected, and the counterparties are always included.
struct ValidationZone {
  std::set<std::string> voters;
  std::set<std::string> protection_points;
};

struct ZoneQuery {
  std::string seller_id;        // holder of the grant being moved
  std::string buyer_id;         // node acquiring the grant
  Location old_location;        // transmitter location before the trade
  double old_tx_power_dbm = 0;  // seller grant transmit power
  Location new_location;        // proposed transmitter location
  double new_tx_power_dbm = 0;  // buyer transmit power
};

ValidationZone validation_zone(const ZoneQuery& query,
                               std::span<const ZonePoint> nodes,
                               std::span<const ZonePoint> protection_points,
                               const PropagationModel& model,
                               double sensitivity_dbm);

}  // namespace specchain::radio
