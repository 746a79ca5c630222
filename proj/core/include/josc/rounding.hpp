#pragma once

#include <vector>

#include "josc/scenario.hpp"
#include "josc/selection.hpp"
#include "josc/types.hpp"

namespace josc {

/// Whether the matching may keep a vehicle local through an explicit
/// per-vehicle stay-local node (the default), or only through being left
/// unmatched (the bare construction).
enum class RoundingMode { local_nodes, paper };

struct GraphEdge {
  int vehicle = 0;    ///< 0-based row index
  int rsu_id = 0;     ///< 1-based server
  int copy = 0;       ///< 1-based copy node of that server
  double weight = 0;  ///< fractional mass carried, in (0, 1]
  double profit = 0;  ///< utility of the full assignment at the reference shares
};

/// Vehicles-to-server-copies graph. Server j contributes copies_per_rsu[j-1]
/// copy nodes, each receiving at most one unit of fractional mass; a
/// vehicle's mass on a server is split across consecutive copies in vehicle
/// order, so every edge weight is positive and every copy's incident weight
/// is at most one.
struct BipartiteGraph {
  int num_vehicles = 0;
  std::vector<int> copies_per_rsu;      ///< ceil of each server's column mass
  std::vector<GraphEdge> edges;
  std::vector<double> local_profit;     ///< per vehicle, utility of staying local
  std::vector<bool> edge_usable;        ///< profit defined (delay inside utility domain)
};

struct MatchedEdge {
  int vehicle = 0;
  int rsu_id = 0;
  int copy = 0;
};

struct IntegerSelection {
  Matrix x;                            ///< N x (M+1) one-hot rows, column 0 local
  std::vector<MatchedEdge> matched;
  std::vector<int> demoted_latency;    ///< vehicles sent local after matching
  std::vector<int> demoted_capacity;   ///< vehicles sent local to fit minimum shares
};

BipartiteGraph build_graph(const Scenario& s, const Matrix& x_prime,
                           const Matrix& f_reference);

/// Maximum-total-profit assignment of vehicles to copy nodes (plus stay-local
/// nodes under RoundingMode::local_nodes). Unmatched vehicles execute locally.
IntegerSelection max_profit_matching(const Scenario& s, const BipartiteGraph& graph,
                                     RoundingMode mode = RoundingMode::local_nodes);

/// Graph construction, matching, and a latency check of every matched pair at
/// the reference shares; violating vehicles are demoted to local execution.
IntegerSelection round_selection(const Scenario& s, const Matrix& x_prime,
                                 const Matrix& f_reference,
                                 RoundingMode mode = RoundingMode::local_nodes);

/// Exact maximum-weight assignment on a rectangular profit matrix; absent
/// pairs carry zero profit, so leaving a row unmatched is never worse than a
/// negative-profit match. Returns total profit; row_to_col holds -1 for
/// unmatched rows. O(n^3) in the padded square size.
double hungarian_max_profit(const Matrix& profit, std::vector<int>& row_to_col);

}  // namespace josc
