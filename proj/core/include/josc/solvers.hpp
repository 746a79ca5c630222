#pragma once

#include <limits>
#include <string>
#include <vector>

#include "josc/allocation.hpp"
#include "josc/rounding.hpp"
#include "josc/scenario.hpp"
#include "josc/selection.hpp"

namespace josc {

struct OuterTracePoint {
  int iteration = 0;
  double utility = 0;
  int x_changes = 0;           ///< vehicles whose placement moved this round
  int inner_iterations = 0;    ///< price-update rounds spent in allocation
  double relaxed_objective = 0;
  bool alloc_converged = true;
};

struct Solution {
  IntegerSelection selection;
  Matrix f;                           ///< N x M
  std::vector<double> delay_s;
  std::vector<double> utility_per_vehicle;
  double system_utility = 0;
  std::vector<OuterTracePoint> outer_trace;
  std::vector<std::vector<AllocationTracePoint>> alloc_traces;  ///< per outer round
  bool feasible = false;
  bool outer_converged = true;
  std::string algo;

  // Fixed-point bookkeeping (josc): the reference shares of the last
  // selection round and the relaxation objective solved on them, which
  // upper-bounds the integer utility at a fixed point.
  Matrix final_reference;
  double final_relaxed_objective = std::numeric_limits<double>::quiet_NaN();
  double final_iterate_utility = std::numeric_limits<double>::quiet_NaN();
};

struct JoscOptions {
  int max_outer = 20;
  double utility_tol = 1e-6;     ///< outer stop: placement fixed point and
                                 ///< utility change below this
  RoundingMode rounding = RoundingMode::local_nodes;
  RnlpOptions rnlp;
  AllocateOptions alloc;
  bool record_traces = true;
};

/// Alternating placement and resource optimization: candidate sets and the
/// fractional relaxation are solved on reference shares, rounded to an
/// integer placement, and the shares re-optimized for it; the reference for
/// the next round keeps allocated shares for placed pairs and offers
/// join-shares F_j/(n_j+1) elsewhere. Starts all-local on equal-split
/// references; returns the best feasible iterate.
Solution josc(const Scenario& s, const JoscOptions& opts = {});

/// Greedy baseline: vehicles in index order pick the feasible option of
/// highest utility under provisional equal shares F_j/(n_j+1); placed
/// vehicles share each server equally at the end, and any vehicle whose
/// final share breaks its budget is demoted local until stable.
Solution gs(const Scenario& s);

/// Nearest-server baseline: every vehicle offloads to the server closest to
/// its transmit anchor (infeasible vehicles stay local), then shares are
/// optimized by the dual allocation.
Solution ra(const Scenario& s, const AllocateOptions& opts = {});

struct OracleLimits {
  int max_vehicles = 4;
  int max_rsus = 2;
};

/// Exhaustive reference: enumerates every placement, optimizes shares for
/// each feasible one, and returns the best. Refuses instances beyond the
/// limits (refusal_error).
Solution oracle(const Scenario& s, const OracleLimits& limits = {},
                const AllocateOptions& opts = {});

/// System utility of a solved placement (cached on the Solution).
double system_utility(const Scenario& s, const Solution& sol);

struct FeasibilityReport {
  bool ok = true;
  std::string detail;          ///< first violated condition, empty when ok
  double max_latency_excess_s = 0;
  double max_capacity_excess_rel = 0;
};

/// Check a solution against every constraint: latency within 1e-6 s, one-hot
/// placement rows, capacity and share bounds within 1e-9 of each F_j.
FeasibilityReport verify_solution(const Scenario& s, const Solution& sol);

}  // namespace josc
