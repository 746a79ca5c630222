#pragma once

#include <vector>

#include "josc/model.hpp"
#include "josc/scenario.hpp"
#include "josc/types.hpp"

namespace josc {

/// Per-vehicle shortlists of servers whose full-offload delay is within a
/// factor rho of the vehicle's best server, evaluated at a reference
/// allocation. The best server always qualifies; ties go to the lowest id.
struct CandidateSets {
  std::vector<std::vector<int>> sets;  ///< ascending RSU ids per vehicle
  std::vector<double> best_delay_s;    ///< per vehicle, min over servers
  std::vector<int> best_rsu;           ///< argmin server id per vehicle
};

struct RnlpOptions {
  double objective_tol = 1e-6;   ///< documented accuracy of objective_value
  double gap_target = 1e-8;      ///< stop once the barrier gap bound is below this
  double barrier_mu0 = 10.0;
  double barrier_shrink = 10.0;
  int max_center_steps = 60;
  int max_newton_steps = 80;
  double armijo_c = 1e-4;
};

/// Relaxed placement where each vehicle may split its task fractionally
/// across its candidate servers and its own processor.
struct FractionalSelection {
  Matrix x_prime;            ///< N x (M+1), rows sum to 1, column 0 = local
  double objective_value = 0;  ///< relaxed system utility, comparable to
                               ///< system_utility of integer placements
  double kkt_residual = 0;     ///< stationarity residual at the returned point
  int newton_steps = 0;
  bool converged = true;
};

CandidateSets candidate_sets(const Scenario& s, const Matrix& f_reference);

/// Maximize the separable concave relaxation of system utility over
/// fractional placements, subject to per-vehicle latency budgets, unit row
/// sums, nonnegativity, and per-server capacity at the reference shares.
/// Interior-point method: log barrier on every inequality, barrier weight
/// divided by barrier_shrink per centering round, Newton steps with Armijo
/// backtracking, until the barrier gap bound falls below gap_target.
FractionalSelection solve_rnlp(const Scenario& s, const Matrix& f_reference,
                               const CandidateSets& cands, const RnlpOptions& opts = {});

}  // namespace josc
