#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "josc/model.hpp"
#include "josc/rounding.hpp"
#include "josc/scenario.hpp"
#include "josc/types.hpp"

namespace josc {

/// Prices on the dualized constraints of the resource-allocation problem.
/// latency_price is kept strictly positive (floored) so the latency terms
/// never vanish from the stationarity condition.
struct DualState {
  std::vector<double> latency_price;   ///< per vehicle
  std::vector<double> capacity_price;  ///< per server
  Matrix share_cap_price;              ///< N x M, on f_ij <= F_j
  Matrix nonneg_price;                 ///< N x M, on f_ij >= 0
  int iteration = 0;
};

/// Partial derivatives of the dual function with respect to each price:
/// the (signed) slack of the corresponding constraint at the current f.
/// Positive entries mean slack, negative entries mean violation.
struct DualGradients {
  std::vector<double> latency;   ///< budget_s - committed latency, seconds
  std::vector<double> capacity;  ///< F_j - sum of shares, cycles/s
  Matrix share_cap;              ///< F_j - f_ij
  Matrix nonneg;                 ///< f_ij
};

struct AllocationTracePoint {
  int iteration = 0;
  double max_scaled_change = 0;        ///< stopping metric, dimensionless
  double dual_objective = 0;
  double max_capacity_violation_rel = 0;
  double max_latency_violation_s = 0;
  double best_feasible_utility = 0;
  double sum_f_hz = 0;
};

struct AllocationResult {
  Matrix f;                  ///< N x M, zero outside the assignment
  double utility = 0;        ///< full system utility, local vehicles included
  double dual_objective = 0;
  double comp_slackness = 0; ///< max |price * slack|, scaled dimensionless
  DualState final_prices;    ///< state the best response was last taken against
  std::vector<AllocationTracePoint> trace;
  bool converged = false;
  int iterations = 0;
};

struct AllocateOptions {
  double price_change_tol = 1e-6;  ///< stop when max scaled price change drops below
  int max_iterations = 5000;
  double step = 0.01;              ///< constant factor on the scaled price steps
  bool diminishing_steps = false;  ///< divide the step by sqrt(t) when set
  bool throw_on_nonconvergence = true;
  bool record_trace = true;
};

/// Initial prices: latency at the positivity floor, everything else zero.
DualState initial_dual_state(int num_vehicles, int num_rsus);

/// Best response of the shares to the current prices: per assigned pair the
/// unique root of the stationarity condition inside (lowest share keeping the
/// utility defined, F_j], or F_j when no interior root exists. Unassigned
/// pairs get zero.
Matrix primal_step(const Scenario& s, const IntegerSelection& sel, const DualState& state);

DualGradients dual_gradients(const Scenario& s, const IntegerSelection& sel,
                             const Matrix& f, const DualState& state);

/// Projected price update mu <- max(0, mu + step * violation), each step
/// scaled to the natural units of its constraint (latency steps per second of
/// violation; capacity steps per unit of relative violation, weighted by the
/// squared assignment count that sets the dual curvature there).
DualState update_multipliers(const Scenario& s, const IntegerSelection& sel,
                             const DualState& state, const DualGradients& grads,
                             const AllocateOptions& opts = {});

/// Scaled stationarity residual of a candidate share for an assigned pair,
/// relative to the dominant term of the condition. Used both by the root
/// finder and by verification.
double stationarity_residual(const Scenario& s, const IntegerSelection& sel,
                             const DualState& state, int vehicle, int rsu_id, double f_hz);

/// Dual ascent on the prices until the maximum scaled price change falls
/// below tolerance. Tracks the best feasible iterate (shares scaled down to
/// capacity when needed) and returns it; with all vehicles local, returns a
/// zero matrix and the constant local utility. Throws infeasible_error when
/// no shares can meet some latency budget, and, when configured, a
/// convergence error carrying the best feasible iterate.
AllocationResult allocate(const Scenario& s, const IntegerSelection& sel,
                          const AllocateOptions& opts = {});

/// Thrown by allocate on non-convergence; best holds the strongest feasible
/// iterate observed (always defined for feasible selections).
class allocation_convergence_error : public std::runtime_error {
 public:
  allocation_convergence_error(AllocationResult best_result, const std::string& what)
      : std::runtime_error(what), best(std::move(best_result)) {}
  AllocationResult best;
};

/// Smallest share letting vehicle i meet its budget on RSU j, from the
/// transformed constraints; infinity when no share suffices.
double min_feasible_share(const TransformedInstance& ti, const Scenario& s,
                          int vehicle, int rsu_id);

/// Demote vehicles to local execution (largest minimum share first) until
/// every server can fit the minimum shares of its assigned vehicles.
/// Demotions are appended to sel.demoted_capacity. Returns demoted count.
int enforce_capacity_feasibility(const Scenario& s, IntegerSelection& sel);

}  // namespace josc
