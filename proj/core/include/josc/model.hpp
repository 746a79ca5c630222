#pragma once

#include <span>

#include "josc/scenario.hpp"
#include "josc/types.hpp"

namespace josc {

// Matrix layout conventions used throughout:
//   x : N x (M+1), column 0 = execute locally, column j = offload to RSU j.
//   f : N x M, column j-1 = computation share on RSU j, cycles/s.

struct LinkDelay {
  double travel_s = 0;
  double comm_s = 0;
  double compute_s = 0;
  double total_s = 0;
};

/// Latency constraints rewritten against the local-execution baseline:
/// offloading vehicle i to RSU j is feasible iff
///   fixed_offset_s(i,j) + cycles_i / f_ij <= budget_s(i).
struct TransformedInstance {
  Matrix fixed_offset_s;             ///< N x M: travel + comm - local delay
  std::vector<double> budget_s;      ///< N: max latency - local delay
  std::vector<double> local_delay_s; ///< N: cycles / local capacity
};

/// Achievable uplink rate over a link of the given distance, bit/s.
double rate_bps(const RadioParams& radio, double distance_m);

/// Upload time for the task input over the given rate; rate must be positive.
double comm_time_s(const Task& task, double rate_bps);

/// Execution time of the task on an edge share of f_hz cycles/s.
double vec_compute_time_s(const Task& task, double f_hz);

/// Execution time of the vehicle's task on its own processor.
double local_time_s(const Vehicle& v);

/// Trip-time component of an offload to RSU j under the scenario's prefix
/// convention (through segment j, or up to its entry).
double travel_time_s(const Scenario& s, int rsu_id);

/// Full delay decomposition for offloading vehicle (0-based index) to RSU j
/// with an edge share of f_hz.
LinkDelay offload_delay(const Scenario& s, int vehicle, int rsu_id, double f_hz);

/// Completion time of vehicle i's task under a one-hot placement row and the
/// matching resource row. x_row has M+1 entries (column 0 = local), f_row M.
double task_delay_s(const Scenario& s, int vehicle, std::span<const double> x_row,
                    std::span<const double> f_row);

/// Satisfaction for completing a task in delay_s seconds. Increasing in
/// earliness, logarithmic; defined while 1 + beta - delay > 0.
double utility(const Scenario& s, double delay_s);

/// Sum of per-vehicle utilities under full placement and resource matrices.
double system_utility(const Scenario& s, const Matrix& x, const Matrix& f);

/// Rewrite the latency constraints against the local baseline; the offsets
/// depend only on the scenario (trip and upload times are resource-free).
TransformedInstance transform(const Scenario& s);

}  // namespace josc
