#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "josc/scenario.hpp"
#include "josc/solvers.hpp"

namespace josc {

/// One experiment grid: algorithms x seeds x sweep values over a base
/// configuration. An empty sweep key means a single point at the base value
/// of num_vehicles.
struct ExperimentSpec {
  GeneratorParams base;
  std::vector<std::string> algos;      ///< subset of {josc, gs, ra, oracle}
  std::vector<std::uint64_t> seeds;
  std::string sweep_key;               ///< num_vehicles | bandwidth_hz | rho | empty
  std::vector<double> sweep_values;
  std::string out_dir;                 ///< empty: no files written
  unsigned threads = 0;                ///< 0: JOSC_THREADS env or hardware
  JoscOptions josc_opts;
  OracleLimits oracle_limits;
};

struct ResultRow {
  std::uint64_t seed = 0;
  std::string algo;
  double sweep_value = 0;
  double system_utility = 0;
  std::vector<int> per_server_counts;
  int outer_iters = 0;
  long inner_iters_total = 0;
  long wall_ms = 0;
  bool feasible = false;
};

struct RunOutputs {
  std::vector<ResultRow> rows;     ///< sorted by (seed, algo, sweep value)
  std::vector<std::string> files;  ///< paths written under out_dir
};

/// Run the grid (seeds x sweep points in parallel, deterministic merge) and
/// write results.csv, per-seed convergence and load traces, and a summary
/// chart when out_dir is set. Solver errors propagate after completed rows
/// are flushed.
RunOutputs run_experiment(const ExperimentSpec& spec);

/// results.csv serialization of rows, exactly as written to disk.
std::string results_csv(const std::vector<ResultRow>& rows);

/// Shortest decimal form that parses back to the same double; the float
/// format used by every file this library writes.
std::string format_double(double v);

/// Thread budget: explicit count, else the JOSC_THREADS environment
/// variable, else hardware concurrency (at least 1).
unsigned resolve_threads(unsigned requested);

}  // namespace josc
