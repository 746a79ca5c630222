#include "josc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "josc/errors.hpp"

namespace josc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix all_local_placement(int n, int m) {
  Matrix x(n, m + 1);
  for (int i = 0; i < n; ++i) x(i, 0) = 1.0;
  return x;
}

int placement_of(const Matrix& x, int row) {
  for (int j = 0; j < x.cols; ++j)
    if (x(row, j) == 1.0) return j;
  return -1;
}

// Fill the per-vehicle fields and the cached utility from a placement and its
// shares; utilities outside the domain become -inf instead of throwing so an
// infeasible candidate can still be inspected.
void finalize(const Scenario& s, Solution& sol) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  sol.delay_s.resize(n);
  sol.utility_per_vehicle.resize(n);
  sol.system_utility = 0;
  for (int i = 0; i < n; ++i) {
    const std::span<const double> x_row(&sol.selection.x.data[i * (m + 1)],
                                        static_cast<std::size_t>(m + 1));
    const std::span<const double> f_row(&sol.f.data[i * m], static_cast<std::size_t>(m));
    sol.delay_s[i] = task_delay_s(s, i, x_row, f_row);
    sol.utility_per_vehicle[i] = sol.delay_s[i] < 1.0 + s.utility_beta
                                     ? utility(s, sol.delay_s[i])
                                     : -kInf;
    sol.system_utility += sol.utility_per_vehicle[i];
  }
  sol.feasible = verify_solution(s, sol).ok;
}

// Reference shares for the next selection round: placed pairs keep their
// allocated share, every other pair is offered the share it would get by
// joining that server.
Matrix next_reference(const Scenario& s, const IntegerSelection& sel, const Matrix& f) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  std::vector<int> load(m, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= m; ++j)
      if (sel.x(i, j) == 1.0) ++load[j - 1];
  Matrix ref(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j <= m; ++j) {
      if (sel.x(i, j) == 1.0)
        ref(i, j - 1) = f(i, j - 1);
      else
        ref(i, j - 1) = s.rsus[j - 1].capacity_hz / static_cast<double>(load[j - 1] + 1);
    }
  }
  return ref;
}

}  // namespace

Solution josc(const Scenario& s, const JoscOptions& opts) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();

  Matrix ref(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      ref(i, j) = s.rsus[j].capacity_hz / static_cast<double>(n);

  Matrix prev_x = all_local_placement(n, m);
  double prev_utility = 0;
  for (int i = 0; i < n; ++i) prev_utility += utility(s, local_time_s(s.vehicles[i]));

  AllocateOptions alloc_opts = opts.alloc;
  alloc_opts.throw_on_nonconvergence = false;
  alloc_opts.record_trace = opts.record_traces;

  Solution sol;
  sol.algo = "josc";
  sol.selection.x = prev_x;
  sol.f = Matrix(n, m);
  double best_utility = -kInf;
  bool have_best = false;
  sol.outer_converged = false;

  for (int round = 1; round <= opts.max_outer; ++round) {
    const CandidateSets cands = candidate_sets(s, ref);
    const FractionalSelection frac = solve_rnlp(s, ref, cands, opts.rnlp);
    IntegerSelection sel = round_selection(s, frac.x_prime, ref, opts.rounding);
    enforce_capacity_feasibility(s, sel);
    const AllocationResult alloc = allocate(s, sel, alloc_opts);

    int x_changes = 0;
    for (int i = 0; i < n; ++i)
      if (placement_of(sel.x, i) != placement_of(prev_x, i)) ++x_changes;

    if (opts.record_traces) {
      OuterTracePoint tp;
      tp.iteration = round;
      tp.utility = alloc.utility;
      tp.x_changes = x_changes;
      tp.inner_iterations = alloc.iterations;
      tp.relaxed_objective = frac.objective_value;
      tp.alloc_converged = alloc.converged;
      sol.outer_trace.push_back(tp);
      sol.alloc_traces.push_back(alloc.trace);
    }

    sol.final_reference = ref;
    sol.final_relaxed_objective = frac.objective_value;
    sol.final_iterate_utility = alloc.utility;

    if (!have_best || alloc.utility > best_utility) {
      best_utility = alloc.utility;
      have_best = true;
      sol.selection = sel;
      sol.f = alloc.f;
    }

    // Convergence compares computed iterates only: the all-local start is an
    // arbitrary initializer, so agreeing with it proves nothing and the first
    // stop check waits for the second round.
    const bool fixed_point = x_changes == 0;
    const bool settled = std::abs(alloc.utility - prev_utility) < opts.utility_tol;
    if (round >= 2 && fixed_point && settled) {
      sol.outer_converged = true;
      break;
    }
    prev_x = sel.x;
    prev_utility = alloc.utility;
    ref = next_reference(s, sel, alloc.f);
  }

  finalize(s, sol);
  return sol;
}

Solution gs(const Scenario& s) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();

  Solution sol;
  sol.algo = "gs";
  sol.selection.x = all_local_placement(n, m);
  sol.f = Matrix(n, m);

  std::vector<int> load(m, 0);
  const double domain = 1.0 + s.utility_beta;
  for (int i = 0; i < n; ++i) {
    double best_u = utility(s, local_time_s(s.vehicles[i]));
    int best_j = 0;
    for (int j = 1; j <= m; ++j) {
      const double share = s.rsus[j - 1].capacity_hz / static_cast<double>(load[j - 1] + 1);
      const double delay = offload_delay(s, i, j, share).total_s;
      if (delay > s.vehicles[i].task.max_latency_s || delay >= domain) continue;
      const double u = utility(s, delay);
      // A tie against staying local goes to offloading; among servers the
      // earlier one keeps it.
      if (u > best_u || (best_j == 0 && u == best_u)) {
        best_u = u;
        best_j = j;
      }
    }
    if (best_j > 0) {
      sol.selection.x(i, 0) = 0.0;
      sol.selection.x(i, best_j) = 1.0;
      ++load[best_j - 1];
    }
  }

  // Equal final shares can be thinner than the provisional ones; send anyone
  // who no longer fits back home until the remainder is stable.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      const int j = placement_of(sol.selection.x, i);
      if (j == 0) continue;
      const double share = s.rsus[j - 1].capacity_hz / static_cast<double>(load[j - 1]);
      const double delay = offload_delay(s, i, j, share).total_s;
      if (delay > s.vehicles[i].task.max_latency_s || delay >= domain) {
        sol.selection.x(i, j) = 0.0;
        sol.selection.x(i, 0) = 1.0;
        sol.selection.demoted_latency.push_back(i);
        --load[j - 1];
        changed = true;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    const int j = placement_of(sol.selection.x, i);
    if (j == 0) continue;
    sol.f(i, j - 1) = s.rsus[j - 1].capacity_hz / static_cast<double>(load[j - 1]);
    sol.selection.matched.push_back({i, j, 0});
  }

  if (sol.outer_trace.empty()) {
    OuterTracePoint tp;
    tp.iteration = 1;
    sol.outer_trace.push_back(tp);
  }
  finalize(s, sol);
  sol.outer_trace[0].utility = sol.system_utility;
  return sol;
}

Solution ra(const Scenario& s, const AllocateOptions& opts) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  const TransformedInstance ti = transform(s);

  Solution sol;
  sol.algo = "ra";
  sol.selection.x = all_local_placement(n, m);
  sol.f = Matrix(n, m);

  for (int i = 0; i < n; ++i) {
    int best_j = 1;
    double best_d = kInf;
    for (int j = 1; j <= m; ++j) {
      const double d = distance(s, s.segment_entry_m(j), j);
      if (d < best_d) {
        best_d = d;
        best_j = j;
      }
    }
    if (min_feasible_share(ti, s, i, best_j) <= s.rsus[best_j - 1].capacity_hz) {
      sol.selection.x(i, 0) = 0.0;
      sol.selection.x(i, best_j) = 1.0;
      sol.selection.matched.push_back({i, best_j, 0});
    }
  }
  enforce_capacity_feasibility(s, sol.selection);

  AllocateOptions alloc_opts = opts;
  alloc_opts.throw_on_nonconvergence = false;
  const AllocationResult alloc = allocate(s, sol.selection, alloc_opts);
  sol.f = alloc.f;
  OuterTracePoint tp;
  tp.iteration = 1;
  tp.utility = alloc.utility;
  tp.inner_iterations = alloc.iterations;
  tp.alloc_converged = alloc.converged;
  sol.outer_trace.push_back(tp);
  sol.alloc_traces.push_back(alloc.trace);
  finalize(s, sol);
  return sol;
}

Solution oracle(const Scenario& s, const OracleLimits& limits, const AllocateOptions& opts) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  if (n > limits.max_vehicles || m > limits.max_rsus)
    throw refusal_error("instance too large for exhaustive search: " + std::to_string(n) +
                        " vehicles x " + std::to_string(m) +
                        " servers (limits " + std::to_string(limits.max_vehicles) + " x " +
                        std::to_string(limits.max_rsus) + ")");
  const TransformedInstance ti = transform(s);

  AllocateOptions alloc_opts = opts;
  alloc_opts.throw_on_nonconvergence = false;
  alloc_opts.record_trace = false;

  Solution best;
  best.algo = "oracle";
  double best_utility = -kInf;
  int inner_total = 0;

  std::vector<int> choice(n, 0);  // 0 = local, j = server j
  while (true) {
    IntegerSelection sel;
    sel.x = Matrix(n, m + 1);
    bool plausible = true;
    std::vector<double> need(m, 0.0);
    for (int i = 0; i < n; ++i) {
      sel.x(i, choice[i]) = 1.0;
      if (choice[i] > 0) {
        const double ms = min_feasible_share(ti, s, i, choice[i]);
        if (ms == kInf) {
          plausible = false;
          break;
        }
        need[choice[i] - 1] += ms;
      }
    }
    if (plausible)
      for (int j = 0; j < m; ++j)
        if (need[j] > s.rsus[j].capacity_hz) plausible = false;

    if (plausible) {
      const AllocationResult alloc = allocate(s, sel, alloc_opts);
      inner_total += alloc.iterations;
      if (alloc.utility > best_utility) {
        best_utility = alloc.utility;
        best.selection = sel;
        best.f = alloc.f;
      }
    }

    int pos = n - 1;
    while (pos >= 0 && choice[pos] == m) {
      choice[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++choice[pos];
  }

  OuterTracePoint tp;
  tp.iteration = 1;
  tp.utility = best_utility;
  tp.inner_iterations = inner_total;
  best.outer_trace.push_back(tp);
  finalize(s, best);
  return best;
}

double system_utility(const Scenario& s, const Solution& sol) {
  (void)s;
  return sol.system_utility;
}

FeasibilityReport verify_solution(const Scenario& s, const Solution& sol) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  FeasibilityReport rep;
  auto fail = [&](const std::string& why) {
    if (rep.ok) {
      rep.ok = false;
      rep.detail = why;
    }
  };

  if (sol.selection.x.rows != n || sol.selection.x.cols != m + 1) {
    fail("placement matrix has wrong shape");
    return rep;
  }
  if (sol.f.rows != n || sol.f.cols != m) {
    fail("share matrix has wrong shape");
    return rep;
  }

  for (int i = 0; i < n; ++i) {
    int ones = 0;
    for (int j = 0; j <= m; ++j) {
      const double v = sol.selection.x(i, j);
      if (v == 1.0) ++ones;
      else if (v != 0.0) fail("placement row " + std::to_string(i + 1) + " is not 0/1");
    }
    if (ones != 1) fail("placement row " + std::to_string(i + 1) + " is not one-hot");
  }
  if (!rep.ok) return rep;

  for (int j = 1; j <= m; ++j) {
    const double cap = s.rsus[j - 1].capacity_hz;
    double used = 0;
    for (int i = 0; i < n; ++i) {
      const double share = sol.f(i, j - 1);
      if (share < -1e-9 * cap)
        fail("negative share for vehicle " + std::to_string(i + 1));
      if (share > cap * (1.0 + 1e-9))
        fail("share above server capacity for vehicle " + std::to_string(i + 1));
      if (sol.selection.x(i, j) == 1.0) {
        used += share;
      } else if (std::abs(share) > 1e-9 * cap) {
        fail("share on unassigned pair (" + std::to_string(i + 1) + ", " +
             std::to_string(j) + ")");
      }
    }
    const double excess = (used - cap) / cap;
    rep.max_capacity_excess_rel = std::max(rep.max_capacity_excess_rel, excess);
    if (excess > 1e-9)
      fail("server " + std::to_string(j) + " capacity exceeded");
  }

  for (int i = 0; i < n; ++i) {
    const std::span<const double> x_row(&sol.selection.x.data[i * (m + 1)],
                                        static_cast<std::size_t>(m + 1));
    const std::span<const double> f_row(&sol.f.data[i * m], static_cast<std::size_t>(m));
    double delay;
    try {
      delay = task_delay_s(s, i, x_row, f_row);
    } catch (const model_error&) {
      fail("vehicle " + std::to_string(i + 1) + " has no defined completion time");
      continue;
    }
    const double excess = delay - s.vehicles[i].task.max_latency_s;
    rep.max_latency_excess_s = std::max(rep.max_latency_excess_s, excess);
    if (excess > 1e-6)
      fail("vehicle " + std::to_string(i + 1) + " misses its latency budget");
  }
  return rep;
}

}  // namespace josc
