#include "josc/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "josc/errors.hpp"

namespace josc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn2 = std::log(2.0);

// Cached per-pair constants of the stationarity condition
//   alpha*c / (ln2 * (D*f^2 - c*f)) + theta*c/f^2 - (psi + varrho - omega) = 0
// where D = 1 + beta - travel - comm is the utility headroom at infinite f.
struct PairTerms {
  int vehicle = 0;
  int rsu_id = 0;
  double cycles = 0;
  double headroom = 0;   // D above; must be positive for any defined utility
  double cap_hz = 0;     // F_j
  double lo_hz = 0;      // utility barrier cycles / headroom
  double min_share = 0;  // smallest latency-feasible share
};

std::vector<PairTerms> assigned_pairs(const Scenario& s, const IntegerSelection& sel,
                                      const TransformedInstance& ti) {
  std::vector<PairTerms> pairs;
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j <= m; ++j) {
      if (sel.x(i, j) != 1.0) continue;
      PairTerms p;
      p.vehicle = i;
      p.rsu_id = j;
      p.cycles = s.vehicles[i].task.cycles;
      p.headroom = 1.0 + s.utility_beta - ti.fixed_offset_s(i, j - 1) - ti.local_delay_s[i];
      p.cap_hz = s.rsus[j - 1].capacity_hz;
      p.lo_hz = p.headroom > 0 ? p.cycles / p.headroom : kInf;
      p.min_share = min_feasible_share(ti, s, i, j);
      pairs.push_back(p);
    }
  }
  return pairs;
}

// Value, slope, and dominant-term scale of the stationarity condition.
struct StatEval {
  double value = 0;
  double slope = 0;
  double scale = 1;
};

StatEval eval_stationarity(double alpha, const PairTerms& p, double theta, double net_price,
                           double f) {
  StatEval e;
  const double denom = p.headroom * f * f - p.cycles * f;
  const double t1 = alpha * p.cycles / (kLn2 * denom);
  const double t2 = theta * p.cycles / (f * f);
  e.value = t1 + t2 - net_price;
  e.slope = -t1 * (2.0 * p.headroom * f - p.cycles) / denom - 2.0 * t2 / f;
  e.scale = std::max({std::abs(t1), std::abs(t2), std::abs(net_price)});
  if (e.scale == 0) e.scale = alpha;
  return e;
}

// Unique root of the stationarity condition in (lo_hz, cap_hz], or cap_hz when
// the condition stays positive there. Newton with a bisection safeguard.
double best_response_share(double alpha, const PairTerms& p, double theta, double net_price,
                           double hint) {
  const double hi = p.cap_hz;
  if (eval_stationarity(alpha, p, theta, net_price, hi).value >= 0) return hi;
  double lo = p.lo_hz * (1.0 + 1e-12);
  if (!(lo < hi)) return hi;
  double f = hint;
  if (!(f > lo) || !(f >= hi * 1e-12) || f > hi) f = std::sqrt(lo * hi);
  if (!(f > lo) || f > hi) f = 0.5 * (lo + hi);
  double blo = lo, bhi = hi;
  for (int it = 0; it < 120; ++it) {
    const StatEval e = eval_stationarity(alpha, p, theta, net_price, f);
    if (std::abs(e.value) <= 1e-12 * e.scale) return f;
    if (e.value > 0) blo = f; else bhi = f;
    double next = f - e.value / e.slope;
    if (!(next > blo) || !(next < bhi)) next = 0.5 * (blo + bhi);
    if (next == f) break;
    f = next;
  }
  return f;
}

struct ServerGroup {
  std::vector<int> pair_index;  // into the assigned-pairs list
};

double local_utility_sum(const Scenario& s, const IntegerSelection& sel) {
  double total = 0;
  for (int i = 0; i < s.num_vehicles(); ++i)
    if (sel.x(i, 0) == 1.0) total += utility(s, local_time_s(s.vehicles[i]));
  return total;
}

}  // namespace

double min_feasible_share(const TransformedInstance& ti, const Scenario& s, int vehicle,
                          int rsu_id) {
  const double room = ti.budget_s[vehicle] - ti.fixed_offset_s(vehicle, rsu_id - 1);
  if (!(room > 0)) return kInf;
  return s.vehicles[vehicle].task.cycles / room;
}

DualState initial_dual_state(int num_vehicles, int num_rsus) {
  DualState st;
  st.latency_price.assign(num_vehicles, 1e-12);
  st.capacity_price.assign(num_rsus, 0.0);
  st.share_cap_price = Matrix(num_vehicles, num_rsus);
  st.nonneg_price = Matrix(num_vehicles, num_rsus);
  return st;
}

Matrix primal_step(const Scenario& s, const IntegerSelection& sel, const DualState& state) {
  const TransformedInstance ti = transform(s);
  const std::vector<PairTerms> pairs = assigned_pairs(s, sel, ti);
  Matrix f(s.num_vehicles(), s.num_rsus());
  for (const PairTerms& p : pairs) {
    const double net = state.capacity_price[p.rsu_id - 1] +
                       state.share_cap_price(p.vehicle, p.rsu_id - 1) -
                       state.nonneg_price(p.vehicle, p.rsu_id - 1);
    f(p.vehicle, p.rsu_id - 1) = best_response_share(
        s.utility_alpha, p, state.latency_price[p.vehicle], net, 0.0);
  }
  return f;
}

DualGradients dual_gradients(const Scenario& s, const IntegerSelection& sel, const Matrix& f,
                             const DualState& state) {
  (void)state;
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  const TransformedInstance ti = transform(s);
  DualGradients g;
  g.latency.assign(n, 0.0);
  g.capacity.assign(m, 0.0);
  g.share_cap = Matrix(n, m);
  g.nonneg = Matrix(n, m);
  for (int j = 0; j < m; ++j) g.capacity[j] = s.rsus[j].capacity_hz;
  for (int i = 0; i < n; ++i) {
    g.latency[i] = ti.budget_s[i];
    for (int j = 1; j <= m; ++j) {
      const double share = f(i, j - 1);
      g.share_cap(i, j - 1) = s.rsus[j - 1].capacity_hz - share;
      g.nonneg(i, j - 1) = share;
      if (sel.x(i, j) != 1.0) continue;
      g.latency[i] = ti.budget_s[i] - ti.fixed_offset_s(i, j - 1) -
                     s.vehicles[i].task.cycles / share;
      g.capacity[j - 1] -= share;
    }
  }
  return g;
}

DualState update_multipliers(const Scenario& s, const IntegerSelection& sel,
                             const DualState& state, const DualGradients& grads,
                             const AllocateOptions& opts) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  const double alpha = s.utility_alpha;
  double step = opts.step;
  if (opts.diminishing_steps && state.iteration > 0)
    step /= std::sqrt(static_cast<double>(state.iteration));

  std::vector<int> load(m, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= m; ++j)
      if (sel.x(i, j) == 1.0) ++load[j - 1];

  DualState next = state;
  next.iteration = state.iteration + 1;
  const double floor_theta = 1e-12 * alpha;
  for (int i = 0; i < n; ++i)
    next.latency_price[i] =
        std::max(floor_theta, state.latency_price[i] - step * alpha * grads.latency[i]);
  for (int j = 0; j < m; ++j) {
    const double cap = s.rsus[j].capacity_hz;
    // The squared load matches the curvature of the dual along this price, so
    // crowded servers take proportionally larger steps.
    const double gain = step * alpha * load[j] * load[j] / (cap * cap);
    next.capacity_price[j] = std::max(0.0, state.capacity_price[j] - gain * grads.capacity[j]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double cap = s.rsus[j].capacity_hz;
      const double gain = step * alpha / (cap * cap);
      next.share_cap_price(i, j) =
          std::max(0.0, state.share_cap_price(i, j) - gain * grads.share_cap(i, j));
      next.nonneg_price(i, j) =
          std::max(0.0, state.nonneg_price(i, j) - gain * grads.nonneg(i, j));
    }
  }
  return next;
}

double stationarity_residual(const Scenario& s, const IntegerSelection& sel,
                             const DualState& state, int vehicle, int rsu_id, double f_hz) {
  const TransformedInstance ti = transform(s);
  PairTerms p;
  p.vehicle = vehicle;
  p.rsu_id = rsu_id;
  p.cycles = s.vehicles[vehicle].task.cycles;
  p.headroom =
      1.0 + s.utility_beta - ti.fixed_offset_s(vehicle, rsu_id - 1) - ti.local_delay_s[vehicle];
  p.cap_hz = s.rsus[rsu_id - 1].capacity_hz;
  (void)sel;
  if (!(f_hz > 0) || !(p.headroom * f_hz > p.cycles)) return kInf;
  const double net = state.capacity_price[rsu_id - 1] +
                     state.share_cap_price(vehicle, rsu_id - 1) -
                     state.nonneg_price(vehicle, rsu_id - 1);
  const StatEval e =
      eval_stationarity(s.utility_alpha, p, state.latency_price[vehicle], net, f_hz);
  return e.value / e.scale;
}

AllocationResult allocate(const Scenario& s, const IntegerSelection& sel,
                          const AllocateOptions& opts) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  const double alpha = s.utility_alpha;
  const TransformedInstance ti = transform(s);
  const std::vector<PairTerms> pairs = assigned_pairs(s, sel, ti);
  const double local_part = local_utility_sum(s, sel);

  AllocationResult res;
  res.f = Matrix(n, m);
  if (pairs.empty()) {
    res.utility = local_part;
    res.dual_objective = local_part;
    res.final_prices = initial_dual_state(n, m);
    res.converged = true;
    return res;
  }

  // Every assigned pair must admit some feasible share, and each server must
  // fit the minimum shares of its assignees; callers demote first.
  std::vector<ServerGroup> groups(m);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const PairTerms& p = pairs[k];
    if (p.min_share == kInf)
      throw infeasible_error(p.vehicle + 1,
                             "vehicle " + std::to_string(p.vehicle + 1) +
                                 " cannot meet its latency budget on server " +
                                 std::to_string(p.rsu_id));
    groups[p.rsu_id - 1].pair_index.push_back(static_cast<int>(k));
  }
  for (int j = 0; j < m; ++j) {
    double need = 0;
    for (int k : groups[j].pair_index) need += pairs[k].min_share;
    if (need > s.rsus[j].capacity_hz)
      throw infeasible_error(0, "minimum shares of server " + std::to_string(j + 1) +
                                    " exceed its capacity");
  }

  // Feasible seed: minimum shares plus an equal split of the leftover.
  Matrix best_f(n, m);
  for (int j = 0; j < m; ++j) {
    if (groups[j].pair_index.empty()) continue;
    double need = 0;
    for (int k : groups[j].pair_index) need += pairs[k].min_share;
    const double extra = (s.rsus[j].capacity_hz - need) * (1.0 - 1e-12) /
                         static_cast<double>(groups[j].pair_index.size());
    for (int k : groups[j].pair_index)
      best_f(pairs[k].vehicle, j) = pairs[k].min_share + extra;
  }
  double best_utility = local_part;
  for (const PairTerms& p : pairs)
    best_utility += utility(s, offload_delay(s, p.vehicle, p.rsu_id,
                                             best_f(p.vehicle, p.rsu_id - 1)).total_s);

  DualState state = initial_dual_state(n, m);
  Matrix f(n, m);
  Matrix candidate(n, m);
  bool converged = false;
  int iterations = 0;
  double last_dual = 0;

  for (int t = 1; t <= opts.max_iterations; ++t) {
    iterations = t;
    // Best-response shares, warm-started from the previous iterate.
    for (const PairTerms& p : pairs) {
      const double net = state.capacity_price[p.rsu_id - 1] +
                         state.share_cap_price(p.vehicle, p.rsu_id - 1) -
                         state.nonneg_price(p.vehicle, p.rsu_id - 1);
      f(p.vehicle, p.rsu_id - 1) = best_response_share(
          alpha, p, state.latency_price[p.vehicle], net, f(p.vehicle, p.rsu_id - 1));
    }

    // Repair the iterate into a feasible candidate and keep the best one
    // seen: every share is clamped up to its minimum (tiny margin on top so
    // the deadline holds strictly), then the leftover capacity is spread in
    // proportion to each best response's excess over its minimum. Utilities
    // rise with the share, so filling the capacity is always the right
    // direction.
    double max_cap_viol = 0;
    candidate = f;
    for (int j = 0; j < m; ++j) {
      if (groups[j].pair_index.empty()) continue;
      double used = 0;
      for (int k : groups[j].pair_index) used += f(pairs[k].vehicle, j);
      const double cap = s.rsus[j].capacity_hz;
      max_cap_viol = std::max(max_cap_viol, (used - cap) / cap);

      double floor_sum = 0;
      double excess_sum = 0;
      bool with_margin = true;
      for (int k : groups[j].pair_index) floor_sum += pairs[k].min_share * (1.0 + 1e-12);
      if (floor_sum > cap) {  // equality-tight server: no room for margins
        with_margin = false;
        floor_sum = 0;
        for (int k : groups[j].pair_index) floor_sum += pairs[k].min_share;
      }
      const auto floor_of = [&](const PairTerms& p) {
        return with_margin ? p.min_share * (1.0 + 1e-12) : p.min_share;
      };
      for (int k : groups[j].pair_index)
        excess_sum += std::max(0.0, f(pairs[k].vehicle, j) - floor_of(pairs[k]));
      const double leftover = std::max(0.0, cap - floor_sum) * (1.0 - 1e-12);
      for (int k : groups[j].pair_index) {
        const PairTerms& p = pairs[k];
        const double base = floor_of(p);
        const double ex = std::max(0.0, f(p.vehicle, j) - base);
        const double grow =
            excess_sum > 0 ? leftover * ex / excess_sum
                           : leftover / static_cast<double>(groups[j].pair_index.size());
        candidate(p.vehicle, j) = base + grow;
      }
    }
    double max_lat_viol = 0;
    bool candidate_ok = true;
    for (const PairTerms& p : pairs) {
      const double committed =
          ti.fixed_offset_s(p.vehicle, p.rsu_id - 1) + p.cycles / f(p.vehicle, p.rsu_id - 1);
      max_lat_viol = std::max(max_lat_viol, committed - ti.budget_s[p.vehicle]);
      const double cand_committed = ti.fixed_offset_s(p.vehicle, p.rsu_id - 1) +
                                    p.cycles / candidate(p.vehicle, p.rsu_id - 1);
      if (cand_committed > ti.budget_s[p.vehicle]) candidate_ok = false;
    }
    if (candidate_ok) {
      double cand_utility = local_part;
      for (const PairTerms& p : pairs)
        cand_utility += utility(s, offload_delay(s, p.vehicle, p.rsu_id,
                                                 candidate(p.vehicle, p.rsu_id - 1)).total_s);
      if (cand_utility > best_utility) {
        best_utility = cand_utility;
        best_f = candidate;
      }
    }

    const DualGradients grads = dual_gradients(s, sel, f, state);
    double dual_obj = local_part;
    for (const PairTerms& p : pairs) {
      dual_obj += utility(s, offload_delay(s, p.vehicle, p.rsu_id,
                                           f(p.vehicle, p.rsu_id - 1)).total_s);
      dual_obj += state.latency_price[p.vehicle] * grads.latency[p.vehicle];
      dual_obj += state.share_cap_price(p.vehicle, p.rsu_id - 1) *
                  grads.share_cap(p.vehicle, p.rsu_id - 1);
      dual_obj += state.nonneg_price(p.vehicle, p.rsu_id - 1) * f(p.vehicle, p.rsu_id - 1);
    }
    for (int j = 0; j < m; ++j)
      if (!groups[j].pair_index.empty())
        dual_obj += state.capacity_price[j] * grads.capacity[j];
    last_dual = dual_obj;

    const DualState next = update_multipliers(s, sel, state, grads, opts);
    double change = 0;
    for (const PairTerms& p : pairs) {
      const int i = p.vehicle;
      const int j = p.rsu_id - 1;
      const double cap = s.rsus[j].capacity_hz;
      change = std::max(change,
                        std::abs(next.latency_price[i] - state.latency_price[i]) / alpha);
      change = std::max(change, std::abs(next.capacity_price[j] - state.capacity_price[j]) *
                                    cap / alpha);
      change = std::max(change, std::abs(next.share_cap_price(i, j) -
                                         state.share_cap_price(i, j)) * cap / alpha);
      change = std::max(change,
                        std::abs(next.nonneg_price(i, j) - state.nonneg_price(i, j)) * cap / alpha);
    }

    if (opts.record_trace) {
      AllocationTracePoint tp;
      tp.iteration = t;
      tp.max_scaled_change = change;
      tp.dual_objective = dual_obj;
      tp.max_capacity_violation_rel = std::max(0.0, max_cap_viol);
      tp.max_latency_violation_s = std::max(0.0, max_lat_viol);
      tp.best_feasible_utility = best_utility;
      double sum_f = 0;
      for (const PairTerms& p : pairs) sum_f += f(p.vehicle, p.rsu_id - 1);
      tp.sum_f_hz = sum_f;
      res.trace.push_back(tp);
    }

    res.final_prices = state;  // the prices this round's best response used
    state = next;
    if (change < opts.price_change_tol) {
      converged = true;
      break;
    }
  }

  res.f = best_f;
  res.utility = best_utility;
  res.dual_objective = last_dual;
  res.converged = converged;
  res.iterations = iterations;

  // Complementary slackness at the final prices and best-response shares,
  // scaled to be dimensionless.
  const DualGradients gf = dual_gradients(s, sel, f, state);
  double slackness = 0;
  for (const PairTerms& p : pairs) {
    const int i = p.vehicle;
    const int j = p.rsu_id - 1;
    slackness = std::max(slackness, std::abs(state.latency_price[i] * gf.latency[i]) / alpha);
    slackness = std::max(slackness,
                         std::abs(state.capacity_price[j] * gf.capacity[j]) / alpha);
    slackness = std::max(slackness,
                         std::abs(state.share_cap_price(i, j) * gf.share_cap(i, j)) / alpha);
    slackness = std::max(slackness,
                         std::abs(state.nonneg_price(i, j) * gf.nonneg(i, j)) / alpha);
  }
  res.comp_slackness = slackness;

  if (!converged && opts.throw_on_nonconvergence)
    throw allocation_convergence_error(
        res, "resource allocation did not converge within " +
                 std::to_string(opts.max_iterations) + " iterations");
  return res;
}

int enforce_capacity_feasibility(const Scenario& s, IntegerSelection& sel) {
  const int m = s.num_rsus();
  const TransformedInstance ti = transform(s);
  int demoted = 0;
  for (int j = 1; j <= m; ++j) {
    std::vector<int> assigned;
    for (int i = 0; i < sel.x.rows; ++i)
      if (sel.x(i, j) == 1.0) assigned.push_back(i);
    auto min_share_of = [&](int i) { return min_feasible_share(ti, s, i, j); };
    while (!assigned.empty()) {
      double need = 0;
      for (int i : assigned) need += min_share_of(i);
      if (need <= s.rsus[j - 1].capacity_hz) break;
      // Largest minimum share goes home first; later vehicle on ties.
      std::size_t worst = 0;
      for (std::size_t k = 1; k < assigned.size(); ++k)
        if (min_share_of(assigned[k]) >= min_share_of(assigned[worst])) worst = k;
      const int victim = assigned[worst];
      assigned.erase(assigned.begin() + worst);
      sel.x(victim, j) = 0.0;
      sel.x(victim, 0) = 1.0;
      sel.demoted_capacity.push_back(victim);
      ++demoted;
    }
  }
  if (demoted > 0) {
    std::vector<MatchedEdge> kept;
    for (const MatchedEdge& e : sel.matched)
      if (sel.x(e.vehicle, e.rsu_id) == 1.0) kept.push_back(e);
    sel.matched = std::move(kept);
  }
  return demoted;
}

}  // namespace josc
