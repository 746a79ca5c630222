#include "josc/selection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "josc/errors.hpp"

namespace josc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn2 = std::log(2.0);

// One fractional variable: vehicle i splitting mass onto candidate server j.
struct Var {
  int vehicle;
  int rsu_id;
  double full_delay_s;   // complete offload delay at the reference shares
  double latency_coef;   // seconds committed per unit mass
  double capacity_coef;  // reference share consumed per unit mass
};

struct Problem {
  const Scenario* s;
  std::vector<Var> vars;
  std::vector<int> vehicle_begin;          // vars grouped by vehicle, CSR-style
  std::vector<int> active_vehicles;        // vehicles that own variables
  std::vector<double> local_delay, budget;
  std::vector<int> cap_servers;            // servers referenced by any variable
  std::vector<int> var_cap_col;            // per var: index into cap_servers
  std::vector<double> cap_limit;           // capacity per entry of cap_servers
  int num_inequalities = 0;
};

double lg(double v) { return std::log2(v); }

// Merit value -objective + mu * barrier; +inf outside the strict interior.
double merit(const Problem& p, double mu, const std::vector<double>& z) {
  const double alpha = p.s->utility_alpha;
  const double dom = 1.0 + p.s->utility_beta;
  double val = 0;
  std::vector<double> cap_used(p.cap_servers.size(), 0.0);
  int v = 0;
  for (std::size_t gi = 0; gi < p.active_vehicles.size(); ++gi) {
    const int i = p.active_vehicles[gi];
    const int end = p.vehicle_begin[gi + 1];
    double mass = 0, lat = 0;
    for (; v < end; ++v) {
      const double zk = z[v];
      if (!(zk > 0)) return kInf;
      const double arg = dom - zk * p.vars[v].full_delay_s;
      if (!(arg > 0)) return kInf;
      val -= alpha * lg(arg);
      val -= mu * std::log(zk);
      mass += zk;
      lat += zk * p.vars[v].latency_coef;
      cap_used[p.var_cap_col[v]] += zk * p.vars[v].capacity_coef;
    }
    const double x0 = 1.0 - mass;
    if (!(x0 > 0)) return kInf;
    const double arg0 = dom - x0 * p.local_delay[i];
    if (!(arg0 > 0)) return kInf;
    val -= alpha * lg(arg0);
    val -= mu * std::log(x0);
    const double slack = p.budget[i] - lat;
    if (!(slack > 0)) return kInf;
    val -= mu * std::log(slack);
  }
  for (std::size_t c = 0; c < p.cap_servers.size(); ++c) {
    const double slack = p.cap_limit[c] - cap_used[c];
    if (!(slack > 0)) return kInf;
    val -= mu * std::log(slack);
  }
  return val;
}

double raw_objective(const Problem& p, const std::vector<double>& z) {
  const double alpha = p.s->utility_alpha;
  const double dom = 1.0 + p.s->utility_beta;
  double val = 0;
  int v = 0;
  for (std::size_t gi = 0; gi < p.active_vehicles.size(); ++gi) {
    const int i = p.active_vehicles[gi];
    const int end = p.vehicle_begin[gi + 1];
    double mass = 0;
    for (; v < end; ++v) {
      val += alpha * lg(dom - z[v] * p.vars[v].full_delay_s);
      mass += z[v];
    }
    val += alpha * lg(dom - (1.0 - mass) * p.local_delay[i]);
  }
  return val;
}

// Gradient of the merit and, when hess is set, the pieces of its Hessian:
// per-vehicle dense blocks plus a rank-one capacity term per server.
struct Derivs {
  std::vector<double> grad;
  std::vector<Eigen::MatrixXd> blocks;     // per active vehicle
  std::vector<double> cap_weight;          // mu / capacity slack^2 per cap server
};

Derivs derivatives(const Problem& p, double mu, const std::vector<double>& z, bool hess) {
  const double alpha = p.s->utility_alpha;
  const double dom = 1.0 + p.s->utility_beta;
  Derivs d;
  d.grad.assign(z.size(), 0.0);
  if (hess) d.blocks.resize(p.active_vehicles.size());

  std::vector<double> cap_used(p.cap_servers.size(), 0.0);
  for (std::size_t v = 0; v < z.size(); ++v)
    cap_used[p.var_cap_col[v]] += z[v] * p.vars[v].capacity_coef;
  std::vector<double> cap_g(p.cap_servers.size(), 0.0);
  d.cap_weight.assign(p.cap_servers.size(), 0.0);
  for (std::size_t c = 0; c < p.cap_servers.size(); ++c) {
    const double slack = p.cap_limit[c] - cap_used[c];
    cap_g[c] = mu / slack;
    d.cap_weight[c] = mu / (slack * slack);
  }

  int v0 = 0;
  for (std::size_t gi = 0; gi < p.active_vehicles.size(); ++gi) {
    const int i = p.active_vehicles[gi];
    const int end = p.vehicle_begin[gi + 1];
    const int b = end - v0;
    double mass = 0, lat = 0;
    for (int v = v0; v < end; ++v) {
      mass += z[v];
      lat += z[v] * p.vars[v].latency_coef;
    }
    const double x0 = 1.0 - mass;
    const double arg0 = dom - x0 * p.local_delay[i];
    const double lslack = p.budget[i] - lat;
    // d/dmass of -alpha*lg(dom - (1-mass)*T0): utility pulls mass back home.
    const double g_local = -alpha * p.local_delay[i] / (kLn2 * arg0);
    const double h_local = alpha * p.local_delay[i] * p.local_delay[i] / (kLn2 * arg0 * arg0);
    const double g_x0bar = mu / x0;            // from -mu log(1-mass)
    const double h_x0bar = mu / (x0 * x0);
    const double g_lat = mu / lslack;
    const double h_lat = mu / (lslack * lslack);

    Eigen::MatrixXd* H = nullptr;
    if (hess) {
      d.blocks[gi] = Eigen::MatrixXd::Zero(b, b);
      H = &d.blocks[gi];
    }
    for (int v = v0; v < end; ++v) {
      const Var& a = p.vars[v];
      const double arg = dom - z[v] * a.full_delay_s;
      double g = alpha * a.full_delay_s / (kLn2 * arg);  // from -alpha*lg(arg)
      g += g_local + g_x0bar;
      g -= mu / z[v];
      g += g_lat * a.latency_coef;
      g += cap_g[p.var_cap_col[v]] * a.capacity_coef;
      d.grad[v] = g;
      if (hess) {
        const int r = v - v0;
        (*H)(r, r) += alpha * a.full_delay_s * a.full_delay_s / (kLn2 * arg * arg) +
                      mu / (z[v] * z[v]);
        for (int w = v0; w < end; ++w) {
          const int cidx = w - v0;
          (*H)(r, cidx) += h_local + h_x0bar + h_lat * a.latency_coef * p.vars[w].latency_coef;
        }
      }
    }
    v0 = end;
  }
  return d;
}

}  // namespace

CandidateSets candidate_sets(const Scenario& s, const Matrix& f_reference) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  if (f_reference.rows != n || f_reference.cols != m)
    throw model_error("reference share matrix must be N x M");
  CandidateSets out;
  out.sets.resize(n);
  out.best_delay_s.resize(n);
  out.best_rsu.resize(n);
  for (int i = 0; i < n; ++i) {
    double best = kInf;
    int best_j = 0;
    std::vector<double> delays(m);
    for (int j = 1; j <= m; ++j) {
      const double share = f_reference(i, j - 1);
      if (!(share > 0)) throw model_error("reference shares must be positive");
      delays[j - 1] = offload_delay(s, i, j, share).total_s;
      if (delays[j - 1] < best) {
        best = delays[j - 1];
        best_j = j;
      }
    }
    out.best_delay_s[i] = best;
    out.best_rsu[i] = best_j;
    for (int j = 1; j <= m; ++j)
      if (delays[j - 1] <= s.rho * best) out.sets[i].push_back(j);
  }
  return out;
}

FractionalSelection solve_rnlp(const Scenario& s, const Matrix& f_reference,
                               const CandidateSets& cands, const RnlpOptions& opts) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  const double alpha = s.utility_alpha;
  const double dom = 1.0 + s.utility_beta;
  const TransformedInstance ti = transform(s);

  Problem p;
  p.s = &s;
  p.local_delay = ti.local_delay_s;
  p.budget = ti.budget_s;
  std::vector<int> cap_col_of_server(m + 1, -1);
  p.vehicle_begin.push_back(0);
  for (int i = 0; i < n; ++i) {
    if (!(ti.budget_s[i] > 0)) continue;  // no offload slack: stays local
    for (int j : cands.sets[i]) {
      Var v;
      v.vehicle = i;
      v.rsu_id = j;
      const double share = f_reference(i, j - 1);
      v.full_delay_s = offload_delay(s, i, j, share).total_s;
      v.latency_coef = ti.fixed_offset_s(i, j - 1) + s.vehicles[i].task.cycles / share;
      v.capacity_coef = share;
      if (cap_col_of_server[j] == -1) {
        cap_col_of_server[j] = static_cast<int>(p.cap_servers.size());
        p.cap_servers.push_back(j);
        p.cap_limit.push_back(s.rsus[j - 1].capacity_hz);
      }
      p.var_cap_col.push_back(cap_col_of_server[j]);
      p.vars.push_back(v);
    }
    p.active_vehicles.push_back(i);
    p.vehicle_begin.push_back(static_cast<int>(p.vars.size()));
  }

  FractionalSelection out;
  out.x_prime = Matrix(n, m + 1);
  for (int i = 0; i < n; ++i) out.x_prime(i, 0) = 1.0;

  const std::size_t nv = p.vars.size();
  // Inactive candidate terms of an integer placement; one per variable.
  const double offset = static_cast<double>(nv) * alpha * lg(dom);

  if (nv == 0) {
    double obj = 0;
    for (int i = 0; i < n; ++i) obj += alpha * lg(dom - ti.local_delay_s[i]);
    out.objective_value = obj;
    return out;
  }

  // Strictly interior start: tiny equal mass per candidate, shrunk until
  // every constraint has slack.
  std::vector<double> z(nv);
  {
    std::vector<double> eps(p.active_vehicles.size(), 1e-3);
    int v0 = 0;
    for (std::size_t gi = 0; gi < p.active_vehicles.size(); ++gi) {
      const int i = p.active_vehicles[gi];
      const int end = p.vehicle_begin[gi + 1];
      const int b = end - v0;
      double pos_lat = 0;
      double cap = 0.5 / b;
      for (int v = v0; v < end; ++v) {
        if (p.vars[v].latency_coef > 0) pos_lat += p.vars[v].latency_coef;
        if (p.vars[v].full_delay_s > 0)
          cap = std::min(cap, 0.5 * dom / (b * p.vars[v].full_delay_s));
      }
      if (pos_lat > 0) cap = std::min(cap, 0.5 * p.budget[i] / pos_lat);
      eps[gi] = std::min(eps[gi], cap);
      for (int v = v0; v < end; ++v) z[v] = eps[gi];
      v0 = end;
    }
    std::vector<double> cap_used(p.cap_servers.size(), 0.0);
    for (std::size_t v = 0; v < nv; ++v)
      cap_used[p.var_cap_col[v]] += z[v] * p.vars[v].capacity_coef;
    double shrink = 1.0;
    for (std::size_t c = 0; c < p.cap_servers.size(); ++c)
      if (cap_used[c] > 0) shrink = std::min(shrink, 0.5 * p.cap_limit[c] / cap_used[c]);
    if (shrink < 1.0)
      for (auto& zi : z) zi *= shrink;
  }

  p.num_inequalities = static_cast<int>(nv + 2 * p.active_vehicles.size() + p.cap_servers.size());
  const double gtol = 1e-9 * std::max(1.0, alpha);

  double mu = opts.barrier_mu0 * std::max(1.0, alpha);
  int newton_total = 0;
  bool converged = false;
  double kkt = kInf;
  for (int round = 0; round < opts.max_center_steps; ++round) {
    for (int it = 0; it < opts.max_newton_steps; ++it) {
      Derivs d = derivatives(p, mu, z, true);
      double gnorm = 0;
      for (double g : d.grad) gnorm = std::max(gnorm, std::abs(g));
      if (gnorm <= gtol) break;

      // Block solve with a low-rank capacity correction:
      // H = blockdiag(D_i) + sum_c w_c r_c r_c^T.
      const int nc = static_cast<int>(p.cap_servers.size());
      std::vector<double> hinv_g(nv);
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(static_cast<int>(nv), nc);
      std::vector<Eigen::LLT<Eigen::MatrixXd>> llts(p.active_vehicles.size());
      bool fact_ok = true;
      int v0 = 0;
      for (std::size_t gi = 0; gi < p.active_vehicles.size() && fact_ok; ++gi) {
        const int end = p.vehicle_begin[gi + 1];
        const int b = end - v0;
        llts[gi].compute(d.blocks[gi]);
        if (llts[gi].info() != Eigen::Success) {
          fact_ok = false;
          break;
        }
        Eigen::VectorXd gb(b);
        Eigen::MatrixXd rb = Eigen::MatrixXd::Zero(b, nc);
        for (int v = v0; v < end; ++v) {
          gb(v - v0) = d.grad[v];
          rb(v - v0, p.var_cap_col[v]) = p.vars[v].capacity_coef;
        }
        const Eigen::VectorXd hg = llts[gi].solve(gb);
        const Eigen::MatrixXd hr = llts[gi].solve(rb);
        for (int v = v0; v < end; ++v) {
          hinv_g[v] = hg(v - v0);
          for (int c = 0; c < nc; ++c) W(v, c) = hr(v - v0, c);
        }
        v0 = end;
      }

      std::vector<double> step(nv);
      if (fact_ok) {
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nc, nc);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nc);
        for (int c = 0; c < nc; ++c) S(c, c) = 1.0 / d.cap_weight[c];
        for (std::size_t v = 0; v < nv; ++v) {
          const int c = p.var_cap_col[v];
          rhs(c) += p.vars[v].capacity_coef * hinv_g[v];
          for (int c2 = 0; c2 < nc; ++c2) S(c, c2) += p.vars[v].capacity_coef * W(v, c2);
        }
        const Eigen::VectorXd y = S.ldlt().solve(rhs);
        for (std::size_t v = 0; v < nv; ++v) {
          double corr = 0;
          for (int c = 0; c < nc; ++c) corr += W(v, c) * y(c);
          step[v] = -(hinv_g[v] - corr);
        }
      } else {
        for (std::size_t v = 0; v < nv; ++v) step[v] = -d.grad[v];  // safeguard
      }

      double slope = 0;
      for (std::size_t v = 0; v < nv; ++v) slope += d.grad[v] * step[v];
      if (slope > 0) {
        for (std::size_t v = 0; v < nv; ++v) step[v] = -d.grad[v];
        slope = 0;
        for (std::size_t v = 0; v < nv; ++v) slope -= d.grad[v] * d.grad[v];
      }

      const double f0 = merit(p, mu, z);
      double t = 1.0;
      std::vector<double> trial(nv);
      bool moved = false;
      while (t >= 1e-16) {
        for (std::size_t v = 0; v < nv; ++v) trial[v] = z[v] + t * step[v];
        const double ft = merit(p, mu, trial);
        if (ft <= f0 + opts.armijo_c * t * slope) {
          z = trial;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      ++newton_total;
      if (!moved || -slope * t < 1e-14 * std::max(1.0, std::abs(f0))) {
        // The merit can no longer resolve progress in double precision, which
        // happens when an active constraint puts steep barrier curvature at
        // the central point. Polish on the gradient norm instead: accept a
        // damped Newton step whenever it shrinks the gradient.
        bool polished = false;
        double tp = 1.0;
        for (int half = 0; half < 40 && !polished; ++half, tp *= 0.5) {
          for (std::size_t v = 0; v < nv; ++v) trial[v] = z[v] + tp * step[v];
          if (!std::isfinite(merit(p, mu, trial))) continue;
          const Derivs dt = derivatives(p, mu, trial, false);
          double gt = 0;
          for (double g : dt.grad) gt = std::max(gt, std::abs(g));
          if (gt <= 0.9 * gnorm) {
            z = trial;
            polished = true;
          }
        }
        if (!polished) break;
      }
    }
    if (p.num_inequalities * mu < opts.gap_target) {
      converged = true;
      Derivs d = derivatives(p, mu, z, false);
      kkt = 0;
      for (double g : d.grad) kkt = std::max(kkt, std::abs(g));
      break;
    }
    mu /= opts.barrier_shrink;
  }

  out.newton_steps = newton_total;
  out.converged = converged;
  out.kkt_residual = kkt;
  for (std::size_t v = 0; v < nv; ++v)
    if (z[v] < 1e-9) z[v] = 0.0;  // strip barrier dust before rounding sees it
  for (std::size_t v = 0; v < nv; ++v)
    out.x_prime(p.vars[v].vehicle, p.vars[v].rsu_id) = z[v];
  for (int i = 0; i < n; ++i) {
    double mass = 0;
    for (int j = 1; j <= m; ++j) mass += out.x_prime(i, j);
    out.x_prime(i, 0) = 1.0 - mass;
  }
  out.objective_value = raw_objective(p, z) - offset;
  // Vehicles without variables contribute their local utility.
  for (int i = 0; i < n; ++i) {
    if (ti.budget_s[i] > 0) continue;
    out.objective_value += alpha * lg(dom - ti.local_delay_s[i]);
  }
  return out;
}

}  // namespace josc
