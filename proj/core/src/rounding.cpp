#include "josc/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "josc/errors.hpp"

namespace josc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

BipartiteGraph build_graph(const Scenario& s, const Matrix& x_prime, const Matrix& f_reference) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  if (x_prime.rows != n || x_prime.cols != m + 1)
    throw model_error("fractional placement must be N x (M+1)");
  if (f_reference.rows != n || f_reference.cols != m)
    throw model_error("reference share matrix must be N x M");

  BipartiteGraph g;
  g.num_vehicles = n;
  g.copies_per_rsu.assign(m, 0);
  g.local_profit.resize(n);
  for (int i = 0; i < n; ++i)
    g.local_profit[i] = utility(s, local_time_s(s.vehicles[i]));

  const double domain = 1.0 + s.utility_beta;
  for (int j = 1; j <= m; ++j) {
    // Lay the fractional masses end to end and cut at unit boundaries; a
    // vehicle straddling a cut is split across the adjacent copies.
    double pos = 0;
    int last_copy = 0;
    for (int i = 0; i < n; ++i) {
      const double w = x_prime(i, j);
      if (!(w > 0)) continue;
      const double lo = pos;
      pos += w;
      const double hi = pos;
      const double delay = offload_delay(s, i, j, f_reference(i, j - 1)).total_s;
      const bool usable = delay < domain;
      const double profit =
          usable ? s.utility_alpha * std::log2(domain - delay) : -kInf;
      for (int c = static_cast<int>(std::floor(lo)) + 1; c - 1 < hi; ++c) {
        const double part = std::min(hi, static_cast<double>(c)) -
                            std::max(lo, static_cast<double>(c - 1));
        if (part <= 1e-15) continue;
        GraphEdge e;
        e.vehicle = i;
        e.rsu_id = j;
        e.copy = c;
        e.weight = part;
        e.profit = profit;
        g.edges.push_back(e);
        g.edge_usable.push_back(usable);
        last_copy = std::max(last_copy, c);
      }
    }
    int copies = static_cast<int>(std::ceil(pos - 1e-9));
    copies = std::max(copies, last_copy);
    if (pos > 0) copies = std::max(copies, 1);
    g.copies_per_rsu[j - 1] = copies;
  }
  return g;
}

double hungarian_max_profit(const Matrix& profit, std::vector<int>& row_to_col) {
  const int rows = profit.rows;
  const int cols = profit.cols;
  // Square min-cost problem of size rows+cols: dummy columns let any row stay
  // unmatched at zero profit and dummy rows do the same for columns.
  const int n = rows + cols;
  double top = 0;
  for (double val : profit.data)
    if (val > top && val < kInf) top = val;
  const double forbidden = 4.0 * (std::abs(top) + 1.0) * n;

  auto cost = [&](int r, int c) -> double {
    if (r < rows && c < cols) {
      const double val = profit(r, c);
      if (val == -kInf) return forbidden;
      return top - val;
    }
    return top;  // dummy pairing, profit zero
  };

  // Shortest augmenting paths with potentials.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  row_to_col.assign(rows, -1);
  double total = 0;
  for (int j = 1; j <= n; ++j) {
    const int i = p[j] - 1;
    if (i < 0 || i >= rows || j - 1 >= cols) continue;
    if (profit(i, j - 1) == -kInf) continue;  // parked on a forbidden pad
    row_to_col[i] = j - 1;
    total += profit(i, j - 1);
  }
  return total;
}

IntegerSelection max_profit_matching(const Scenario& s, const BipartiteGraph& g,
                                     RoundingMode mode) {
  const int n = g.num_vehicles;
  const int m = s.num_rsus();

  // Column layout: every server copy first, then one stay-local column per
  // vehicle when the mode asks for them.
  std::vector<int> copy_col_base(m + 1, 0);
  int num_copy_cols = 0;
  for (int j = 1; j <= m; ++j) {
    copy_col_base[j] = num_copy_cols;
    num_copy_cols += g.copies_per_rsu[j - 1];
  }
  const int local_cols = mode == RoundingMode::local_nodes ? n : 0;
  const int cols = num_copy_cols + local_cols;

  Matrix profit(n, std::max(cols, 1), -kInf);
  std::vector<std::pair<int, int>> col_ident(num_copy_cols);  // rsu_id, copy
  for (int j = 1; j <= m; ++j)
    for (int c = 1; c <= g.copies_per_rsu[j - 1]; ++c)
      col_ident[copy_col_base[j] + c - 1] = {j, c};
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    if (!g.edge_usable[k]) continue;
    const GraphEdge& e = g.edges[k];
    profit(e.vehicle, copy_col_base[e.rsu_id] + e.copy - 1) = e.profit;
  }
  for (int i = 0; i < local_cols; ++i)
    profit(i, num_copy_cols + i) = g.local_profit[i];

  std::vector<int> row_to_col(n, -1);
  if (cols > 0) hungarian_max_profit(profit, row_to_col);

  IntegerSelection sel;
  sel.x = Matrix(n, m + 1);
  for (int i = 0; i < n; ++i) {
    const int c = row_to_col[i];
    if (c < 0 || c >= num_copy_cols) {
      sel.x(i, 0) = 1.0;
      continue;
    }
    const auto [rsu_id, copy] = col_ident[c];
    sel.x(i, rsu_id) = 1.0;
    sel.matched.push_back({i, rsu_id, copy});
  }
  return sel;
}

IntegerSelection round_selection(const Scenario& s, const Matrix& x_prime,
                                 const Matrix& f_reference, RoundingMode mode) {
  const BipartiteGraph g = build_graph(s, x_prime, f_reference);
  IntegerSelection sel = max_profit_matching(s, g, mode);

  // The profits assumed the reference shares; anything that would still miss
  // its deadline at those shares goes back to local execution.
  std::vector<MatchedEdge> kept;
  for (const MatchedEdge& e : sel.matched) {
    const double delay =
        offload_delay(s, e.vehicle, e.rsu_id, f_reference(e.vehicle, e.rsu_id - 1)).total_s;
    if (delay > s.vehicles[e.vehicle].task.max_latency_s) {
      sel.x(e.vehicle, e.rsu_id) = 0.0;
      sel.x(e.vehicle, 0) = 1.0;
      sel.demoted_latency.push_back(e.vehicle);
    } else {
      kept.push_back(e);
    }
  }
  sel.matched = std::move(kept);
  return sel;
}

}  // namespace josc
