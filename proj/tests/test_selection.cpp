#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "josc/errors.hpp"
#include "josc/model.hpp"
#include "josc/selection.hpp"

using namespace josc;
using doctest::Approx;

namespace {

Matrix full_reference(const Scenario& s) {
  Matrix f(s.num_vehicles(), s.num_rsus());
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j) f(i, j) = s.rsus[j].capacity_hz;
  return f;
}

// Relaxed objective evaluated directly: per-vehicle sum of the fractional
// utility terms minus the inactive-term constant, comparable to the integer
// system utility. z holds the offload fractions per candidate.
double fractional_objective(const Scenario& s, const std::vector<double>& full_delay,
                            const std::vector<double>& local_delay,
                            const std::vector<double>& z) {
  const double dom = 1.0 + s.utility_beta;
  double val = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    val += s.utility_alpha * std::log2(dom - z[i] * full_delay[i]);
    val += s.utility_alpha * std::log2(dom - (1.0 - z[i]) * local_delay[i]);
    val -= s.utility_alpha * std::log2(dom);
  }
  return val;
}

}  // namespace

TEST_CASE("candidate sets keep servers within rho of the best") {
  Scenario s = one_by_two();
  const Matrix ref = full_reference(s);

  // Both links are 25 m, so only the trip term separates the servers:
  // roughly 1.76 s for server 1 against 3.26 s for server 2.
  const double d1 = offload_delay(s, 0, 1, 5e9).total_s;
  const double d2 = offload_delay(s, 0, 2, 5e9).total_s;
  CHECK(d2 / d1 > 1.5);
  CHECK(d2 / d1 < 2.0);

  CandidateSets c = candidate_sets(s, ref);  // rho 1.5
  CHECK(c.sets[0] == std::vector<int>{1});
  CHECK(c.best_rsu[0] == 1);
  CHECK(c.best_delay_s[0] == d1);

  s.rho = 2.0;
  c = candidate_sets(s, ref);
  CHECK(c.sets[0] == std::vector<int>{1, 2});

  s.rho = 1.0;
  c = candidate_sets(s, ref);
  CHECK(c.sets[0] == std::vector<int>{1});
}

TEST_CASE("candidate sets come out ascending and anchored at the best server") {
  const Scenario s = generate(4);
  Matrix ref(s.num_vehicles(), s.num_rsus());
  for (int i = 0; i < ref.rows; ++i)
    for (int j = 0; j < ref.cols; ++j)
      ref(i, j) = s.rsus[j].capacity_hz / s.num_vehicles();

  const CandidateSets c = candidate_sets(s, ref);
  for (int i = 0; i < s.num_vehicles(); ++i) {
    REQUIRE(!c.sets[i].empty());
    CHECK(std::is_sorted(c.sets[i].begin(), c.sets[i].end()));
    CHECK(std::find(c.sets[i].begin(), c.sets[i].end(), c.best_rsu[i]) != c.sets[i].end());
    for (int j : c.sets[i]) {
      const double d = offload_delay(s, i, j, ref(i, j - 1)).total_s;
      CHECK(d <= s.rho * c.best_delay_s[i] * (1 + 1e-12));
      CHECK(d >= c.best_delay_s[i]);
    }
  }
}

TEST_CASE("reference shares must be positive") {
  const Scenario s = one_by_one();
  Matrix ref(1, 1, 0.0);
  CHECK_THROWS_WITH(candidate_sets(s, ref), "reference shares must be positive");
}

TEST_CASE("the relaxation reaches the one vehicle analytic optimum") {
  const Scenario s = one_by_one();
  const Matrix ref = full_reference(s);
  const CandidateSets c = candidate_sets(s, ref);

  // The fractional utility increases all the way to a full offload, so the
  // optimum sits at x'_11 = 1 with objective equal to the offload utility.
  const FractionalSelection sol = solve_rnlp(s, ref, c);
  CHECK(sol.converged);
  CHECK(sol.kkt_residual < 1e-6);
  CHECK(sol.objective_value == Approx(2.949382162975808).epsilon(1e-6));
  CHECK(sol.x_prime(0, 1) > 0.999);
  CHECK(sol.x_prime(0, 0) + sol.x_prime(0, 1) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the relaxation beats a fine grid on two uncoupled vehicles") {
  const Scenario s = two_by_one();
  Matrix ref(2, 1);
  ref(0, 0) = 2.5e9;
  ref(1, 0) = 2.5e9;
  const CandidateSets c = candidate_sets(s, ref);
  const FractionalSelection sol = solve_rnlp(s, ref, c);
  REQUIRE(sol.converged);

  // The shared capacity admits both full offloads here, so the problem
  // separates and a per-vehicle line search bounds the optimum tightly.
  const std::vector<double> full{offload_delay(s, 0, 1, 2.5e9).total_s,
                                 offload_delay(s, 1, 1, 2.5e9).total_s};
  const std::vector<double> local{5.0, 6.0};
  double grid_best = 0;
  for (int i = 0; i < 2; ++i) {
    double best = -1e300;
    for (int k = 0; k <= 100000; ++k) {
      const double z = k / 100000.0;
      const std::vector<double> zi{z};
      const double g = fractional_objective(s, {full[i]}, {local[i]}, zi);
      best = std::max(best, g);
    }
    grid_best += best;
  }
  CHECK(sol.objective_value >= grid_best - 1e-6);
  CHECK(sol.objective_value <= grid_best + 1e-4);

  // Rows remain proper fractions.
  for (int i = 0; i < 2; ++i) {
    CHECK(sol.x_prime(i, 0) >= 0.0);
    CHECK(sol.x_prime(i, 1) >= 0.0);
    CHECK(sol.x_prime(i, 0) + sol.x_prime(i, 1) == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("the relaxation honors a binding capacity across vehicles") {
  Scenario s = two_by_one();
  s.rsus[0].capacity_hz = 1.5e9;
  Matrix ref(2, 1);
  ref(0, 0) = 1e9;  // overcommitted on purpose: z1 + z2 <= 1.5
  ref(1, 0) = 1e9;
  const CandidateSets c = candidate_sets(s, ref);
  const FractionalSelection sol = solve_rnlp(s, ref, c);
  REQUIRE(sol.converged);

  const std::vector<double> full{offload_delay(s, 0, 1, 1e9).total_s,
                                 offload_delay(s, 1, 1, 1e9).total_s};
  const std::vector<double> local{5.0, 6.0};
  double grid_best = -1e300;
  for (int a = 0; a <= 1000; ++a) {
    for (int b = 0; b <= 1000; ++b) {
      const double z1 = a / 1000.0, z2 = b / 1000.0;
      if (z1 * 1e9 + z2 * 1e9 > 1.5e9) continue;
      grid_best = std::max(grid_best,
                           fractional_objective(s, full, local, {z1, z2}));
    }
  }
  CHECK(sol.objective_value >= grid_best - 1e-6);
  CHECK(sol.objective_value <= grid_best + 5e-3);
  CHECK(sol.x_prime(0, 1) * 1e9 + sol.x_prime(1, 1) * 1e9 <= 1.5e9 * (1 + 1e-9));
}

TEST_CASE("vehicles without offload slack stay local in the relaxation") {
  Scenario s = two_by_one();
  s.vehicles[1].task.max_latency_s = 6.0;  // equals its local delay
  const Matrix ref = full_reference(s);
  const CandidateSets c = candidate_sets(s, ref);
  const FractionalSelection sol = solve_rnlp(s, ref, c);
  CHECK(sol.x_prime(1, 0) == 1.0);
  CHECK(sol.x_prime(1, 1) == 0.0);

  // Its local utility still counts toward the objective.
  const Scenario alone = one_by_one();
  const FractionalSelection solo =
      solve_rnlp(alone, full_reference(alone), candidate_sets(alone, full_reference(alone)));
  CHECK(sol.objective_value ==
        Approx(solo.objective_value + std::log2(11.0 - 6.0)).epsilon(1e-9));
}
