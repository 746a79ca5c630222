#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "josc/errors.hpp"
#include "josc/model.hpp"
#include "josc/solvers.hpp"

using namespace josc;
using doctest::Approx;

namespace {

/// One 100 m segment with a 2 GHz server at 50 m and three vehicles sized so
/// the greedy pass overfills the server: everyone joins under provisional
/// shares, but the final equal split pushes vehicle 1 past its 4.3 s budget.
Scenario greedy_overfill() {
  Scenario s = one_by_one();
  s.rsus[0].capacity_hz = 2e9;
  s.vehicles.clear();
  for (int i = 0; i < 3; ++i) {
    Vehicle v;
    v.id = i + 1;
    v.task = Task{200.0 * kBitsPerKb, 1e9, 9.0};
    v.local_capacity_hz = 0.2e9;
    s.vehicles.push_back(v);
  }
  s.vehicles[0].local_capacity_hz = 0.25e9;  // local run takes 4 s
  s.vehicles[0].task.max_latency_s = 4.3;
  return s;
}

}  // namespace

TEST_CASE("every algorithm agrees on the obvious single vehicle instance") {
  const Scenario s = one_by_one();

  const Solution best = oracle(s);
  CHECK(best.algo == "oracle");
  CHECK(best.feasible);
  CHECK(best.selection.x(0, 1) == 1.0);
  CHECK(best.system_utility == Approx(2.949382162975808).epsilon(1e-5));
  CHECK(system_utility(s, best) == best.system_utility);

  const Solution j = josc::josc(s);
  CHECK(j.feasible);
  CHECK(j.outer_converged);
  CHECK(j.selection.x(0, 1) == 1.0);
  CHECK(j.system_utility == Approx(best.system_utility).epsilon(1e-6));
  CHECK(j.outer_trace.back().x_changes == 0);
  CHECK(j.final_relaxed_objective >= j.final_iterate_utility - 1e-6);

  const Solution g = gs(s);
  CHECK(g.selection.x(0, 1) == 1.0);
  CHECK(g.system_utility == Approx(best.system_utility).epsilon(1e-6));

  const Solution r = ra(s);
  CHECK(r.selection.x(0, 1) == 1.0);
  CHECK(r.system_utility == Approx(best.system_utility).epsilon(1e-6));
}

TEST_CASE("the oracle refuses oversized instances") {
  const Scenario s = generate(1);
  try {
    oracle(s);
    CHECK(false);
  } catch (const refusal_error& e) {
    CHECK(std::string(e.what()) ==
          "instance too large for exhaustive search: 40 vehicles x 5 servers (limits 4 x 2)");
  }
}

TEST_CASE("the oracle dominates the heuristics on a small instance") {
  GeneratorParams p;
  p.num_vehicles = 3;
  p.num_rsus = 2;
  p.capacities_ghz = {5, 10};
  const Scenario s = generate(12, p);

  const Solution best = oracle(s);
  CHECK(best.feasible);
  CHECK(best.system_utility >= josc::josc(s).system_utility - 1e-9);
  CHECK(best.system_utility >= gs(s).system_utility - 1e-9);
  CHECK(best.system_utility >= ra(s).system_utility - 1e-9);
}

TEST_CASE("greedy joins under provisional shares and demotes on the final split") {
  const Scenario s = greedy_overfill();
  const Solution g = gs(s);

  CHECK(g.algo == "gs");
  CHECK(g.feasible);
  CHECK(g.selection.x(0, 0) == 1.0);  // demoted back home by the 2/3 split
  CHECK(g.selection.x(1, 1) == 1.0);
  CHECK(g.selection.x(2, 1) == 1.0);
  CHECK(g.f(1, 0) == Approx(1e9).epsilon(1e-12));
  CHECK(g.f(2, 0) == Approx(1e9).epsilon(1e-12));

  const double expect = utility(s, 4.0) + 2.0 * utility(s, offload_delay(s, 1, 1, 1e9).total_s);
  CHECK(g.system_utility == Approx(expect).epsilon(1e-12));
  CHECK(g.outer_trace.size() == 1);
}

TEST_CASE("the nearest server baseline lands everyone on server one") {
  const Scenario s = generate(3);
  const Solution r = ra(s);
  CHECK(r.algo == "ra");
  CHECK(r.feasible);
  for (int i = 0; i < s.num_vehicles(); ++i) {
    for (int j = 2; j <= s.num_rsus(); ++j) CHECK(r.selection.x(i, j) == 0.0);
  }
  CHECK(r.outer_trace.size() == 1);
  CHECK(r.alloc_traces.size() == 1);
}

TEST_CASE("the solution checker flags every kind of violation") {
  const Scenario s = greedy_overfill();
  const Solution good = gs(s);
  CHECK(verify_solution(s, good).ok);
  CHECK(verify_solution(s, good).detail.empty());

  Solution bad = good;
  bad.selection.x(0, 0) = 0.7;
  CHECK(verify_solution(s, bad).detail == "placement row 1 is not 0/1");

  bad = good;
  bad.selection.x(0, 0) = 0.0;
  CHECK(verify_solution(s, bad).detail == "placement row 1 is not one-hot");

  bad = good;
  bad.f(1, 0) = 6e9;  // above the 2 GHz capacity on its own
  CHECK(verify_solution(s, bad).detail == "share above server capacity for vehicle 2");

  bad = good;
  bad.f(1, 0) = 1.5e9;  // individually fine, 3 GHz total on a 2 GHz server
  bad.f(2, 0) = 1.5e9;
  const FeasibilityReport over = verify_solution(s, bad);
  CHECK(over.detail == "server 1 capacity exceeded");
  CHECK(over.max_capacity_excess_rel == Approx(0.5).epsilon(1e-9));

  bad = good;
  bad.f(1, 0) = 1.45e8;  // pushes the delay to about 10 s against a 9 s budget
  bad.f(2, 0) = 1e9;
  const FeasibilityReport late = verify_solution(s, bad);
  CHECK(late.detail == "vehicle 2 misses its latency budget");
  CHECK(late.max_latency_excess_s > 0.9);

  bad = good;
  bad.f(0, 0) = 1e9;  // vehicle 1 executes locally, the share is stray
  CHECK(verify_solution(s, bad).detail == "share on unassigned pair (1, 1)");

  bad = good;
  bad.f(1, 0) = 0.0;
  CHECK(verify_solution(s, bad).detail == "vehicle 2 has no defined completion time");

  bad = good;
  bad.f = Matrix(3, 2);
  CHECK(verify_solution(s, bad).detail == "share matrix has wrong shape");
}

TEST_CASE("alternating optimization stays ahead of its baselines end to end") {
  const Scenario s = generate(5);
  const Solution j = josc::josc(s);
  CHECK(j.algo == "josc");
  CHECK(j.feasible);
  CHECK(verify_solution(s, j).ok);
  REQUIRE(!j.outer_trace.empty());
  CHECK(j.alloc_traces.size() == j.outer_trace.size());
  CHECK(j.outer_trace.size() <= 20);

  const Solution g = gs(s);
  const Solution r = ra(s);
  CHECK(j.system_utility >= g.system_utility - 1e-9);
  CHECK(j.system_utility >= r.system_utility - 1e-9);

  if (j.outer_converged) {
    CHECK(j.final_relaxed_objective >= j.final_iterate_utility - 1e-6);
  }
}
