#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "josc/allocation.hpp"
#include "josc/errors.hpp"
#include "josc/model.hpp"

using namespace josc;
using doctest::Approx;

namespace {

IntegerSelection both_on_server_one() {
  IntegerSelection sel;
  sel.x = Matrix(2, 2);
  sel.x(0, 1) = 1.0;
  sel.x(1, 1) = 1.0;
  sel.matched = {{0, 1, 1}, {1, 1, 2}};
  return sel;
}

double pair_utility(const Scenario& s, int vehicle, double f_hz) {
  return utility(s, offload_delay(s, vehicle, 1, f_hz).total_s);
}

}  // namespace

TEST_CASE("minimum feasible share comes from the transformed constraints") {
  Scenario s = one_by_one();
  TransformedInstance ti = transform(s);
  CHECK(min_feasible_share(ti, s, 0, 1) == Approx(168799674.87501168).epsilon(1e-12));

  s.vehicles[0].task.max_latency_s = 3.0;  // below the fixed trip time
  ti = transform(s);
  CHECK(std::isinf(min_feasible_share(ti, s, 0, 1)));
}

TEST_CASE("an all local selection returns the constant local utility") {
  const Scenario s = one_by_one();
  IntegerSelection sel;
  sel.x = Matrix(1, 2);
  sel.x(0, 0) = 1.0;

  const AllocationResult res = allocate(s, sel);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.trace.empty());
  CHECK(res.f(0, 0) == 0.0);
  CHECK(res.utility == Approx(2.584962500721156).epsilon(1e-12));
  CHECK(res.dual_objective == res.utility);
}

TEST_CASE("infeasible selections are rejected with the vehicle attached") {
  Scenario s = one_by_one();
  s.vehicles[0].task.max_latency_s = 3.0;
  IntegerSelection sel;
  sel.x = Matrix(1, 2);
  sel.x(0, 1) = 1.0;
  try {
    allocate(s, sel);
    CHECK(false);
  } catch (const infeasible_error& e) {
    CHECK(e.vehicle_id() == 1);
    CHECK(std::string(e.what()) == "vehicle 1 cannot meet its latency budget on server 1");
  }

  Scenario t = two_by_one();
  t.vehicles[0].task.max_latency_s = 3.4;  // minimum shares 3.1 and 3.7 GHz
  t.vehicles[1].task.max_latency_s = 3.4;
  try {
    allocate(t, both_on_server_one());
    CHECK(false);
  } catch (const infeasible_error& e) {
    CHECK(e.vehicle_id() == 0);
    CHECK(std::string(e.what()) == "minimum shares of server 1 exceed its capacity");
  }
}

TEST_CASE("capacity demotions drop the hungriest vehicle first") {
  Scenario s = two_by_one();
  s.vehicles[0].task.max_latency_s = 3.4;
  s.vehicles[1].task.max_latency_s = 3.4;
  IntegerSelection sel = both_on_server_one();

  // Vehicle 2 needs the larger minimum share (1.2 Gcycles in 0.32 s).
  CHECK(enforce_capacity_feasibility(s, sel) == 1);
  CHECK(sel.demoted_capacity == std::vector<int>{1});
  CHECK(sel.x(1, 0) == 1.0);
  CHECK(sel.x(1, 1) == 0.0);
  CHECK(sel.x(0, 1) == 1.0);
  REQUIRE(sel.matched.size() == 1);
  CHECK(sel.matched[0].vehicle == 0);

  // The surviving vehicle then takes the whole server.
  const AllocationResult res = allocate(s, sel);
  CHECK(res.converged);
  CHECK(res.f(0, 0) == Approx(5e9).epsilon(1e-6));
  CHECK(res.utility ==
        Approx(pair_utility(s, 0, res.f(0, 0)) + utility(s, 6.0)).epsilon(1e-12));
}

TEST_CASE("equal minimum shares demote the later vehicle") {
  Scenario s = two_by_one();
  s.vehicles[1].task.cycles = 1e9;  // identical tasks now
  s.vehicles[0].task.max_latency_s = 3.4;
  s.vehicles[1].task.max_latency_s = 3.4;
  IntegerSelection sel = both_on_server_one();

  CHECK(enforce_capacity_feasibility(s, sel) == 1);
  CHECK(sel.demoted_capacity == std::vector<int>{1});
  CHECK(sel.x(0, 1) == 1.0);
}

TEST_CASE("two vehicles on one server match a fine grid over the split") {
  const Scenario s = two_by_one();
  const IntegerSelection sel = both_on_server_one();
  const AllocationResult res = allocate(s, sel);
  REQUIRE(res.converged);

  const TransformedInstance ti = transform(s);
  const double cap = 5e9;
  const double lo = min_feasible_share(ti, s, 0, 1);
  const double hi = cap - min_feasible_share(ti, s, 1, 1);
  double grid_best = -1e300;
  for (int k = 0; k <= 200000; ++k) {
    const double f1 = lo + (hi - lo) * k / 200000.0;
    const double val = pair_utility(s, 0, f1) + pair_utility(s, 1, cap - f1);
    grid_best = std::max(grid_best, val);
  }
  CHECK(std::abs(res.utility - grid_best) <= 2e-5);

  // The capacity is fully used and both deadlines hold.
  CHECK(res.f(0, 0) + res.f(1, 0) == Approx(cap).epsilon(1e-6));
  CHECK(offload_delay(s, 0, 1, res.f(0, 0)).total_s <= 9.0 + 1e-6);
  CHECK(offload_delay(s, 1, 1, res.f(1, 0)).total_s <= 9.0 + 1e-6);
  CHECK(res.dual_objective >= res.utility - 1e-3);
}

TEST_CASE("a binding deadline pins that vehicle at its minimum share") {
  Scenario s = two_by_one();
  s.vehicles[0].task.cycles = 4e9;  // heavy task pulls capacity toward it
  s.vehicles[1].task.max_latency_s = 3.6;
  const IntegerSelection sel = both_on_server_one();

  const TransformedInstance ti = transform(s);
  const double min2 = min_feasible_share(ti, s, 1, 1);
  const AllocationResult res = allocate(s, sel);
  REQUIRE(res.converged);

  CHECK(res.f(1, 0) == Approx(min2).epsilon(1e-4));
  CHECK(offload_delay(s, 1, 1, res.f(1, 0)).total_s == Approx(3.6).epsilon(1e-6));

  const double cap = 5e9;
  const double lo = min_feasible_share(ti, s, 0, 1);
  double grid_best = -1e300;
  for (int k = 0; k <= 200000; ++k) {
    const double f1 = lo + (cap - min2 - lo) * k / 200000.0;
    const double val = pair_utility(s, 0, f1) + pair_utility(s, 1, cap - f1);
    grid_best = std::max(grid_best, val);
  }
  CHECK(std::abs(res.utility - grid_best) <= 2e-5);
}

TEST_CASE("multiplier updates project onto their floors") {
  const Scenario s = two_by_one();
  const IntegerSelection sel = both_on_server_one();
  const DualState state = initial_dual_state(2, 1);
  CHECK(state.latency_price == std::vector<double>{1e-12, 1e-12});
  CHECK(state.capacity_price == std::vector<double>{0.0});

  DualGradients g;
  g.latency = {1.0, -0.5};          // slack for 1, violation for 2
  g.capacity = {-1e9};              // oversubscribed server
  g.share_cap = Matrix(2, 1, 2e9);  // plenty of room
  g.nonneg = Matrix(2, 1, 2e9);

  const DualState next = update_multipliers(s, sel, state, g);
  CHECK(next.latency_price[0] == 1e-12);  // cannot drop below the floor
  CHECK(next.latency_price[1] > state.latency_price[1]);
  CHECK(next.capacity_price[0] > 0.0);
  CHECK(next.share_cap_price(0, 0) == 0.0);
  CHECK(next.nonneg_price(1, 0) == 0.0);
  CHECK(next.iteration == 1);
}

TEST_CASE("dual gradients report the signed slacks") {
  Scenario s = two_by_one();
  IntegerSelection sel = both_on_server_one();
  sel.x(1, 1) = 0.0;  // vehicle 2 stays local
  sel.x(1, 0) = 1.0;
  sel.matched.pop_back();

  Matrix f(2, 1);
  f(0, 0) = 2e9;
  const DualState state = initial_dual_state(2, 1);
  const DualGradients g = dual_gradients(s, sel, f, state);

  const TransformedInstance ti = transform(s);
  CHECK(g.latency[0] == Approx(9.0 - offload_delay(s, 0, 1, 2e9).total_s).epsilon(1e-12));
  CHECK(g.latency[1] == Approx(ti.budget_s[1]).epsilon(1e-12));
  CHECK(g.capacity[0] == Approx(3e9).epsilon(1e-12));
  CHECK(g.share_cap(0, 0) == Approx(3e9).epsilon(1e-12));
  CHECK(g.share_cap(1, 0) == Approx(5e9).epsilon(1e-12));
  CHECK(g.nonneg(0, 0) == Approx(2e9).epsilon(1e-12));
  CHECK(g.nonneg(1, 0) == 0.0);
}

TEST_CASE("the primal step zeroes unassigned pairs") {
  const Scenario s = two_by_one();
  IntegerSelection sel = both_on_server_one();
  sel.x(1, 1) = 0.0;
  sel.x(1, 0) = 1.0;
  sel.matched.pop_back();

  const Matrix f = primal_step(s, sel, initial_dual_state(2, 1));
  CHECK(f(0, 0) > 0.0);
  CHECK(f(0, 0) <= 5e9);
  CHECK(f(1, 0) == 0.0);
}

TEST_CASE("the trace keeps the strongest feasible iterate") {
  const Scenario s = two_by_one();
  const AllocationResult res = allocate(s, both_on_server_one());
  REQUIRE(!res.trace.empty());
  double prev = -1e300;
  for (const AllocationTracePoint& p : res.trace) {
    CHECK(p.best_feasible_utility >= prev - 1e-12);
    prev = p.best_feasible_utility;
  }
  CHECK(res.trace.back().best_feasible_utility == Approx(res.utility).epsilon(1e-12));
}

TEST_CASE("nonconvergence either throws with the incumbent or reports it") {
  const Scenario s = two_by_one();
  AllocateOptions opts;
  opts.max_iterations = 1;

  try {
    allocate(s, both_on_server_one(), opts);
    CHECK(false);
  } catch (const allocation_convergence_error& e) {
    CHECK(e.best.utility > 0.0);
    CHECK(!e.best.converged);
  }

  opts.throw_on_nonconvergence = false;
  const AllocationResult res = allocate(s, both_on_server_one(), opts);
  CHECK(!res.converged);
  CHECK(res.utility > 0.0);
}
