#pragma once

#include "josc/scenario.hpp"

// Hand-built instances with easy closed-form numbers, used across the test
// files. All of them run at the default radio (1.25 MHz, 100 mW, 1e-10 mW
// noise, exponent 4, 1 m floor) and 120 km/h.

/// One vehicle, one 100 m segment, RSU at 50 m with 5 GHz. The task is
/// 200 KB / 1 Gcycle / 9 s on a 0.2 GHz on-board processor, so the local run
/// takes exactly 5 s and a full offload 3.27581797334353 s.
inline josc::Scenario one_by_one() {
  josc::Scenario s;
  josc::Rsu r;
  r.id = 1;
  r.segment_length_m = 100.0;
  r.capacity_hz = 5e9;
  r.position_m = 50.0;
  s.rsus = {r};
  josc::Vehicle v;
  v.id = 1;
  v.task = josc::Task{200.0 * josc::kBitsPerKb, 1e9, 9.0};
  v.local_capacity_hz = 0.2e9;
  s.vehicles = {v};
  s.speed_mps = 120.0 / 3.6;
  return s;
}

/// Same road and server, two vehicles; the second carries 1.2 Gcycles
/// (local run 6 s), everything else as in one_by_one().
inline josc::Scenario two_by_one() {
  josc::Scenario s = one_by_one();
  josc::Vehicle v = s.vehicles[0];
  v.id = 2;
  v.task.cycles = 1.2e9;
  s.vehicles.push_back(v);
  return s;
}

/// One vehicle, two 50 m segments with RSUs at their midpoints (25 m and
/// 75 m), both 5 GHz. Both links span 25 m, so the delays differ only in
/// the trip term.
inline josc::Scenario one_by_two() {
  josc::Scenario s = one_by_one();
  s.rsus[0].segment_length_m = 50.0;
  s.rsus[0].position_m = 25.0;
  josc::Rsu r2 = s.rsus[0];
  r2.id = 2;
  r2.position_m = 75.0;
  s.rsus.push_back(r2);
  return s;
}
