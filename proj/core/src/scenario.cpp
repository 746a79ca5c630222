#include "josc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "josc/errors.hpp"

namespace josc {
namespace {

// 53-bit closed uniform draw: both endpoints are reachable and the mapping
// is reproducible anywhere mt19937_64 is (i.e. everywhere).
double uniform_closed(std::mt19937_64& eng, double lo, double hi) {
  const std::uint64_t bits = eng() >> 11;
  const double u = static_cast<double>(bits) / 9007199254740991.0;  // 2^53 - 1
  return std::lerp(lo, hi, u);
}

void validate(const GeneratorParams& p) {
  if (p.num_vehicles <= 0) throw config_error("num_vehicles", "N must be positive");
  if (p.num_rsus <= 0) throw config_error("num_rsus", "num_rsus must be positive");
  if (p.road_length_m <= 0) throw config_error("road_length_m", "road_length_m must be positive");
  if (p.speed_kmh <= 0) throw config_error("speed_kmh", "speed_kmh must be positive");
  if (static_cast<int>(p.capacities_ghz.size()) != p.num_rsus)
    throw config_error("capacities_ghz", "capacities_ghz must list one value per RSU");
  for (double c : p.capacities_ghz)
    if (!(c > 0)) throw config_error("capacities_ghz", "capacities_ghz entries must be positive");
  if (!(p.bandwidth_hz > 0)) throw config_error("bandwidth_hz", "bandwidth_hz must be positive");
  if (!(p.tx_power_mw > 0)) throw config_error("tx_power_mw", "tx_power_mw must be positive");
  if (!(p.noise_mw > 0)) throw config_error("noise_mw", "noise_mw must be positive");
  if (!(p.pathloss_exponent >= 0))
    throw config_error("pathloss_exponent", "pathloss_exponent must be nonnegative");
  if (!(p.min_distance_m > 0)) throw config_error("min_distance_m", "min_distance_m must be positive");
  if (!(p.input_kb_min > 0) || p.input_kb_max < p.input_kb_min)
    throw config_error("input_kb_range", "input_kb_range must be a positive low,high pair");
  if (!(p.cycles_gc_min > 0) || p.cycles_gc_max < p.cycles_gc_min)
    throw config_error("cycles_gc_range", "cycles_gc_range must be a positive low,high pair");
  if (!(p.latency_s_min > 0) || p.latency_s_max < p.latency_s_min)
    throw config_error("latency_s_range", "latency_s_range must be a positive low,high pair");
  if (!(p.local_ghz > 0)) throw config_error("local_ghz", "local_ghz must be positive");
  if (p.cycles_gc_max / p.local_ghz > p.latency_s_min)
    throw config_error("local_ghz",
                       "local_ghz too small: local execution could exceed the latency budget");
  if (!(p.alpha > 0)) throw config_error("alpha", "alpha must be positive");
  if (!(p.beta > 0)) throw config_error("beta", "beta must be positive");
  if (p.beta < p.latency_s_max)
    throw config_error("beta", "beta must be at least the largest latency budget");
  if (!(p.rho >= 1.0)) throw config_error("rho", "rho must be >= 1");
}

}  // namespace

double Scenario::segment_entry_m(int rsu_id) const {
  double entry = 0;
  for (int k = 0; k + 1 < rsu_id; ++k) entry += rsus[k].segment_length_m;
  return entry;
}

Scenario generate(std::uint64_t seed, const GeneratorParams& params) {
  validate(params);
  std::mt19937_64 eng(seed);

  Scenario s;
  s.params = params;
  s.seed = seed;
  s.speed_mps = params.speed_kmh / 3.6;
  s.radio = RadioParams{params.bandwidth_hz, params.tx_power_mw, params.noise_mw,
                        params.pathloss_exponent, params.min_distance_m};
  s.utility_alpha = params.alpha;
  s.utility_beta = params.beta;
  s.rho = params.rho;
  s.travel_prefix = params.travel_prefix;

  const double seg = params.road_length_m / params.num_rsus;
  double entry = 0;
  s.rsus.reserve(params.num_rsus);
  for (int j = 0; j < params.num_rsus; ++j) {
    Rsu r;
    r.id = j + 1;
    r.segment_length_m = seg;
    r.capacity_hz = params.capacities_ghz[j] * kHzPerGhz;
    r.position_m = params.placement == RsuPlacement::midpoint
                       ? entry + seg / 2.0
                       : uniform_closed(eng, entry, entry + seg);
    s.rsus.push_back(r);
    entry += seg;
  }

  s.vehicles.reserve(params.num_vehicles);
  for (int i = 0; i < params.num_vehicles; ++i) {
    Vehicle v;
    v.id = i + 1;
    v.task.input_bits = uniform_closed(eng, params.input_kb_min, params.input_kb_max) * kBitsPerKb;
    v.task.cycles = uniform_closed(eng, params.cycles_gc_min, params.cycles_gc_max) * kHzPerGhz;
    v.task.max_latency_s = uniform_closed(eng, params.latency_s_min, params.latency_s_max);
    v.local_capacity_hz = params.local_ghz * kHzPerGhz;
    s.vehicles.push_back(v);
  }
  return s;
}

double distance(const Scenario& s, double anchor_m, int rsu_id) {
  const Rsu& r = s.rsus.at(rsu_id - 1);
  return std::max(s.radio.min_distance_m, std::abs(anchor_m - r.position_m));
}

}  // namespace josc
