#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace josc {

// Unit conventions, fixed across the library:
//   distances m, time s, rates bit/s, task size bits, compute cycles,
//   compute capacity cycles/s (1 GHz = 1e9 cycles/s), power mW, 1 KB = 8192 bits.
inline constexpr double kBitsPerKb = 8192.0;
inline constexpr double kHzPerGhz = 1e9;

struct RadioParams {
  double bandwidth_hz = 1.25e6;
  double tx_power_mw = 100.0;
  double noise_mw = 1e-10;
  double pathloss_exponent = 4.0;
  double min_distance_m = 1.0;

  bool operator==(const RadioParams&) const = default;
};

struct Rsu {
  int id = 0;                    ///< 1-based, ascending along the road
  double segment_length_m = 0;   ///< length of the road segment it serves
  double capacity_hz = 0;        ///< total computation capacity, cycles/s
  double position_m = 0;         ///< distance of the unit from the road start

  bool operator==(const Rsu&) const = default;
};

struct Task {
  double input_bits = 0;
  double cycles = 0;
  double max_latency_s = 0;

  bool operator==(const Task&) const = default;
};

struct Vehicle {
  int id = 0;                    ///< 1-based
  Task task;
  double local_capacity_hz = 0;  ///< on-board processor, cycles/s

  bool operator==(const Vehicle&) const = default;
};

/// Whether the trip term of an offload delay counts through the serving
/// segment (inclusive, the default) or only up to its entry (exclusive).
enum class TravelPrefix { inclusive, exclusive };

enum class RsuPlacement { midpoint, uniform };

struct GeneratorParams {
  double road_length_m = 100.0;
  int num_rsus = 5;
  int num_vehicles = 40;
  double speed_kmh = 120.0;
  std::vector<double> capacities_ghz = {5, 10, 15, 20, 25};
  double bandwidth_hz = 1.25e6;
  double tx_power_mw = 100.0;
  double noise_mw = 1e-10;
  double pathloss_exponent = 4.0;
  double min_distance_m = 1.0;
  double input_kb_min = 100.0, input_kb_max = 300.0;
  double cycles_gc_min = 0.5, cycles_gc_max = 1.5;
  double latency_s_min = 8.0, latency_s_max = 10.0;
  double local_ghz = 1.0;
  double alpha = 1.0;
  double beta = 10.0;
  double rho = 1.5;
  RsuPlacement placement = RsuPlacement::midpoint;
  TravelPrefix travel_prefix = TravelPrefix::inclusive;

  bool operator==(const GeneratorParams&) const = default;
};

struct Scenario {
  std::vector<Rsu> rsus;
  std::vector<Vehicle> vehicles;
  double speed_mps = 0;
  RadioParams radio;
  double utility_alpha = 1.0;
  double utility_beta = 10.0;
  double rho = 1.5;              ///< candidate-set slack factor, >= 1
  TravelPrefix travel_prefix = TravelPrefix::inclusive;

  // Generation provenance, kept so a scenario can be written back out.
  GeneratorParams params;
  std::uint64_t seed = 0;

  int num_rsus() const { return static_cast<int>(rsus.size()); }
  int num_vehicles() const { return static_cast<int>(vehicles.size()); }

  /// Road coordinate where segment `rsu_id` begins (sum of earlier lengths).
  double segment_entry_m(int rsu_id) const;

  bool operator==(const Scenario&) const = default;
};

/// Deterministic scenario construction. The same (seed, params) pair yields a
/// bit-identical scenario on every platform: draws come from mt19937_64 mapped
/// to closed uniform ranges through 53-bit fractions, consumed in a fixed
/// order (uniform placement draws per segment first, then per vehicle the
/// input size, cycle count, and latency budget, in vehicle index order).
Scenario generate(std::uint64_t seed, const GeneratorParams& params = {});

/// Read generator parameters plus seed from a flat key/value file and build
/// the scenario they describe. Errors carry the offending key.
Scenario load_config(const std::string& path);

/// Write the generating parameters of `s` in canonical form; load_config on
/// the result reproduces `s` exactly.
void save_config(const Scenario& s, const std::string& path);

/// Link distance between a transmit anchor on the road and an RSU, floored at
/// radio.min_distance_m. Vehicles transmit to RSU j on entering its segment,
/// so their anchor for link j is segment_entry_m(j).
double distance(const Scenario& s, double anchor_m, int rsu_id);

}  // namespace josc
