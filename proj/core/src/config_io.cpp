#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "josc/errors.hpp"
#include "josc/harness.hpp"
#include "josc/scenario.hpp"

namespace josc {
namespace {

const char* const kRequiredKeys[] = {
    "road_length_m", "num_rsus",      "num_vehicles",    "speed_kmh",
    "capacities_ghz", "bandwidth_hz", "tx_power_mw",     "noise_mw",
    "pathloss_exponent", "min_distance_m", "input_kb_range", "cycles_gc_range",
    "latency_s_range", "local_ghz",   "alpha",           "beta",
    "rho",            "seed"};
const char* const kOptionalKeys[] = {"rsu_placement", "travel_prefix"};

std::string trim(const std::string& in) {
  const auto b = in.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = in.find_last_not_of(" \t\r");
  return in.substr(b, e - b + 1);
}

bool known_key(const std::string& k) {
  for (const char* r : kRequiredKeys)
    if (k == r) return true;
  for (const char* o : kOptionalKeys)
    if (k == o) return true;
  return false;
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw config_error(key, "invalid value for " + key + ": '" + t + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw config_error(key, "invalid value for " + key + ": empty list");
  return out;
}

std::pair<double, double> parse_range(const std::string& key, const std::string& text) {
  const auto vals = parse_list(key, text);
  if (vals.size() != 2)
    throw config_error(key, key + " must be a low,high pair");
  return {vals[0], vals[1]};
}

std::uint64_t parse_seed(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw config_error("seed", "invalid value for seed: '" + t + "'");
  return v;
}

}  // namespace

Scenario load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("", "cannot open config file: " + path);

  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("", "line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!known_key(key)) throw config_error(key, "unknown key: " + key);
    if (kv.count(key)) throw config_error(key, "duplicate key: " + key);
    kv[key] = val;
  }
  for (const char* r : kRequiredKeys)
    if (!kv.count(r)) throw config_error(r, std::string("missing key: ") + r);

  GeneratorParams p;
  p.road_length_m = parse_number("road_length_m", kv["road_length_m"]);
  p.num_rsus = static_cast<int>(parse_number("num_rsus", kv["num_rsus"]));
  p.num_vehicles = static_cast<int>(parse_number("num_vehicles", kv["num_vehicles"]));
  p.speed_kmh = parse_number("speed_kmh", kv["speed_kmh"]);
  p.capacities_ghz = parse_list("capacities_ghz", kv["capacities_ghz"]);
  p.bandwidth_hz = parse_number("bandwidth_hz", kv["bandwidth_hz"]);
  p.tx_power_mw = parse_number("tx_power_mw", kv["tx_power_mw"]);
  p.noise_mw = parse_number("noise_mw", kv["noise_mw"]);
  p.pathloss_exponent = parse_number("pathloss_exponent", kv["pathloss_exponent"]);
  p.min_distance_m = parse_number("min_distance_m", kv["min_distance_m"]);
  std::tie(p.input_kb_min, p.input_kb_max) = parse_range("input_kb_range", kv["input_kb_range"]);
  std::tie(p.cycles_gc_min, p.cycles_gc_max) =
      parse_range("cycles_gc_range", kv["cycles_gc_range"]);
  std::tie(p.latency_s_min, p.latency_s_max) =
      parse_range("latency_s_range", kv["latency_s_range"]);
  p.local_ghz = parse_number("local_ghz", kv["local_ghz"]);
  p.alpha = parse_number("alpha", kv["alpha"]);
  p.beta = parse_number("beta", kv["beta"]);
  p.rho = parse_number("rho", kv["rho"]);

  if (kv.count("rsu_placement")) {
    const std::string v = kv["rsu_placement"];
    if (v == "midpoint") p.placement = RsuPlacement::midpoint;
    else if (v == "uniform") p.placement = RsuPlacement::uniform;
    else throw config_error("rsu_placement", "rsu_placement must be midpoint or uniform");
  }
  if (kv.count("travel_prefix")) {
    const std::string v = kv["travel_prefix"];
    if (v == "inclusive") p.travel_prefix = TravelPrefix::inclusive;
    else if (v == "exclusive") p.travel_prefix = TravelPrefix::exclusive;
    else throw config_error("travel_prefix", "travel_prefix must be inclusive or exclusive");
  }

  return generate(parse_seed(kv["seed"]), p);
}

void save_config(const Scenario& s, const std::string& path) {
  const GeneratorParams& p = s.params;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("", "cannot write config file: " + path);

  const auto num = [](double v) { return format_double(v); };
  out << "road_length_m = " << num(p.road_length_m) << "\n";
  out << "num_rsus = " << p.num_rsus << "\n";
  out << "num_vehicles = " << p.num_vehicles << "\n";
  out << "speed_kmh = " << num(p.speed_kmh) << "\n";
  out << "capacities_ghz = ";
  for (std::size_t j = 0; j < p.capacities_ghz.size(); ++j)
    out << (j ? ", " : "") << num(p.capacities_ghz[j]);
  out << "\n";
  out << "bandwidth_hz = " << num(p.bandwidth_hz) << "\n";
  out << "tx_power_mw = " << num(p.tx_power_mw) << "\n";
  out << "noise_mw = " << num(p.noise_mw) << "\n";
  out << "pathloss_exponent = " << num(p.pathloss_exponent) << "\n";
  out << "min_distance_m = " << num(p.min_distance_m) << "\n";
  out << "input_kb_range = " << num(p.input_kb_min) << ", " << num(p.input_kb_max) << "\n";
  out << "cycles_gc_range = " << num(p.cycles_gc_min) << ", " << num(p.cycles_gc_max) << "\n";
  out << "latency_s_range = " << num(p.latency_s_min) << ", " << num(p.latency_s_max) << "\n";
  out << "local_ghz = " << num(p.local_ghz) << "\n";
  out << "alpha = " << num(p.alpha) << "\n";
  out << "beta = " << num(p.beta) << "\n";
  out << "rho = " << num(p.rho) << "\n";
  out << "seed = " << s.seed << "\n";
  out << "rsu_placement = "
      << (p.placement == RsuPlacement::midpoint ? "midpoint" : "uniform") << "\n";
  out << "travel_prefix = "
      << (p.travel_prefix == TravelPrefix::inclusive ? "inclusive" : "exclusive") << "\n";
}

}  // namespace josc
