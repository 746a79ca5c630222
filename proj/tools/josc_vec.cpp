#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "josc/acceptance.hpp"
#include "josc/errors.hpp"
#include "josc/harness.hpp"
#include "josc/scenario.hpp"

namespace {

// "1..20" (inclusive range) or "3,7,9" or a single number.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = std::stoull(text.substr(0, dots));
    const std::uint64_t hi = std::stoull(text.substr(dots + 2));
    if (hi < lo) throw josc::config_error("seeds", "seed range is reversed: " + text);
    for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
    return seeds;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (item.empty()) throw josc::config_error("seeds", "empty seed entry in: " + text);
    seeds.push_back(std::stoull(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return seeds;
}

// "key=start:stop:step" (inclusive stop) or "key=v1,v2,...".
void parse_sweep(const std::string& text, std::string& key, std::vector<double>& values) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw josc::config_error("sweep", "expected key=values, got: " + text);
  key = text.substr(0, eq);
  const std::string spec = text.substr(eq + 1);
  values.clear();
  if (spec.find(':') != std::string::npos) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw josc::config_error("sweep", "range needs start:stop:step, got: " + spec);
    const double start = std::stod(spec.substr(0, c1));
    const double stop = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(spec.substr(c2 + 1));
    if (!(step > 0)) throw josc::config_error("sweep", "sweep step must be positive");
    for (double v = start; v <= stop + 1e-9 * step; v += step) values.push_back(v);
  } else {
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      const auto comma = spec.find(',', pos);
      const std::string item =
          spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (item.empty()) throw josc::config_error("sweep", "empty sweep entry in: " + spec);
      values.push_back(std::stod(item));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (values.empty()) throw josc::config_error("sweep", "sweep produced no values");
}

std::vector<std::string> split_algos(const std::string& text) {
  std::vector<std::string> algos;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) algos.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (algos.empty()) throw josc::config_error("algos", "no algorithms requested");
  return algos;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint offloading and compute-share simulator for vehicular edge servers"};
  app.require_subcommand(1);

  std::string config_path, algos_text = "josc,gs,ra", sweep_text, seeds_text, out_dir;
  unsigned threads = 0;
  CLI::App* run = app.add_subcommand("run", "Run algorithms over seeds and a parameter sweep");
  run->add_option("--config", config_path, "scenario configuration file")->required();
  run->add_option("--algos", algos_text, "comma list from josc,gs,ra,oracle");
  run->add_option("--sweep", sweep_text, "key=start:stop:step or key=v1,v2,...");
  run->add_option("--seeds", seeds_text, "N..M range or comma list (default: config seed)");
  run->add_option("--out", out_dir, "directory for results.csv, traces, and the chart");
  run->add_option("--threads", threads, "worker threads (default: JOSC_THREADS or hardware)");

  std::string suite_text = "core";
  CLI::App* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("--suite", suite_text, "core or all")
      ->check(CLI::IsMember({"core", "all"}));

  std::uint64_t gen_seed = 1;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "Write a default scenario configuration");
  gen->add_option("--seed", gen_seed, "generator seed")->required();
  gen->add_option("--out", gen_out, "output path")->required();

  try {
    app.parse(argc, argv);

    if (run->parsed()) {
      const josc::Scenario base = josc::load_config(config_path);
      josc::ExperimentSpec spec;
      spec.base = base.params;
      spec.algos = split_algos(algos_text);
      spec.seeds = seeds_text.empty() ? std::vector<std::uint64_t>{base.seed}
                                      : parse_seeds(seeds_text);
      if (!sweep_text.empty()) parse_sweep(sweep_text, spec.sweep_key, spec.sweep_values);
      spec.out_dir = out_dir;
      spec.threads = threads;
      const josc::RunOutputs outputs = josc::run_experiment(spec);
      std::cout << josc::results_csv(outputs.rows);
      for (const std::string& f : outputs.files) std::cerr << "wrote " << f << "\n";
      return 0;
    }
    if (verify->parsed()) {
      const josc::Suite suite = suite_text == "all" ? josc::Suite::all : josc::Suite::core;
      const auto results = josc::run_acceptance(suite, std::cout);
      return josc::all_passed(results) ? 0 : 1;
    }
    if (gen->parsed()) {
      const josc::Scenario s = josc::generate(gen_seed);
      josc::save_config(s, gen_out);
      std::cout << "wrote " << gen_out << "\n";
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const josc::refusal_error& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 3;
  } catch (const josc::config_error& e) {
    std::cerr << "configuration error (" << e.key() << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
