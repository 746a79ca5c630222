#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "josc/errors.hpp"
#include "josc/harness.hpp"

using namespace josc;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// results.csv with the wall clock column blanked, for byte comparisons.
std::string mask_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      out << line << "\n";
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() >= 8) fields[7] = "X";
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << "\n";
  }
  return out.str();
}

// Heavy tasks relative to the on-board processor, so offloading is
// attractive and the runs produce real allocation traces.
ExperimentSpec small_spec(const std::string& out_dir) {
  ExperimentSpec spec;
  spec.base.num_vehicles = 5;
  spec.base.cycles_gc_min = 2.0;
  spec.base.cycles_gc_max = 6.0;
  spec.algos = {"josc", "gs", "ra"};
  spec.seeds = {1, 2};
  spec.out_dir = out_dir;
  spec.threads = 1;
  return spec;
}

}  // namespace

TEST_CASE("float formatting is the shortest round trip") {
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(0.0) == "0");
  for (double v : {0.1, 1.0 / 3.0, 1.25e6, 9007199254740991.0, 1e-300, 4.0758123456789}) {
    const std::string text = format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
}

TEST_CASE("results serialize to a stable csv layout") {
  std::vector<ResultRow> rows(3);
  rows[0] = {1, "josc", 40.0, 12.5, {3, 2}, 4, 100, 250, true};
  rows[1] = {2, "ra", 40.5, -3.25, {5}, 1, 7, 3, false};
  rows[2] = {3, "gs", 1.0, 0.0, {}, 1, 0, 0, true};
  CHECK(results_csv(rows) ==
        "seed,algo,sweep_value,system_utility,per_server_counts,outer_iters,"
        "inner_iters_total,wall_ms,feasible\n"
        "1,josc,40,12.5,3|2,4,100,250,1\n"
        "2,ra,40.5,-3.25,5,1,7,3,0\n"
        "3,gs,1,0,,1,0,0,1\n");
}

TEST_CASE("thread resolution prefers the explicit count then the environment") {
  CHECK(resolve_threads(3) == 3);
  setenv("JOSC_THREADS", "2", 1);
  CHECK(resolve_threads(0) == 2);
  unsetenv("JOSC_THREADS");
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("an experiment run writes ordered rows and the full file set") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "josc_exp_files";
  fs::remove_all(dir);

  const RunOutputs out = run_experiment(small_spec(dir.string()));
  REQUIRE(out.rows.size() == 6);
  const char* order[6][2] = {{"1", "josc"}, {"1", "gs"}, {"1", "ra"},
                             {"2", "josc"}, {"2", "gs"}, {"2", "ra"}};
  for (int k = 0; k < 6; ++k) {
    CHECK(std::to_string(out.rows[k].seed) == order[k][0]);
    CHECK(out.rows[k].algo == order[k][1]);
    CHECK(out.rows[k].sweep_value == 5.0);  // no sweep: the vehicle count
    CHECK(out.rows[k].per_server_counts.size() == 5);
    CHECK(out.rows[k].feasible);
  }

  for (const char* name : {"results.csv", "convergence_1.csv", "convergence_2.csv",
                           "load_1.csv", "load_2.csv", "chart.svg"}) {
    CAPTURE(name);
    CHECK(fs::exists(dir / name));
  }
  CHECK(slurp((dir / "results.csv").string()) == results_csv(out.rows));
  const std::string conv = slurp((dir / "convergence_1.csv").string());
  CHECK(conv.substr(0, conv.find('\n')) ==
        "sweep_value,outer_iter,inner_iter,sum_f_ghz,max_multiplier_change,system_utility");
  const std::string load = slurp((dir / "load_1.csv").string());
  CHECK(load.substr(0, load.find('\n')) == "sweep_value,algo,server,count");
  const std::string svg = slurp((dir / "chart.svg").string());
  CHECK(svg.substr(0, 4) == "<svg");
  CHECK(svg.find("josc") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  fs::remove_all(dir);
}

TEST_CASE("runs are deterministic regardless of the thread count") {
  namespace fs = std::filesystem;
  const fs::path a = fs::temp_directory_path() / "josc_exp_a";
  const fs::path b = fs::temp_directory_path() / "josc_exp_b";
  fs::remove_all(a);
  fs::remove_all(b);

  ExperimentSpec sa = small_spec(a.string());
  ExperimentSpec sb = small_spec(b.string());
  sb.threads = 2;
  run_experiment(sa);
  run_experiment(sb);

  CHECK(mask_wall_ms(slurp((a / "results.csv").string())) ==
        mask_wall_ms(slurp((b / "results.csv").string())));
  CHECK(slurp((a / "convergence_1.csv").string()) == slurp((b / "convergence_1.csv").string()));
  CHECK(slurp((a / "load_2.csv").string()) == slurp((b / "load_2.csv").string()));
  CHECK(slurp((a / "chart.svg").string()) == slurp((b / "chart.svg").string()));

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("sweeps regenerate the scenario per point") {
  ExperimentSpec spec;
  spec.base.num_vehicles = 6;
  spec.algos = {"gs"};
  spec.seeds = {1};
  spec.sweep_key = "num_vehicles";
  spec.sweep_values = {4, 6};
  spec.threads = 1;

  const RunOutputs out = run_experiment(spec);
  REQUIRE(out.rows.size() == 2);
  CHECK(out.files.empty());
  CHECK(out.rows[0].sweep_value == 4.0);
  CHECK(out.rows[1].sweep_value == 6.0);
  for (const ResultRow& r : out.rows) {
    int offloaded = 0;
    for (int c : r.per_server_counts) offloaded += c;
    CHECK(offloaded <= static_cast<int>(r.sweep_value));
  }
}

TEST_CASE("unknown sweep keys and algorithms are configuration errors") {
  ExperimentSpec spec;
  spec.base.num_vehicles = 4;
  spec.algos = {"gs"};
  spec.seeds = {1};
  spec.sweep_key = "speed";
  spec.sweep_values = {1.0};
  try {
    run_experiment(spec);
    CHECK(false);
  } catch (const config_error& e) {
    CHECK(e.key() == "speed");
    CHECK(std::string(e.what()) == "unknown sweep key: speed");
  }

  spec.sweep_key.clear();
  spec.sweep_values.clear();
  spec.algos = {"simplex"};
  try {
    run_experiment(spec);
    CHECK(false);
  } catch (const config_error& e) {
    CHECK(e.key() == "algos");
    CHECK(std::string(e.what()) == "unknown algorithm: simplex");
  }
}
