#include "josc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "josc/errors.hpp"

namespace josc {
namespace {

int algo_rank(const std::string& algo) {
  if (algo == "josc") return 0;
  if (algo == "gs") return 1;
  if (algo == "ra") return 2;
  if (algo == "oracle") return 3;
  return 4;
}

GeneratorParams apply_sweep(GeneratorParams base, const std::string& key, double value) {
  if (key.empty()) return base;
  if (key == "num_vehicles")
    base.num_vehicles = static_cast<int>(std::lround(value));
  else if (key == "bandwidth_hz")
    base.bandwidth_hz = value;
  else if (key == "rho")
    base.rho = value;
  else
    throw config_error(key, "unknown sweep key: " + key);
  return base;
}

struct ConvRow {
  double sweep = 0;
  int outer = 0;
  int inner = 0;
  double sum_f_ghz = 0;
  double change = 0;
  double utility = 0;
};

struct LoadRow {
  double sweep = 0;
  std::string algo;
  int server = 0;
  int count = 0;
};

struct TaskOut {
  std::uint64_t seed = 0;
  std::vector<ResultRow> rows;
  std::vector<ConvRow> conv;
  std::vector<LoadRow> loads;
  std::exception_ptr error;
};

std::vector<int> server_counts(const Scenario& s, const Solution& sol) {
  std::vector<int> counts(s.num_rsus(), 0);
  for (int i = 0; i < s.num_vehicles(); ++i)
    for (int j = 1; j <= s.num_rsus(); ++j)
      if (sol.selection.x(i, j) == 1.0) ++counts[j - 1];
  return counts;
}

Solution run_algo(const Scenario& s, const std::string& algo, const ExperimentSpec& spec) {
  if (algo == "josc") return josc(s, spec.josc_opts);
  if (algo == "gs") return gs(s);
  if (algo == "ra") return ra(s, spec.josc_opts.alloc);
  if (algo == "oracle") return oracle(s, spec.oracle_limits, spec.josc_opts.alloc);
  throw config_error("algos", "unknown algorithm: " + algo);
}

void run_task(const ExperimentSpec& spec, std::uint64_t seed, double sweep_value,
              TaskOut& out) {
  const GeneratorParams params = apply_sweep(spec.base, spec.sweep_key, sweep_value);
  const Scenario s = generate(seed, params);
  for (const std::string& algo : spec.algos) {
    const auto start = std::chrono::steady_clock::now();
    const Solution sol = run_algo(s, algo, spec);
    const auto stop = std::chrono::steady_clock::now();

    ResultRow row;
    row.seed = seed;
    row.algo = algo;
    row.sweep_value = sweep_value;
    row.system_utility = sol.system_utility;
    row.per_server_counts = server_counts(s, sol);
    row.outer_iters = static_cast<int>(sol.outer_trace.size());
    row.inner_iters_total = 0;
    for (const OuterTracePoint& tp : sol.outer_trace)
      row.inner_iters_total += tp.inner_iterations;
    row.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
    row.feasible = sol.feasible;
    out.rows.push_back(row);

    for (std::size_t k = 0; k < row.per_server_counts.size(); ++k)
      out.loads.push_back(
          {sweep_value, algo, static_cast<int>(k) + 1, row.per_server_counts[k]});

    if (algo == "josc") {
      for (std::size_t r = 0; r < sol.alloc_traces.size(); ++r)
        for (const AllocationTracePoint& tp : sol.alloc_traces[r])
          out.conv.push_back({sweep_value, static_cast<int>(r) + 1, tp.iteration,
                              tp.sum_f_hz / kHzPerGhz, tp.max_scaled_change,
                              tp.best_feasible_utility});
    }
  }
}

std::string chart_svg(const std::vector<ResultRow>& rows) {
  // Mean utility per (algo, sweep value), drawn as one polyline per algorithm.
  std::map<std::string, std::map<double, std::pair<double, int>>> agg;
  for (const ResultRow& r : rows) {
    auto& cell = agg[r.algo][r.sweep_value];
    cell.first += r.system_utility;
    cell.second += 1;
  }
  std::set<double> sweeps;
  double ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& [algo, series] : agg) {
    for (const auto& [x, cell] : series) {
      sweeps.insert(x);
      const double mean = cell.first / cell.second;
      if (first) {
        ymin = ymax = mean;
        first = false;
      }
      ymin = std::min(ymin, mean);
      ymax = std::max(ymax, mean);
    }
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1;
    ymax += 1;
  }
  const double pad = 0.08 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double xmin = sweeps.empty() ? 0 : *sweeps.begin();
  const double xmax = sweeps.empty() ? 1 : *sweeps.rbegin();
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;

  const double w = 640, h = 400, left = 64, right = 24, top = 24, bottom = 48;
  auto px = [&](double x) { return left + (x - xmin) / xspan * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - ymin) / (ymax - ymin) * (h - top - bottom); };

  const std::map<std::string, std::string> colors = {{"josc", "#1f77b4"},
                                                     {"gs", "#ff7f0e"},
                                                     {"ra", "#2ca02c"},
                                                     {"oracle", "#d62728"}};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right
      << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << h - bottom << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    const double yy = py(yv);
    svg << "<line x1=\"" << left - 4 << "\" y1=\"" << yy << "\" x2=\"" << left << "\" y2=\""
        << yy << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << yy + 4
        << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
        << format_double(std::round(yv * 100.0) / 100.0) << "</text>\n";
  }
  for (double xv : sweeps) {
    const double xx = px(xv);
    svg << "<line x1=\"" << xx << "\" y1=\"" << h - bottom << "\" x2=\"" << xx << "\" y2=\""
        << h - bottom + 4 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << xx << "\" y=\"" << h - bottom + 18
        << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << format_double(xv) << "</text>\n";
  }
  svg << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 12
      << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">sweep value"
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (top + h - bottom) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 16 "
      << (top + h - bottom) / 2 << ")\">mean system utility</text>\n";

  int legend = 0;
  for (const auto& [algo, series] : agg) {
    const auto it = colors.find(algo);
    const std::string color = it != colors.end() ? it->second : "#555555";
    std::ostringstream pts;
    for (const auto& [x, cell] : series)
      pts << px(x) << "," << py(cell.first / cell.second) << " ";
    if (series.size() > 1)
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
          << pts.str() << "\"/>\n";
    for (const auto& [x, cell] : series)
      svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(cell.first / cell.second)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = top + 16 * legend++;
    svg << "<line x1=\"" << w - right - 120 << "\" y1=\"" << ly << "\" x2=\""
        << w - right - 96 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << w - right - 90 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << algo << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::string>& files) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  files.push_back(path.string());
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("JOSC_THREADS")) {
    unsigned parsed = 0;
    const auto res = std::from_chars(env, env + std::string(env).size(), parsed);
    if (res.ec == std::errc() && parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "seed,algo,sweep_value,system_utility,per_server_counts,outer_iters,"
         "inner_iters_total,wall_ms,feasible\n";
  for (const ResultRow& r : rows) {
    out << r.seed << "," << r.algo << "," << format_double(r.sweep_value) << ","
        << format_double(r.system_utility) << ",";
    for (std::size_t k = 0; k < r.per_server_counts.size(); ++k) {
      if (k) out << "|";
      out << r.per_server_counts[k];
    }
    out << "," << r.outer_iters << "," << r.inner_iters_total << "," << r.wall_ms << ","
        << (r.feasible ? 1 : 0) << "\n";
  }
  return out.str();
}

RunOutputs run_experiment(const ExperimentSpec& spec) {
  std::vector<double> sweeps = spec.sweep_values;
  if (spec.sweep_key.empty() || sweeps.empty())
    sweeps = {static_cast<double>(spec.base.num_vehicles)};

  struct TaskDef {
    std::uint64_t seed;
    double sweep;
  };
  std::vector<TaskDef> defs;
  for (std::uint64_t seed : spec.seeds)
    for (double v : sweeps) defs.push_back({seed, v});

  std::vector<TaskOut> outs(defs.size());
  const unsigned threads = std::min<unsigned>(
      resolve_threads(spec.threads), std::max<std::size_t>(defs.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= defs.size()) break;
      outs[k].seed = defs[k].seed;
      try {
        run_task(spec, defs[k].seed, defs[k].sweep, outs[k]);
      } catch (...) {
        outs[k].error = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  RunOutputs result;
  for (const TaskOut& out : outs)
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
  std::sort(result.rows.begin(), result.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              if (a.seed != b.seed) return a.seed < b.seed;
              const int ra = algo_rank(a.algo), rb = algo_rank(b.algo);
              if (ra != rb) return ra < rb;
              if (a.algo != b.algo) return a.algo < b.algo;
              return a.sweep_value < b.sweep_value;
            });

  if (!spec.out_dir.empty()) {
    const std::filesystem::path dir(spec.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "results.csv", results_csv(result.rows), result.files);

    for (std::uint64_t seed : spec.seeds) {
      std::ostringstream conv;
      conv << "sweep_value,outer_iter,inner_iter,sum_f_ghz,max_multiplier_change,"
              "system_utility\n";
      bool any_conv = false;
      std::ostringstream load;
      load << "sweep_value,algo,server,count\n";
      bool any_load = false;
      for (std::size_t k = 0; k < defs.size(); ++k) {
        if (defs[k].seed != seed) continue;
        for (const ConvRow& c : outs[k].conv) {
          conv << format_double(c.sweep) << "," << c.outer << "," << c.inner << ","
               << format_double(c.sum_f_ghz) << "," << format_double(c.change) << ","
               << format_double(c.utility) << "\n";
          any_conv = true;
        }
        for (const LoadRow& l : outs[k].loads) {
          load << format_double(l.sweep) << "," << l.algo << "," << l.server << ","
               << l.count << "\n";
          any_load = true;
        }
      }
      if (any_conv)
        write_file(dir / ("convergence_" + std::to_string(seed) + ".csv"), conv.str(),
                   result.files);
      if (any_load)
        write_file(dir / ("load_" + std::to_string(seed) + ".csv"), load.str(),
                   result.files);
    }
    write_file(dir / "chart.svg", chart_svg(result.rows), result.files);
  }

  for (const TaskOut& out : outs)
    if (out.error) std::rethrow_exception(out.error);
  return result;
}

}  // namespace josc
