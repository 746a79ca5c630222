#include "josc/model.hpp"

#include <cmath>
#include <string>

#include "josc/errors.hpp"

namespace josc {

double rate_bps(const RadioParams& radio, double distance_m) {
  if (!(distance_m > 0)) throw model_error("link distance must be positive");
  const double gain = std::pow(distance_m, -radio.pathloss_exponent);
  const double snr = radio.tx_power_mw * gain / radio.noise_mw;
  return radio.bandwidth_hz * std::log2(1.0 + snr);
}

double comm_time_s(const Task& task, double rate_bps) {
  if (!(rate_bps > 0)) throw model_error("rate must be positive");
  return task.input_bits / rate_bps;
}

double vec_compute_time_s(const Task& task, double f_hz) {
  if (!(f_hz > 0)) throw model_error("computation share must be positive");
  return task.cycles / f_hz;
}

double local_time_s(const Vehicle& v) {
  return v.task.cycles / v.local_capacity_hz;
}

double travel_time_s(const Scenario& s, int rsu_id) {
  const int through = s.travel_prefix == TravelPrefix::inclusive ? rsu_id : rsu_id - 1;
  double dist = 0;
  for (int k = 0; k < through; ++k) dist += s.rsus[k].segment_length_m;
  return dist / s.speed_mps;
}

LinkDelay offload_delay(const Scenario& s, int vehicle, int rsu_id, double f_hz) {
  const Vehicle& v = s.vehicles.at(vehicle);
  LinkDelay d;
  d.travel_s = travel_time_s(s, rsu_id);
  const double dist = distance(s, s.segment_entry_m(rsu_id), rsu_id);
  d.comm_s = comm_time_s(v.task, rate_bps(s.radio, dist));
  d.compute_s = vec_compute_time_s(v.task, f_hz);
  d.total_s = d.travel_s + d.comm_s + d.compute_s;
  return d;
}

double task_delay_s(const Scenario& s, int vehicle, std::span<const double> x_row,
                    std::span<const double> f_row) {
  const int m = s.num_rsus();
  if (static_cast<int>(x_row.size()) != m + 1 || static_cast<int>(f_row.size()) != m)
    throw model_error("placement row must have M+1 entries and resource row M");
  int assigned = -1;
  for (int j = 0; j <= m; ++j) {
    if (x_row[j] == 0.0) continue;
    if (x_row[j] != 1.0 || assigned != -1)
      throw model_error("placement row must be one-hot");
    assigned = j;
  }
  if (assigned == -1) throw model_error("placement row must be one-hot");
  if (assigned == 0) return local_time_s(s.vehicles.at(vehicle));
  return offload_delay(s, vehicle, assigned, f_row[assigned - 1]).total_s;
}

double utility(const Scenario& s, double delay_s) {
  const double arg = 1.0 + s.utility_beta - delay_s;
  if (!(arg > 0))
    throw model_error("delay " + std::to_string(delay_s) + " s exceeds the utility domain");
  return s.utility_alpha * std::log2(arg);
}

double system_utility(const Scenario& s, const Matrix& x, const Matrix& f) {
  double total = 0;
  for (int i = 0; i < s.num_vehicles(); ++i) {
    const std::span<const double> xr(&x.data[static_cast<std::size_t>(i) * x.cols], x.cols);
    const std::span<const double> fr(&f.data[static_cast<std::size_t>(i) * f.cols], f.cols);
    total += utility(s, task_delay_s(s, i, xr, fr));
  }
  return total;
}

TransformedInstance transform(const Scenario& s) {
  const int n = s.num_vehicles();
  const int m = s.num_rsus();
  TransformedInstance ti;
  ti.fixed_offset_s = Matrix(n, m);
  ti.budget_s.resize(n);
  ti.local_delay_s.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vehicle& v = s.vehicles[i];
    ti.local_delay_s[i] = local_time_s(v);
    ti.budget_s[i] = v.task.max_latency_s - ti.local_delay_s[i];
    for (int j = 1; j <= m; ++j) {
      const double dist = distance(s, s.segment_entry_m(j), j);
      const double comm = comm_time_s(v.task, rate_bps(s.radio, dist));
      ti.fixed_offset_s(i, j - 1) = travel_time_s(s, j) + comm - ti.local_delay_s[i];
    }
  }
  return ti;
}

}  // namespace josc
