// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <thread>

#include "cfjcas/errors.hpp"

namespace cfjcas {

namespace {

// Substream ids hanging off each setup seed.
constexpr std::uint64_t kStreamUe = 1;
constexpr std::uint64_t kStreamChannel = 2;
constexpr std::uint64_t kStreamSymbols = 3;
constexpr std::uint64_t kStreamCalibration = 4;
constexpr std::uint64_t kStreamH0Eval = 5;
constexpr std::uint64_t kStreamRcs = 6;
constexpr std::uint64_t kStreamNoise = 7;

void parallel_for(int n_jobs, int n_threads,
                  const std::function<void(int)>& fn) {
  n_threads = std::max(1, std::min(n_threads, n_jobs));
  if (n_threads == 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

int ExperimentPlan::calibration_trials() const {
  return static_cast<int>(std::ceil(calibration_multiple / p_fa));
}

std::string method_name(Method m) {
  switch (m) {
    case Method::jcas_with_s0: return "jcas_with_s0";
    case Method::jcas_without_s0: return "jcas_without_s0";
    case Method::baseline: return "baseline";
  }
  return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
  if (name == "jcas_with_s0") return Method::jcas_with_s0;
  if (name == "jcas_without_s0") return Method::jcas_without_s0;
  if (name == "baseline") return Method::baseline;
  return std::nullopt;
}

std::uint64_t setup_seed_for(std::uint64_t experiment_seed, int setup_index) {
  return Rng(experiment_seed).fork(1000 + static_cast<std::uint64_t>(setup_index)).seed();
}

PipelineContext prepare_setup(const ScenarioConfig& scenario_cfg,
                              const ExperimentPlan& plan, Method method,
                              const SweepPoint& point,
                              std::uint64_t setup_seed) {
  ScenarioConfig cfg = scenario_cfg;
  double rcs_db = plan.rcs_db;
  std::optional<double> p_total_cap;
  if (point.param == "n_ue") cfg.n_ue = static_cast<int>(point.value);
  else if (point.param == "rcs_db") rcs_db = point.value;
  else if (point.param == "p_total_dbm") p_total_cap = dbm_to_watt(point.value);

  Rng root(setup_seed);
  PipelineContext ctx;
  ctx.scenario = generate_scenario(root.fork(kStreamUe).seed(), cfg);
  ctx.angles = compute_angles(ctx.scenario);

  ChannelOptions chan_opts;
  chan_opts.rcs_variance = db_to_linear(rcs_db);
  chan_opts.rcs_mode = plan.rcs_mode;
  chan_opts.shadowing_std_db = plan.shadowing_std_db;
  Rng chan_rng = root.fork(kStreamChannel);
  ctx.channels = build_channel_set(ctx.scenario, ctx.angles, chan_opts, chan_rng);

  const double lambda =
      plan.rzf_lambda ? *plan.rzf_lambda : default_rzf_lambda(ctx.scenario);
  ctx.precoders = build_precoders(ctx.channels, lambda);
  ctx.coeffs = build_sinr_coefficients(ctx.channels, ctx.precoders,
                                       std::sqrt(ctx.scenario.noise_variance_w));
  ctx.a_matrix = build_sensing_matrix(ctx.channels, ctx.precoders, ctx.angles,
                                      ctx.scenario.noise_variance_w);

  PowerOptions popts;
  popts.gamma_c = db_to_linear(plan.gamma_c_db);
  popts.p_tx = ctx.scenario.p_tx_max_w;
  popts.p_total_cap = p_total_cap;
  switch (method) {
    case Method::baseline:
      ctx.power = baseline_allocate(ctx.coeffs, ctx.precoders, popts, &ctx.a_matrix);
      break;
    case Method::jcas_with_s0:
      popts.with_sensing_symbol = true;
      ctx.power = ccp_allocate(ctx.a_matrix, ctx.coeffs, ctx.precoders, popts);
      break;
    case Method::jcas_without_s0:
      popts.with_sensing_symbol = false;
      ctx.power = ccp_allocate(ctx.a_matrix, ctx.coeffs, ctx.precoders, popts);
      break;
  }

  Rng sym_rng = root.fork(kStreamSymbols);
  ctx.symbols = draw_symbols(plan.tau, ctx.scenario.n_ue, plan.alphabet, sym_rng);
  ctx.maps = build_sensing_maps(ctx.angles, ctx.precoders, ctx.power.q, ctx.symbols);
  // Floor keeps the ridge defined when a sweep pins the RCS variance to zero.
  // 1e-22 sits far below any physical gain variance yet keeps the statistic's
  // data-dependent term representable next to ln C, so threshold calibration
  // still resolves trial-to-trial variation and P_d degrades to P_fa.
  const RMatrix floored = ctx.channels.sensing_gain_variances.cwiseMax(1e-22);
  ctx.det_ctx = make_detector_context(floored, ctx.scenario.noise_variance_w);
  return ctx;
}

SetupResult run_setup(const ScenarioConfig& scenario_cfg,
                      const ExperimentPlan& plan, Method method,
                      const SweepPoint& point, std::uint64_t setup_seed) {
  SetupResult res;
  PipelineContext ctx;
  try {
    ctx = prepare_setup(scenario_cfg, plan, method, point, setup_seed);
  } catch (const InfeasibleAllocationError&) {
    return res;
  } catch (const DegenerateProjectionError&) {
    return res;
  }
  res.feasible = true;
  res.sensing_snr = ctx.power.sensing_snr;
  res.total_power_w = ctx.power.rho.sum();

  const double noise_var = ctx.scenario.noise_variance_w;
  const MaprtDetector detector(ctx.maps, ctx.det_ctx);
  Rng root(setup_seed);

  const int n_cal = plan.calibration_trials();
  std::vector<double> h0_stats(n_cal);
  Rng cal_rng = root.fork(kStreamCalibration);
  for (int t = 0; t < n_cal; ++t) {
    Rng trial_rng = cal_rng.fork(t);
    const SensingObservation obs =
        receive_sensing(ctx.maps, nullptr, noise_var, trial_rng);
    h0_stats[t] = detector.statistic_of(obs.y);
  }
  res.threshold = calibrate_threshold(std::move(h0_stats), plan.p_fa);

  Rng rcs_rng = root.fork(kStreamRcs);
  Rng noise_rng = root.fork(kStreamNoise);
  for (int d = 0; d < plan.n_rcs_draws; ++d) {
    Rng draw_rng = rcs_rng.fork(d);
    const CMatrix alpha = draw_rcs(ctx.channels.sensing_gain_variances, draw_rng);
    Rng dwell_rng = noise_rng.fork(d);
    for (int j = 0; j < plan.n_noise_draws; ++j) {
      Rng trial_rng = dwell_rng.fork(j);
      const SensingObservation obs =
          receive_sensing(ctx.maps, &alpha, noise_var, trial_rng);
      ++res.h1_trials;
      if (detector.statistic_of(obs.y) >= res.threshold) ++res.detections;
    }
  }

  Rng h0_rng = root.fork(kStreamH0Eval);
  const long n_h0 = static_cast<long>(plan.n_rcs_draws) * plan.n_noise_draws;
  for (long e = 0; e < n_h0; ++e) {
    Rng trial_rng = h0_rng.fork(static_cast<std::uint64_t>(e));
    const SensingObservation obs =
        receive_sensing(ctx.maps, nullptr, noise_var, trial_rng);
    ++res.h0_trials;
    if (detector.statistic_of(obs.y) >= res.threshold) ++res.false_alarms;
  }
  return res;
}

namespace {

ResultRow aggregate(const std::string& param, double value, Method method,
                    const std::vector<SetupResult>& setups) {
  ResultRow row;
  row.sweep_param = param;
  row.sweep_value = value;
  row.method = method;
  long det = 0, h1 = 0, fa = 0, h0 = 0, feasible = 0;
  double snr_sum = 0.0, power_sum = 0.0;
  for (const SetupResult& s : setups) {
    if (!s.feasible) continue;
    ++feasible;
    det += s.detections;
    h1 += s.h1_trials;
    fa += s.false_alarms;
    h0 += s.h0_trials;
    snr_sum += s.sensing_snr;
    power_sum += s.total_power_w;
  }
  row.n_trials = h1;
  row.p_d = h1 > 0 ? static_cast<double>(det) / h1 : 0.0;
  row.ci95 = h1 > 0 ? 1.96 * std::sqrt(row.p_d * (1.0 - row.p_d) / h1) : 0.0;
  row.p_fa_achieved = h0 > 0 ? static_cast<double>(fa) / h0 : 0.0;
  row.feasibility_rate =
      setups.empty() ? 0.0 : static_cast<double>(feasible) / setups.size();
  const double mean_snr = feasible > 0 ? snr_sum / feasible : 0.0;
  const double mean_power = feasible > 0 ? power_sum / feasible : 0.0;
  row.mean_snr_db = linear_to_db(std::max(mean_snr, 1e-40));
  row.mean_power_dbm = watt_to_dbm(std::max(mean_power, 1e-40));
  return row;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ScenarioConfig& scenario_cfg,
                                 const ExperimentPlan& plan,
                                 const std::string& sweep_param,
                                 const std::vector<double>& values,
                                 std::uint64_t seed, int n_threads) {
  const int n_values = static_cast<int>(values.size());
  const int n_methods = static_cast<int>(plan.methods.size());
  const int n_jobs = n_values * n_methods * plan.n_setups;
  std::vector<SetupResult> results(n_jobs);

  parallel_for(n_jobs, n_threads, [&](int job) {
    const int vi = job / (n_methods * plan.n_setups);
    const int mi = (job / plan.n_setups) % n_methods;
    const int si = job % plan.n_setups;
    SweepPoint point{sweep_param, values[vi]};
    results[job] = run_setup(scenario_cfg, plan, plan.methods[mi], point,
                             setup_seed_for(seed, si));
  });

  std::vector<ResultRow> rows;
  rows.reserve(n_values * n_methods);
  for (int vi = 0; vi < n_values; ++vi)
    for (int mi = 0; mi < n_methods; ++mi) {
      std::vector<SetupResult> cell(
          results.begin() + (vi * n_methods + mi) * plan.n_setups,
          results.begin() + (vi * n_methods + mi + 1) * plan.n_setups);
      rows.push_back(aggregate(sweep_param, values[vi], plan.methods[mi], cell));
    }
  return rows;
}

std::vector<ResultRow> sweep_rcs(const ScenarioConfig& cfg,
                                 const ExperimentPlan& plan, std::uint64_t seed,
                                 int n_threads) {
  return run_sweep(cfg, plan, "rcs_db", plan.rcs_db_grid, seed, n_threads);
}

std::vector<double> derive_power_grid(const ScenarioConfig& cfg,
                                      const ExperimentPlan& plan,
                                      std::uint64_t seed) {
  double worst_w = 0.0;
  int feasible = 0;
  for (int si = 0; si < plan.n_setups; ++si) {
    try {
      const PipelineContext ctx =
          prepare_setup(cfg, plan, Method::baseline, SweepPoint{},
                        setup_seed_for(seed, si));
      worst_w = std::max(worst_w, ctx.power.rho.sum());
      ++feasible;
    } catch (const InfeasibleAllocationError&) {
      // Infeasible even without a cap; the sweep records it per setup.
    }
  }
  if (feasible == 0)
    throw InfeasibleAllocationError(
        "derive_power_grid: no setup admits a feasible baseline allocation");
  const double floor_dbm = std::ceil(watt_to_dbm(std::max(worst_w, 1e-12)) + 1.0);
  std::vector<double> grid;
  for (int i = 0; i < 7; ++i) grid.push_back(floor_dbm + 2.0 * i);
  return grid;
}

std::vector<ResultRow> sweep_power(const ScenarioConfig& cfg,
                                   const ExperimentPlan& plan,
                                   std::uint64_t seed, int n_threads) {
  std::vector<double> grid = plan.p_total_dbm_grid;
  if (grid.empty()) grid = derive_power_grid(cfg, plan, seed);
  return run_sweep(cfg, plan, "p_total_dbm", grid, seed, n_threads);
}

std::vector<ResultRow> sweep_ue(const ScenarioConfig& cfg,
                                const ExperimentPlan& plan, std::uint64_t seed,
                                int n_threads) {
  std::vector<double> values;
  values.reserve(plan.n_ue_grid.size());
  for (int n : plan.n_ue_grid) values.push_back(n);
  return run_sweep(cfg, plan, "n_ue", values, seed, n_threads);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "sweep_param,sweep_value,method,p_d,ci95,p_fa_achieved,mean_snr_db,"
         "mean_power_dbm,feasibility_rate,n_trials\n";
  for (const ResultRow& r : rows) {
    out << r.sweep_param << ',' << fmt_double(r.sweep_value) << ','
        << method_name(r.method) << ',' << fmt_double(r.p_d) << ','
        << fmt_double(r.ci95) << ',' << fmt_double(r.p_fa_achieved) << ','
        << fmt_double(r.mean_snr_db) << ',' << fmt_double(r.mean_power_dbm)
        << ',' << fmt_double(r.feasibility_rate) << ',' << r.n_trials << '\n';
  }
}

}  // namespace cfjcas
