// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfjcas/detector.hpp"
#include "cfjcas/power.hpp"
#include "cfjcas/scenario.hpp"
#include "cfjcas/signal.hpp"

namespace cfjcas {

enum class Method { jcas_with_s0, jcas_without_s0, baseline };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct ExperimentPlan {
  std::vector<Method> methods = {Method::jcas_with_s0, Method::jcas_without_s0,
                                 Method::baseline};
  int n_setups = 20;
  int n_rcs_draws = 200;
  int n_noise_draws = 1;   // fresh-noise dwells per RCS draw
  int tau = 100;
  double gamma_c_db = 20.0;
  double p_fa = 0.1;
  int calibration_multiple = 200;  // H0 calibration sample = ceil(multiple/p_fa)
  double rcs_db = -30.0;          // used when the sweep does not vary it
  RcsMode rcs_mode = RcsMode::combined;
  SymbolAlphabet alphabet = SymbolAlphabet::gaussian;
  double shadowing_std_db = 0.0;
  std::optional<double> rzf_lambda;  // default: MMSE-style loading
  std::vector<double> rcs_db_grid = {-40, -35, -30, -25, -20, -15, -10};
  std::vector<double> p_total_dbm_grid;  // empty = derive from baseline power
  std::vector<int> n_ue_grid = {2, 4, 6, 8};

  int calibration_trials() const;
};

/// One grid cell of a sweep. param is one of "rcs_db", "p_total_dbm", "n_ue";
/// "custom" runs the plan's scalar parameters unchanged.
struct SweepPoint {
  std::string param = "custom";
  double value = 0.0;
};

/// Fully prepared pipeline state for one (setup, method, sweep cell).
struct PipelineContext {
  Scenario scenario;
  AngleSet angles;
  ChannelSet channels;
  PrecoderSet precoders;
  SinrCoefficients coeffs;
  SensingSnrMatrix a_matrix;
  PowerSolution power;
  CMatrix symbols;
  SensingMaps maps;
  DetectorContext det_ctx;
};

/// Scenario/channel/precoding/allocation for one setup. Randomness forks from
/// setup_seed only, so UE positions, channels, symbols, RCS and noise draws
/// are shared across methods and sweep values (common random numbers).
/// Throws InfeasibleAllocationError when the allocation has no feasible point.
PipelineContext prepare_setup(const ScenarioConfig& scenario_cfg,
                              const ExperimentPlan& plan, Method method,
                              const SweepPoint& point, std::uint64_t setup_seed);

struct SetupResult {
  bool feasible = false;
  long detections = 0;
  long h1_trials = 0;
  long false_alarms = 0;
  long h0_trials = 0;
  double threshold = 0.0;
  double sensing_snr = 0.0;
  double total_power_w = 0.0;
};

/// Full per-setup pipeline: prepare, calibrate the threshold on fresh H0
/// noise, then estimate P_d over RCS x noise draws and P_fa on held-out H0
/// trials. Infeasible allocations come back as a recorded outcome.
SetupResult run_setup(const ScenarioConfig& scenario_cfg,
                      const ExperimentPlan& plan, Method method,
                      const SweepPoint& point, std::uint64_t setup_seed);

struct ResultRow {
  std::string sweep_param;
  double sweep_value = 0.0;
  Method method = Method::baseline;
  double p_d = 0.0;
  double ci95 = 0.0;  // binomial 95% half-width
  double p_fa_achieved = 0.0;
  double mean_snr_db = 0.0;
  double mean_power_dbm = 0.0;
  double feasibility_rate = 0.0;
  long n_trials = 0;
};

std::vector<ResultRow> run_sweep(const ScenarioConfig& scenario_cfg,
                                 const ExperimentPlan& plan,
                                 const std::string& sweep_param,
                                 const std::vector<double>& values,
                                 std::uint64_t seed, int n_threads = 1);

std::vector<ResultRow> sweep_rcs(const ScenarioConfig& cfg,
                                 const ExperimentPlan& plan, std::uint64_t seed,
                                 int n_threads = 1);
std::vector<ResultRow> sweep_power(const ScenarioConfig& cfg,
                                   const ExperimentPlan& plan,
                                   std::uint64_t seed, int n_threads = 1);
std::vector<ResultRow> sweep_ue(const ScenarioConfig& cfg,
                                const ExperimentPlan& plan, std::uint64_t seed,
                                int n_threads = 1);

/// Caps grid for the power sweep when the plan leaves it empty: starts one
/// dB above the worst-setup baseline power and spans 12 dB in 7 steps.
std::vector<double> derive_power_grid(const ScenarioConfig& cfg,
                                      const ExperimentPlan& plan,
                                      std::uint64_t seed);

std::uint64_t setup_seed_for(std::uint64_t experiment_seed, int setup_index);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

}  // namespace cfjcas
