// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: runs the detection-probability experiments from a
// JSON config and writes CSV results plus a run manifest.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "cfjcas/config.hpp"
#include "cfjcas/errors.hpp"
#include "cfjcas/montecarlo.hpp"

namespace {

using namespace cfjcas;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> n_ue, tau, n_setups, n_rcs_draws, n_noise_draws;
  std::optional<double> gamma_c_db, p_fa, rcs_db_single;
  std::optional<std::string> rcs_db_range, p_total_dbm_range, n_ue_grid_range;
  std::optional<std::string> methods, rcs_mode;
  std::optional<int> threads;
};

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.scenario.layout_seed = *o.seed;
  }
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.n_ue) cfg.scenario.n_ue = *o.n_ue;
  if (o.tau) cfg.plan.tau = *o.tau;
  if (o.n_setups) cfg.plan.n_setups = *o.n_setups;
  if (o.n_rcs_draws) cfg.plan.n_rcs_draws = *o.n_rcs_draws;
  if (o.n_noise_draws) cfg.plan.n_noise_draws = *o.n_noise_draws;
  if (o.gamma_c_db) cfg.plan.gamma_c_db = *o.gamma_c_db;
  if (o.p_fa) cfg.plan.p_fa = *o.p_fa;
  if (o.rcs_db_single) cfg.plan.rcs_db = *o.rcs_db_single;
  if (o.rcs_db_range) {
    const auto values = parse_range(*o.rcs_db_range);
    cfg.plan.rcs_db_grid = values;
    if (values.size() == 1) cfg.plan.rcs_db = values.front();
  }
  if (o.p_total_dbm_range)
    cfg.plan.p_total_dbm_grid = parse_range(*o.p_total_dbm_range);
  if (o.n_ue_grid_range) {
    cfg.plan.n_ue_grid.clear();
    for (double v : parse_range(*o.n_ue_grid_range))
      cfg.plan.n_ue_grid.push_back(static_cast<int>(v));
  }
  if (o.methods) {
    cfg.plan.methods.clear();
    std::istringstream ss(*o.methods);
    std::string name;
    while (std::getline(ss, name, ',')) {
      const auto m = method_from_name(name);
      if (!m) throw InvalidConfigError("unknown method in --methods: " + name);
      cfg.plan.methods.push_back(*m);
    }
  }
  if (o.rcs_mode) {
    if (*o.rcs_mode == "combined") cfg.plan.rcs_mode = RcsMode::combined;
    else if (*o.rcs_mode == "raw") cfg.plan.rcs_mode = RcsMode::raw;
    else throw InvalidConfigError("--rcs-mode must be combined|raw");
  }
}

int resolve_threads(const Overrides& o) {
  if (o.threads) return std::max(1, *o.threads);
  if (const char* env = std::getenv("CFJCAS_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string utc_timestamp() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_outputs(const RunConfig& cfg, const std::string& experiment,
                   const std::vector<ResultRow>& rows, int threads) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path csv_path = fs::path(cfg.out_dir) / (experiment + ".csv");
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    write_csv(csv, rows);
  }
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["experiment"] = experiment;
  manifest["seed"] = cfg.seed;
  manifest["threads"] = threads;
  manifest["generated_at_utc"] = utc_timestamp();
  manifest["csv"] = csv_path.filename().string();
  manifest["config"] = config_to_json(cfg);
  const fs::path man_path = fs::path(cfg.out_dir) / (experiment + "_manifest.json");
  std::ofstream man(man_path);
  if (!man) throw std::runtime_error("cannot write " + man_path.string());
  man << manifest.dump(2) << '\n';
  std::cout << "wrote " << csv_path.string() << " and " << man_path.string()
            << "\n";
}

int cmd_run(const std::string& experiment, const std::string& config_path,
            const Overrides& o) {
  RunConfig cfg = load_config(config_path);
  apply_overrides(cfg, o);
  validate_config(cfg);
  const int threads = resolve_threads(o);

  std::vector<ResultRow> rows;
  if (experiment == "fig3") {
    rows = sweep_rcs(cfg.scenario, cfg.plan, cfg.seed, threads);
  } else if (experiment == "fig4") {
    rows = sweep_power(cfg.scenario, cfg.plan, cfg.seed, threads);
  } else if (experiment == "fig5") {
    rows = sweep_ue(cfg.scenario, cfg.plan, cfg.seed, threads);
  } else if (experiment == "custom") {
    rows = run_sweep(cfg.scenario, cfg.plan, "rcs_db", {cfg.plan.rcs_db},
                     cfg.seed, threads);
  } else {
    std::cerr << "unknown experiment '" << experiment
              << "' (expected fig3|fig4|fig5|custom)\n";
    return 1;
  }

  write_outputs(cfg, experiment, rows, threads);
  std::ostringstream table;
  write_csv(table, rows);
  std::cout << table.str();
  return 0;
}

int cmd_validate(const std::string& config_path) {
  RunConfig cfg = load_config(config_path);
  validate_config(cfg);

  const Scenario scenario = generate_scenario(0, cfg.scenario);
  std::cout << "config OK\n";
  std::cout << "derived quantities:\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", scenario.noise_variance_w);
  std::cout << "  noise variance        " << buf << " W ("
            << cfg.scenario.noise_dbm << " dBm)\n";
  std::snprintf(buf, sizeof(buf), "%.4g", default_rzf_lambda(scenario));
  std::cout << "  default rzf lambda    " << buf << "\n";
  std::cout << "  antennas per AP       " << scenario.m_antennas << "\n";
  std::cout << "  total APs             " << scenario.n_tx + scenario.n_rx
            << " (" << scenario.n_tx << " tx, " << scenario.n_rx << " rx)\n";
  std::cout << "  calibration trials    " << cfg.plan.calibration_trials()
            << "\n";

  ExperimentPlan smoke = cfg.plan;
  smoke.n_setups = 1;
  smoke.n_rcs_draws = 20;
  smoke.n_noise_draws = 1;
  const SetupResult res =
      run_setup(cfg.scenario, smoke, cfg.plan.methods.front(), SweepPoint{},
                setup_seed_for(cfg.seed, 0));
  std::cout << "smoke pipeline (1 setup, " << method_name(cfg.plan.methods.front())
            << "): " << (res.feasible ? "feasible" : "infeasible");
  if (res.feasible) {
    std::snprintf(buf, sizeof(buf), "%.3g", res.sensing_snr);
    std::cout << ", sensing snr " << buf << ", detections " << res.detections
              << "/" << res.h1_trials;
  }
  std::cout << "\nOK\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cell-free massive MIMO joint communication and sensing simulator"};
  app.require_subcommand(1);

  std::string run_experiment, run_config;
  Overrides o;
  CLI::App* run = app.add_subcommand("run", "run an experiment, write CSV + manifest");
  run->add_option("experiment", run_experiment, "fig3|fig4|fig5|custom")->required();
  run->add_option("--config", run_config, "JSON config path")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", o.out_dir, "output directory (overrides out_dir)");
  run->add_option("--seed", o.seed, "experiment seed (overrides seed)");
  run->add_option("--n-ue", o.n_ue, "override n_ue");
  run->add_option("--tau", o.tau, "override tau");
  run->add_option("--n-setups", o.n_setups, "override n_setups");
  run->add_option("--n-rcs-draws", o.n_rcs_draws, "override n_rcs_draws");
  run->add_option("--n-noise-draws", o.n_noise_draws, "override n_noise_draws");
  run->add_option("--gamma-c-db", o.gamma_c_db, "override gamma_c_db");
  run->add_option("--p-fa", o.p_fa, "override p_fa");
  run->add_option("--rcs-db", o.rcs_db_range,
                  "RCS variance grid in dB, value or start:stop:count");
  run->add_option("--p-total-dbm", o.p_total_dbm_range,
                  "total power cap grid in dBm, value or start:stop:count");
  run->add_option("--n-ue-grid", o.n_ue_grid_range,
                  "UE count grid, value or start:stop:count");
  run->add_option("--methods", o.methods, "comma-separated method list");
  run->add_option("--rcs-mode", o.rcs_mode, "combined|raw");
  run->add_option("--threads", o.threads, "worker threads (or CFJCAS_THREADS)");

  std::string validate_config_path;
  CLI::App* validate = app.add_subcommand("validate", "parse and check a config");
  validate->add_option("--config", validate_config_path, "JSON config path")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_experiment, run_config, o);
    if (validate->parsed()) return cmd_validate(validate_config_path);
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
