// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "cfjcas/montecarlo.hpp"

using namespace cfjcas;

namespace {

ScenarioConfig tiny_scenario() {
  ScenarioConfig cfg;
  cfg.area_side_m = 300.0;
  cfg.n_tx = 4;
  cfg.n_rx = 2;
  cfg.n_ue = 2;
  cfg.m_antennas = 2;
  cfg.layout_seed = 1;
  return cfg;
}

ExperimentPlan tiny_plan() {
  ExperimentPlan plan;
  plan.n_setups = 2;
  plan.n_rcs_draws = 25;
  plan.n_noise_draws = 1;
  plan.tau = 20;
  plan.gamma_c_db = 10.0;
  plan.p_fa = 0.1;
  plan.calibration_multiple = 20;  // 200 calibration trials
  plan.rcs_db = -35.0;
  return plan;
}

}  // namespace

TEST_CASE("prepared pipeline satisfies the allocation contracts") {
  const PipelineContext ctx =
      prepare_setup(tiny_scenario(), tiny_plan(), Method::jcas_with_s0,
                    SweepPoint{}, setup_seed_for(3, 0));
  CHECK(ctx.power.converged);
  CHECK(ctx.power.per_ap_power.maxCoeff() <= 1.0 + 1e-9);
  const double gamma_c = db_to_linear(10.0);
  for (int i = 0; i < ctx.power.ue_sinrs.size(); ++i)
    CHECK(ctx.power.ue_sinrs(i) >= gamma_c * (1.0 - 1e-6));
  CHECK(ctx.symbols.rows() == 20);
  CHECK(ctx.maps.tau == 20);
}

TEST_CASE("run_setup is deterministic under a fixed seed") {
  const auto a = run_setup(tiny_scenario(), tiny_plan(), Method::jcas_with_s0,
                           SweepPoint{}, setup_seed_for(7, 0));
  const auto b = run_setup(tiny_scenario(), tiny_plan(), Method::jcas_with_s0,
                           SweepPoint{}, setup_seed_for(7, 0));
  CHECK(a.feasible);
  CHECK(a.detections == b.detections);
  CHECK(a.false_alarms == b.false_alarms);
  CHECK(a.threshold == b.threshold);
  CHECK(a.sensing_snr == b.sensing_snr);
  CHECK(a.h1_trials == 25);
  CHECK(a.h0_trials == 25);
}

TEST_CASE("sweep accounting and thread-count independence") {
  ExperimentPlan plan = tiny_plan();
  plan.methods = {Method::jcas_with_s0, Method::baseline};
  const std::vector<double> grid = {-35.0, -20.0};
  const auto rows1 = run_sweep(tiny_scenario(), plan, "rcs_db", grid, 11, 1);
  const auto rows2 = run_sweep(tiny_scenario(), plan, "rcs_db", grid, 11, 2);
  REQUIRE(rows1.size() == 4);
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].p_d == rows2[i].p_d);
    CHECK(rows1[i].p_fa_achieved == rows2[i].p_fa_achieved);
    CHECK(rows1[i].mean_snr_db == rows2[i].mean_snr_db);
    CHECK(rows1[i].n_trials == rows2[i].n_trials);
    CHECK(rows1[i].p_d >= 0.0);
    CHECK(rows1[i].p_d <= 1.0);
    CHECK(rows1[i].feasibility_rate == 1.0);
    CHECK(rows1[i].n_trials == plan.n_setups * plan.n_rcs_draws);
  }
  // Stronger reflections never hurt detection (shared RCS substreams).
  CHECK(rows1[2].p_d >= rows1[0].p_d - 0.02);
}

TEST_CASE("infeasible total power caps are recorded, not thrown") {
  ExperimentPlan plan = tiny_plan();
  plan.methods = {Method::baseline};
  // -40 dBm network-wide is far below any feasible allocation at 10 dB SINR.
  const auto rows = run_sweep(tiny_scenario(), plan, "p_total_dbm", {-40.0}, 5, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].feasibility_rate == 0.0);
  CHECK(rows[0].n_trials == 0);
}

TEST_CASE("ue sweep varies the scenario UE count") {
  ExperimentPlan plan = tiny_plan();
  plan.methods = {Method::jcas_with_s0};
  plan.n_setups = 1;
  plan.n_ue_grid = {0, 2};
  const auto rows = sweep_ue(tiny_scenario(), plan, 13, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].sweep_param == "n_ue");
  CHECK(rows[0].sweep_value == 0.0);
  CHECK(rows[0].feasibility_rate == 1.0);
}

TEST_CASE("zero RCS sweep point degrades detection to the false-alarm rate") {
  ExperimentPlan plan = tiny_plan();
  plan.methods = {Method::jcas_with_s0};
  plan.n_setups = 2;
  plan.n_rcs_draws = 500;
  // -1000 dB is numerically zero reflected power.
  const auto rows = run_sweep(tiny_scenario(), plan, "rcs_db", {-1000.0}, 17, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].p_d == doctest::Approx(0.1).epsilon(0.35));
  CHECK(std::abs(rows[0].p_d - rows[0].p_fa_achieved) <= 0.03);
}

TEST_CASE("derived power grid sits above the baseline minimum") {
  ExperimentPlan plan = tiny_plan();
  const auto grid = derive_power_grid(tiny_scenario(), plan, 19);
  REQUIRE(grid.size() == 7);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  // Every setup must be feasible at the derived floor.
  ExperimentPlan one = plan;
  one.methods = {Method::baseline};
  const auto rows = run_sweep(tiny_scenario(), one, "p_total_dbm",
                              {grid.front()}, 19, 1);
  CHECK(rows[0].feasibility_rate == 1.0);
}

TEST_CASE("csv formatting is stable") {
  ResultRow row;
  row.sweep_param = "rcs_db";
  row.sweep_value = -30.0;
  row.method = Method::baseline;
  row.p_d = 0.5;
  row.ci95 = 0.0125;
  row.p_fa_achieved = 0.1;
  row.mean_snr_db = -3.0103;
  row.mean_power_dbm = 27.0;
  row.feasibility_rate = 1.0;
  row.n_trials = 4000;
  std::ostringstream out;
  write_csv(out, {row});
  CHECK(out.str() ==
        "sweep_param,sweep_value,method,p_d,ci95,p_fa_achieved,mean_snr_db,"
        "mean_power_dbm,feasibility_rate,n_trials\n"
        "rcs_db,-30,baseline,0.5,0.0125,0.1,-3.0103,27,1,4000\n");
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::jcas_with_s0, Method::jcas_without_s0, Method::baseline})
    CHECK(method_from_name(method_name(m)) == m);
  CHECK(!method_from_name("nonsense").has_value());
}
