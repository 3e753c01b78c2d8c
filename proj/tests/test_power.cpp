// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>

#include "cfjcas/errors.hpp"
#include "cfjcas/power.hpp"
#include "cfjcas/rng.hpp"
#include "cfjcas/signal.hpp"

using namespace cfjcas;

namespace {

CVector random_cvector(int n, Rng& rng) {
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.cnormal(1.0);
  return v;
}

// A synthetic normalized-unit instance assembled through the real precoding
// path (channels O(1), noise O(1)).
struct Instance {
  ChannelSet channels;
  AngleSet angles;
  PrecoderSet precoders;
  SinrCoefficients coeffs;
  double noise_variance = 0.0;
};

Instance random_instance(int n_tx, int m, int n_rx, int n_ue, Rng& rng) {
  Instance inst;
  inst.channels.n_tx = n_tx;
  inst.channels.m_antennas = m;
  for (int i = 0; i < n_ue; ++i)
    inst.channels.ue_channels.push_back(random_cvector(n_tx * m, rng));
  inst.angles.tx_azimuth.resize(n_tx);
  inst.angles.tx_elevation.resize(n_tx);
  for (int k = 0; k < n_tx; ++k) {
    inst.angles.tx_azimuth[k] = rng.uniform(-M_PI, M_PI);
    inst.angles.tx_elevation[k] = rng.uniform(-0.3, 0.3);
  }
  inst.angles.rx_azimuth.resize(n_rx);
  inst.angles.rx_elevation.resize(n_rx);
  for (int r = 0; r < n_rx; ++r) {
    inst.angles.rx_azimuth[r] = rng.uniform(-M_PI, M_PI);
    inst.angles.rx_elevation[r] = rng.uniform(-0.3, 0.3);
  }
  inst.channels.target_channel.resize(n_tx * m);
  for (int k = 0; k < n_tx; ++k)
    inst.channels.target_channel.segment(k * m, m) =
        array_response(inst.angles.tx_azimuth[k], inst.angles.tx_elevation[k], m)
            .conjugate();
  inst.channels.rx_responses.clear();
  for (int r = 0; r < n_rx; ++r)
    inst.channels.rx_responses.push_back(array_response(
        inst.angles.rx_azimuth[r], inst.angles.rx_elevation[r], m));
  inst.channels.sensing_gain_variances.resize(n_rx, n_tx);
  for (int r = 0; r < n_rx; ++r)
    for (int k = 0; k < n_tx; ++k)
      inst.channels.sensing_gain_variances(r, k) = rng.uniform(0.05, 0.5);
  inst.noise_variance = rng.uniform(0.002, 0.02);
  inst.precoders = build_precoders(inst.channels, 0.1);
  inst.coeffs = build_sinr_coefficients(inst.channels, inst.precoders,
                                        std::sqrt(inst.noise_variance));
  return inst;
}

}  // namespace

TEST_CASE("sinr coefficients match direct inner products") {
  Rng rng(31);
  const Instance inst = random_instance(2, 2, 1, 3, rng);
  for (int i = 0; i < 3; ++i) {
    // ZF sensing column is zero for every UE.
    CHECK(inst.coeffs.gains(i, 0) <= 1e-9);
    for (int j = 0; j < 3; ++j) {
      Complex dot(0.0, 0.0);
      const CVector& h = inst.channels.ue_channels[i];
      const CVector& w = inst.precoders.ue_precoders[j];
      for (int t = 0; t < h.size(); ++t) dot += std::conj(h(t)) * w(t);
      CHECK(inst.coeffs.gains(i, j + 1) == doctest::Approx(std::abs(dot)).epsilon(1e-12));
    }
  }
}

TEST_CASE("matched precoder achieves the channel norm gain") {
  Rng rng(32);
  ChannelSet cs;
  cs.n_tx = 1;
  cs.m_antennas = 4;
  cs.ue_channels.push_back(random_cvector(4, rng));
  cs.target_channel = random_cvector(4, rng);
  PrecoderSet set = build_precoders(cs, 1e-9);  // tiny lambda: matched filter
  const SinrCoefficients coeffs = build_sinr_coefficients(cs, set, 0.1);
  CHECK(coeffs.gains(0, 1) == doctest::Approx(cs.ue_channels[0].norm()).epsilon(1e-6));
}

TEST_CASE("closed-form SINR evaluation") {
  SinrCoefficients coeffs;
  coeffs.gains.resize(1, 2);
  coeffs.gains << 0.0, 2.0;
  coeffs.noise_std = 0.5;
  RVector rho(2);
  rho << 0.0, 0.0625;  // rho * a^2 = 0.25 = sigma^2
  const RVector sinr = evaluate_sinr(coeffs, rho);
  CHECK(sinr(0) == doctest::Approx(1.0));
  CHECK(evaluate_sinr(coeffs, RVector::Zero(2))(0) == 0.0);
}

TEST_CASE("zero gain variances yield a zero sensing matrix") {
  Rng rng(33);
  Instance inst = random_instance(2, 2, 2, 1, rng);
  inst.channels.sensing_gain_variances.setZero();
  const SensingSnrMatrix a =
      build_sensing_matrix(inst.channels, inst.precoders, inst.angles,
                           inst.noise_variance);
  CHECK(a.a.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar sensing matrix expands by hand") {
  // Single antenna, single AP pair, tau = 1, unit symbols: every array
  // response is the scalar 1, so A = sigma2 * |w_i|^2-structured outer form
  // divided by the noise.
  Rng rng(34);
  ChannelSet cs;
  cs.n_tx = 1;
  cs.m_antennas = 1;
  cs.ue_channels.clear();
  cs.target_channel = CVector::Ones(1);
  cs.rx_responses = {CVector::Ones(1)};
  cs.sensing_gain_variances = RMatrix::Constant(1, 1, 0.3);
  AngleSet angles;
  angles.tx_azimuth = {0.0};
  angles.tx_elevation = {0.0};
  angles.rx_azimuth = {0.0};
  angles.rx_elevation = {0.0};
  PrecoderSet set = build_precoders(cs, 1.0);  // only sensing precoder, |w0| = 1
  const double noise = 0.25;
  const CMatrix symbols = CMatrix::Ones(1, 1);
  const SensingSnrMatrix a =
      build_sensing_matrix(cs, set, angles, noise, symbols);
  // A = sigma2 * |a^T w0|^2 / (M * N_rx * noise), M = N_rx = 1, |w0| = 1.
  CHECK(a.re_a(0, 0) == doctest::Approx(0.3 / 0.25).epsilon(1e-12));
}

TEST_CASE("sensing matrix is Hermitian PSD with a real quadratic form") {
  Rng rng(35);
  for (int rep = 0; rep < 8; ++rep) {
    const Instance inst = random_instance(3, 2, 2, 2, rng);
    Rng sym_rng = rng.fork(rep);
    const CMatrix symbols = draw_symbols(16, 2, SymbolAlphabet::gaussian, sym_rng);
    const SensingSnrMatrix a = build_sensing_matrix(
        inst.channels, inst.precoders, inst.angles, inst.noise_variance, symbols);
    CHECK((a.a - a.a.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * a.a.norm());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(a.a);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * a.a.norm());
    RVector q(3);
    for (int i = 0; i < 3; ++i) q(i) = rng.uniform(0.0, 1.0);
    const Complex quad = (q.cast<Complex>().transpose() * a.a * q.cast<Complex>())(0);
    CHECK(std::abs(quad.imag()) <= 1e-10 * (1.0 + std::abs(quad.real())));
    CHECK(a.snr(q) == doctest::Approx(quad.real()).epsilon(1e-10));
  }
}

TEST_CASE("sensing matrix quadratic form matches the reflected-energy oracle") {
  Rng rng(36);
  for (int rep = 0; rep < 2; ++rep) {
    const Instance inst = random_instance(3, 2, 2, 2, rng);
    const int tau = 4;
    Rng sym_rng = rng.fork(100 + rep);
    const CMatrix symbols = draw_symbols(tau, 2, SymbolAlphabet::gaussian, sym_rng);
    const SensingSnrMatrix a = build_sensing_matrix(
        inst.channels, inst.precoders, inst.angles, inst.noise_variance, symbols);
    RVector q(3);
    q << 0.7, 0.4, 0.9;
    const double predicted = a.snr(q);

    // Definition-level estimate: E||G[m] alpha||^2 over RCS draws, using
    // explicitly materialized per-symbol maps.
    const SensingMaps maps = build_sensing_maps(inst.angles, inst.precoders, q, symbols);
    const auto gs = maps.materialize();
    Rng mc(500 + rep);
    double acc = 0.0;
    const int draws = 100000;
    for (int d = 0; d < draws; ++d) {
      Rng stream = mc.fork(d);
      const CMatrix alpha = draw_rcs(inst.channels.sensing_gain_variances, stream);
      CVector alpha_vec(maps.n_rx * maps.n_tx);
      for (int r = 0; r < maps.n_rx; ++r)
        for (int k = 0; k < maps.n_tx; ++k)
          alpha_vec(r * maps.n_tx + k) = alpha(r, k);
      for (int m = 0; m < tau; ++m) acc += (gs[m] * alpha_vec).squaredNorm();
    }
    const double estimated =
        acc / draws / (tau * maps.m_antennas * maps.n_rx * inst.noise_variance);
    CHECK(predicted == doctest::Approx(estimated).epsilon(0.02));
  }
}

TEST_CASE("subproblem cone count follows the construction") {
  Rng rng(37);
  const Instance inst = random_instance(3, 2, 1, 2, rng);
  const SensingSnrMatrix a = build_sensing_matrix(inst.channels, inst.precoders,
                                                  inst.angles, inst.noise_variance);
  const RVector q_prev = RVector::Constant(3, 0.2);
  const socp::Program without_cap =
      build_ccp_subproblem(a, inst.coeffs, inst.precoders, q_prev, 4.0, 1.0,
                           std::nullopt);
  CHECK(without_cap.cones.size() == 2 + 3);  // n_ue + n_tx
  const socp::Program with_cap =
      build_ccp_subproblem(a, inst.coeffs, inst.precoders, q_prev, 4.0, 1.0, 2.0);
  CHECK(with_cap.cones.size() == 2 + 3 + 1);

  // Relaxing gamma_c toward zero keeps any previously feasible point feasible.
  PowerOptions opts;
  opts.gamma_c = 4.0;
  opts.p_tx = 1.0;
  const PowerSolution base = baseline_allocate(inst.coeffs, inst.precoders, opts);
  const socp::Program relaxed = build_ccp_subproblem(
      a, inst.coeffs, inst.precoders, q_prev, 1e-9, 1.0, std::nullopt);
  CHECK(socp::feasibility_check(relaxed, base.q, 1e-9).feasible);
}

TEST_CASE("baseline with a single interference-free UE has a closed form") {
  Rng rng(38);
  const Instance inst = random_instance(2, 2, 1, 1, rng);
  PowerOptions opts;
  opts.gamma_c = 6.0;
  opts.p_tx = 10.0;
  const PowerSolution sol = baseline_allocate(inst.coeffs, inst.precoders, opts);
  REQUIRE(sol.converged);
  const double a11 = inst.coeffs.gains(0, 1);
  const double expected = 6.0 * inst.noise_variance / (a11 * a11);
  CHECK(sol.rho(1) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(sol.rho(0) == 0.0);
  CHECK(sol.ue_sinrs(0) >= 6.0 * (1.0 - 1e-6));
}

TEST_CASE("baseline SINR constraints are tight at the optimum") {
  Rng rng(39);
  for (int rep = 0; rep < 6; ++rep) {
    const Instance inst = random_instance(3, 2, 1, 3, rng);
    PowerOptions opts;
    opts.gamma_c = 3.0;
    opts.p_tx = 50.0;  // generous so only SINR constraints bind
    const PowerSolution sol = baseline_allocate(inst.coeffs, inst.precoders, opts);
    REQUIRE(sol.converged);
    for (int i = 0; i < 3; ++i)
      CHECK(sol.ue_sinrs(i) == doctest::Approx(3.0).epsilon(1e-6));
  }
}

TEST_CASE("ccp with zero sensing matrix stops after one iteration") {
  Rng rng(40);
  Instance inst = random_instance(2, 2, 1, 2, rng);
  inst.channels.sensing_gain_variances.setZero();
  const SensingSnrMatrix a = build_sensing_matrix(inst.channels, inst.precoders,
                                                  inst.angles, inst.noise_variance);
  PowerOptions opts;
  opts.gamma_c = 3.0;
  opts.p_tx = 5.0;
  const PowerSolution sol = ccp_allocate(a, inst.coeffs, inst.precoders, opts);
  CHECK(sol.iterations == 1);
  CHECK(sol.converged);
  CHECK(sol.sensing_snr == 0.0);
}

TEST_CASE("UE-free allocation saturates the binding per-AP constraint") {
  Rng rng(41);
  const Instance inst = random_instance(2, 2, 1, 0, rng);
  const SensingSnrMatrix a = build_sensing_matrix(inst.channels, inst.precoders,
                                                  inst.angles, inst.noise_variance);
  PowerOptions opts;
  opts.gamma_c = 1.0;
  opts.p_tx = 2.0;
  const PowerSolution sol = ccp_allocate(a, inst.coeffs, inst.precoders, opts);
  const double max_norm = inst.precoders.per_ap_norms.row(0).maxCoeff();
  CHECK(sol.q(0) == doctest::Approx(std::sqrt(2.0) / max_norm).epsilon(1e-5));
}

namespace {

// Exhaustive search over the amplitude plane from the first-principles
// constraints: fine grid over the UE amplitude q1, exact endpoint
// maximization of the PSD quadratic over the closed-form q0 interval.
double tiny_grid_search(const RMatrix& re_a, const SinrCoefficients& coeffs,
                        double gamma_c, double p_tx) {
  const double a10 = coeffs.gains(0, 0), a11 = coeffs.gains(0, 1);
  const double sigma2 = coeffs.noise_std * coeffs.noise_std;
  const double q_max = std::sqrt(p_tx);
  const int steps = 400000;
  double best = -1.0;
  for (int j = 0; j <= steps; ++j) {
    const double q1 = q_max * j / steps;
    const double rho1 = q1 * q1;
    const double sinr_budget = rho1 * a11 * a11 / gamma_c - sigma2;
    if (sinr_budget < 0.0) continue;
    double rho0_cap = p_tx - rho1;
    if (a10 > 0.0) rho0_cap = std::min(rho0_cap, sinr_budget / (a10 * a10));
    if (rho0_cap < 0.0) continue;
    const double q0 = std::sqrt(rho0_cap);
    for (double cand : {0.0, q0}) {
      const double value = re_a(0, 0) * cand * cand +
                           2.0 * re_a(0, 1) * cand * q1 + re_a(1, 1) * rho1;
      best = std::max(best, value);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("ccp matches exhaustive grid search on tiny instances") {
  Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance inst = random_instance(1, 2, 1, 1, rng);
    SensingSnrMatrix a;
    if (rep % 2 == 0) {
      a = build_sensing_matrix(inst.channels, inst.precoders, inst.angles,
                               inst.noise_variance);
    } else {
      Rng sym_rng = rng.fork(900 + rep);
      const CMatrix symbols = draw_symbols(8, 1, SymbolAlphabet::gaussian, sym_rng);
      a = build_sensing_matrix(inst.channels, inst.precoders, inst.angles,
                               inst.noise_variance, symbols);
    }
    PowerOptions opts;
    opts.gamma_c = db_to_linear(rng.uniform(3.0, 9.0));
    opts.p_tx = 1.0;
    PowerSolution sol;
    try {
      sol = ccp_allocate(a, inst.coeffs, inst.precoders, opts);
    } catch (const InfeasibleAllocationError&) {
      continue;  // rare: the random gains cannot meet the threshold
    }
    const double grid = tiny_grid_search(a.re_a, inst.coeffs, opts.gamma_c, opts.p_tx);
    REQUIRE(grid > 0.0);
    CHECK(sol.sensing_snr == doctest::Approx(grid).epsilon(1e-3));

    for (std::size_t c = 1; c < sol.objective_history.size(); ++c)
      CHECK(sol.objective_history[c] >=
            sol.objective_history[c - 1] -
                1e-9 * std::max(1.0, std::abs(sol.objective_history[c - 1])));
    CHECK(sol.per_ap_power.maxCoeff() <= opts.p_tx + 1e-9);
    for (int i = 0; i < sol.ue_sinrs.size(); ++i)
      CHECK(sol.ue_sinrs(i) >= opts.gamma_c * (1.0 - 1e-6));
  }
}

TEST_CASE("jcas allocation dominates the baseline and honors constraints") {
  Rng rng(43);
  for (int rep = 0; rep < 5; ++rep) {
    const Instance inst = random_instance(3, 2, 2, 2, rng);
    const SensingSnrMatrix a = build_sensing_matrix(
        inst.channels, inst.precoders, inst.angles, inst.noise_variance);
    PowerOptions opts;
    opts.gamma_c = 5.0;
    opts.p_tx = 2.0;
    const PowerSolution base =
        baseline_allocate(inst.coeffs, inst.precoders, opts, &a);
    const PowerSolution with_s0 = ccp_allocate(a, inst.coeffs, inst.precoders, opts);
    PowerOptions no_s0 = opts;
    no_s0.with_sensing_symbol = false;
    const PowerSolution without_s0 =
        ccp_allocate(a, inst.coeffs, inst.precoders, no_s0);

    CHECK(without_s0.q(0) == 0.0);
    CHECK(with_s0.sensing_snr >= base.sensing_snr - 1e-12);
    CHECK(without_s0.sensing_snr >= base.sensing_snr - 1e-12);
    CHECK(with_s0.sensing_snr >=
          without_s0.sensing_snr * (1.0 - 1e-6));  // solver-tolerance slack
    for (const PowerSolution* sol : {&base, &with_s0, &without_s0}) {
      CHECK(sol->per_ap_power.maxCoeff() <= opts.p_tx + 1e-9);
      for (int i = 0; i < sol->ue_sinrs.size(); ++i)
        CHECK(sol->ue_sinrs(i) >= opts.gamma_c * (1.0 - 1e-6));
      CHECK((sol->rho - sol->q.cwiseProduct(sol->q)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
}

TEST_CASE("total power cap binds and infeasible caps raise") {
  Rng rng(44);
  const Instance inst = random_instance(2, 2, 1, 2, rng);
  const SensingSnrMatrix a = build_sensing_matrix(inst.channels, inst.precoders,
                                                  inst.angles, inst.noise_variance);
  PowerOptions opts;
  opts.gamma_c = 4.0;
  opts.p_tx = 3.0;
  const PowerSolution base = baseline_allocate(inst.coeffs, inst.precoders, opts, &a);
  const double min_power = base.rho.sum();

  PowerOptions capped = opts;
  capped.p_total_cap = 2.0 * min_power;
  const PowerSolution sol = ccp_allocate(a, inst.coeffs, inst.precoders, capped);
  CHECK(sol.rho.sum() <= *capped.p_total_cap + 1e-9);

  PowerOptions impossible = opts;
  impossible.p_total_cap = 0.5 * min_power;
  CHECK_THROWS_AS(baseline_allocate(inst.coeffs, inst.precoders, impossible),
                  InfeasibleAllocationError);
  CHECK_THROWS_AS(ccp_allocate(a, inst.coeffs, inst.precoders, impossible),
                  InfeasibleAllocationError);
}

TEST_CASE("unreachable SINR threshold raises infeasible-allocation") {
  Rng rng(45);
  const Instance inst = random_instance(2, 2, 1, 2, rng);
  const SensingSnrMatrix a = build_sensing_matrix(inst.channels, inst.precoders,
                                                  inst.angles, inst.noise_variance);
  PowerOptions opts;
  opts.gamma_c = 1e9;
  opts.p_tx = 1e-6;
  CHECK_THROWS_AS(ccp_allocate(a, inst.coeffs, inst.precoders, opts),
                  InfeasibleAllocationError);
}
