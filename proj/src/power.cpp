// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/power.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfjcas/errors.hpp"

namespace cfjcas {

SinrCoefficients build_sinr_coefficients(const ChannelSet& channels,
                                         const PrecoderSet& precoders,
                                         double noise_std) {
  const int n_ue = static_cast<int>(channels.ue_channels.size());
  if (precoders.n_ue() != n_ue)
    throw ShapeError("build_sinr_coefficients: UE count mismatch");
  SinrCoefficients coeffs;
  coeffs.noise_std = noise_std;
  coeffs.gains.resize(n_ue, n_ue + 1);
  for (int i = 0; i < n_ue; ++i) {
    const CVector& h = channels.ue_channels[i];
    coeffs.gains(i, 0) = std::abs(h.dot(precoders.sensing_precoder));
    for (int j = 0; j < n_ue; ++j)
      coeffs.gains(i, j + 1) = std::abs(h.dot(precoders.ue_precoders[j]));
  }
  return coeffs;
}

RVector evaluate_sinr(const SinrCoefficients& coeffs, const RVector& rho) {
  const int n_ue = coeffs.n_ue();
  if (rho.size() != n_ue + 1) throw ShapeError("evaluate_sinr: rho size mismatch");
  const double noise = coeffs.noise_std * coeffs.noise_std;
  RVector sinr(n_ue);
  for (int i = 0; i < n_ue; ++i) {
    double interference = noise;
    for (int j = 0; j <= n_ue; ++j) {
      if (j == i + 1) continue;
      interference += rho(j) * coeffs.gains(i, j) * coeffs.gains(i, j);
    }
    sinr(i) = rho(i + 1) * coeffs.gains(i, i + 1) * coeffs.gains(i, i + 1) /
              interference;
  }
  return sinr;
}

namespace {

// Inner reflection matrix B = M * sum_k (sum_r sigma^2_{r,k}) u_k u_k^H with
// u_k = (a^T(varphi_k) W_k)^H. The receive-side responses contribute only the
// factor ||a(phi_r)||^2 = M, which is folded in analytically.
CMatrix reflection_matrix(const ChannelSet& channels,
                          const PrecoderSet& precoders,
                          const AngleSet& angles) {
  const int n_tx = precoders.n_tx;
  const int m = precoders.m_antennas;
  const int n_streams = precoders.n_ue() + 1;
  const CMatrix w = precoders.stacked();
  CMatrix b = CMatrix::Zero(n_streams, n_streams);
  for (int k = 0; k < n_tx; ++k) {
    const CVector a = array_response(angles.tx_azimuth[k], angles.tx_elevation[k], m);
    const CVector v = w.middleRows(k * m, m).transpose() * a;  // (a^T W_k)^T
    const double s_k = channels.sensing_gain_variances.col(k).sum();
    b.noalias() += (m * s_k) * (v.conjugate() * v.transpose());
  }
  return b;
}

SensingSnrMatrix finish_sensing_matrix(CMatrix a) {
  SensingSnrMatrix out;
  a = 0.5 * (a + a.adjoint().eval());  // enforce exact Hermitian symmetry
  out.a = std::move(a);
  out.re_a = out.a.real();
  return out;
}

}  // namespace

SensingSnrMatrix build_sensing_matrix(const ChannelSet& channels,
                                      const PrecoderSet& precoders,
                                      const AngleSet& angles,
                                      double noise_variance_w) {
  const int n_rx = static_cast<int>(channels.sensing_gain_variances.rows());
  const CMatrix b = reflection_matrix(channels, precoders, angles);
  // Independent unit-power symbols average D_s^H B D_s to the diagonal of B.
  CMatrix a = CMatrix(b.diagonal().asDiagonal());
  a /= precoders.m_antennas * n_rx * noise_variance_w;
  return finish_sensing_matrix(std::move(a));
}

SensingSnrMatrix build_sensing_matrix(const ChannelSet& channels,
                                      const PrecoderSet& precoders,
                                      const AngleSet& angles,
                                      double noise_variance_w,
                                      const CMatrix& symbols) {
  if (symbols.cols() != precoders.n_ue() + 1 || symbols.rows() < 1)
    throw ShapeError("build_sensing_matrix: symbols must be tau x (n_ue+1)");
  const int n_rx = static_cast<int>(channels.sensing_gain_variances.rows());
  const double tau = static_cast<double>(symbols.rows());
  const CMatrix b = reflection_matrix(channels, precoders, angles);
  const CMatrix sym_gram = symbols.adjoint() * symbols;  // sum_m s_i* s_j
  CMatrix a = b.cwiseProduct(sym_gram) /
              (tau * precoders.m_antennas * n_rx * noise_variance_w);
  return finish_sensing_matrix(std::move(a));
}

RVector per_ap_power(const PrecoderSet& precoders, const RVector& rho) {
  if (rho.size() != precoders.n_ue() + 1)
    throw ShapeError("per_ap_power: rho size mismatch");
  RVector p = RVector::Zero(precoders.n_tx);
  for (int k = 0; k < precoders.n_tx; ++k)
    for (int i = 0; i < rho.size(); ++i)
      p(k) += rho(i) * precoders.per_ap_norms(i, k) * precoders.per_ap_norms(i, k);
  return p;
}

namespace {

// Shared cone assembly over an arbitrary subset of the stream amplitudes
// (index 0 = sensing). `extra_vars` appends unconstrained-by-cones variables
// (the baseline epigraph) after the active amplitudes.
socp::Program build_allocation_program(const SinrCoefficients& coeffs,
                                       const PrecoderSet& precoders,
                                       double gamma_c, double p_tx,
                                       std::optional<double> p_total_cap,
                                       const std::vector<int>& active,
                                       int extra_vars) {
  const int n_ue = coeffs.n_ue();
  const int n_act = static_cast<int>(active.size());
  const int n_vars = n_act + extra_vars;

  std::vector<int> pos(n_ue + 1, -1);
  for (int t = 0; t < n_act; ++t) pos[active[t]] = t;

  socp::Program prog;
  prog.n_vars = n_vars;
  prog.objective = RVector::Zero(n_vars);
  prog.nonneg = true;

  for (int i = 0; i < n_ue; ++i) {
    const int own = i + 1;
    if (pos[own] < 0)
      throw ShapeError("allocation program: UE amplitude must be active");
    const double own_gain = coeffs.gains(i, own);
    if (own_gain <= 0.0)
      throw InfeasibleAllocationError(
          "SINR constraint structurally infeasible: zero direct gain");
    socp::Cone cone;
    cone.a = RMatrix::Zero(n_act, n_vars);  // n_act-1 interferers + noise row
    cone.b = RVector::Zero(n_act);
    int row = 0;
    for (int j : active) {
      if (j == own) continue;
      cone.a(row, pos[j]) = coeffs.gains(i, j);
      ++row;
    }
    cone.b(row) = coeffs.noise_std;
    cone.f = RVector::Zero(n_vars);
    cone.f(pos[own]) = own_gain / std::sqrt(gamma_c);
    cone.g = 0.0;
    prog.cones.push_back(std::move(cone));
  }

  for (int k = 0; k < precoders.n_tx; ++k) {
    socp::Cone cone;
    cone.a = RMatrix::Zero(n_act, n_vars);
    for (int t = 0; t < n_act; ++t)
      cone.a(t, t) = precoders.per_ap_norms(active[t], k);
    cone.b = RVector::Zero(n_act);
    cone.f = RVector::Zero(n_vars);
    cone.g = std::sqrt(p_tx);
    prog.cones.push_back(std::move(cone));
  }

  if (p_total_cap) {
    // Unit-norm precoders make sum_i rho_i = ||q||^2.
    socp::Cone cone;
    cone.a = RMatrix::Zero(n_act, n_vars);
    for (int t = 0; t < n_act; ++t) cone.a(t, t) = 1.0;
    cone.b = RVector::Zero(n_act);
    cone.f = RVector::Zero(n_vars);
    cone.g = std::sqrt(*p_total_cap);
    prog.cones.push_back(std::move(cone));
  }
  return prog;
}

std::vector<int> active_indices(int n_ue, bool with_sensing) {
  std::vector<int> active;
  if (with_sensing) active.push_back(0);
  for (int i = 1; i <= n_ue; ++i) active.push_back(i);
  return active;
}

RVector expand(const RVector& q_active, const std::vector<int>& active, int n) {
  RVector q = RVector::Zero(n);
  for (std::size_t t = 0; t < active.size(); ++t) q(active[t]) = q_active(t);
  return q;
}

PowerSolution finalize_solution(RVector q, const SinrCoefficients& coeffs,
                                const PrecoderSet& precoders,
                                const PowerOptions& options,
                                const SensingSnrMatrix* a_matrix,
                                int iterations, bool converged,
                                std::vector<double> history) {
  // Pull marginal solver overshoot back inside the power bounds; a uniform
  // scale-down never lowers a SINR below gamma_c by more than O(tol).
  RVector rho = q.cwiseProduct(q);
  RVector p_ap = per_ap_power(precoders, rho);
  double scale2 = 1.0;
  if (p_ap.size() > 0 && p_ap.maxCoeff() > options.p_tx)
    scale2 = std::min(scale2, options.p_tx / p_ap.maxCoeff());
  if (options.p_total_cap && rho.sum() > *options.p_total_cap && rho.sum() > 0.0)
    scale2 = std::min(scale2, *options.p_total_cap / rho.sum());
  if (scale2 < 1.0) {
    q *= std::sqrt(scale2);
    rho = q.cwiseProduct(q);
    p_ap = per_ap_power(precoders, rho);
  }

  PowerSolution sol;
  sol.q = std::move(q);
  sol.rho = std::move(rho);
  sol.sensing_snr = a_matrix ? a_matrix->snr(sol.q) : 0.0;
  sol.ue_sinrs = evaluate_sinr(coeffs, sol.rho);
  sol.per_ap_power = std::move(p_ap);
  sol.iterations = iterations;
  sol.converged = converged;
  sol.objective_history = std::move(history);
  return sol;
}

struct CcpRun {
  RVector q_active;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

CcpRun run_ccp(socp::Program& program, const RMatrix& re_a,
               const std::vector<int>& active, const RVector& q_start,
               const RVector& center, const PowerOptions& options) {
  const int n = static_cast<int>(re_a.rows());
  const double eps = options.ccp_eps_rel * re_a.norm();

  RMatrix re_a_act(active.size(), active.size());
  for (std::size_t r = 0; r < active.size(); ++r)
    for (std::size_t c = 0; c < active.size(); ++c)
      re_a_act(r, c) = re_a(active[r], active[c]);

  CcpRun run;
  run.q_active = q_start;
  run.history.push_back(run.q_active.dot(re_a_act * run.q_active));
  for (int c = 1; c <= options.max_ccp_iterations; ++c) {
    program.objective = -(re_a_act * run.q_active);
    const RVector hint = 0.5 * (run.q_active + center);
    const socp::Solution sol = socp::solve(program, hint, options.solver);
    if (sol.status == socp::Status::infeasible)
      throw InfeasibleAllocationError("CCP subproblem reported infeasible");
    const RVector diff = expand(sol.q - run.q_active, active, n);
    run.q_active = sol.q;
    run.history.push_back(run.q_active.dot(re_a_act * run.q_active));
    run.iterations = c;
    if ((re_a * diff).norm() <= eps) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace

socp::Program build_ccp_subproblem(const SensingSnrMatrix& a_matrix,
                                   const SinrCoefficients& coeffs,
                                   const PrecoderSet& precoders,
                                   const RVector& q_prev, double gamma_c,
                                   double p_tx,
                                   std::optional<double> p_total_cap) {
  const int n = coeffs.n_ue() + 1;
  if (q_prev.size() != n)
    throw ShapeError("build_ccp_subproblem: q_prev size mismatch");
  socp::Program prog = build_allocation_program(
      coeffs, precoders, gamma_c, p_tx, p_total_cap, active_indices(coeffs.n_ue(), true), 0);
  prog.objective = -(a_matrix.re_a * q_prev);
  return prog;
}

PowerSolution baseline_allocate(const SinrCoefficients& coeffs,
                                const PrecoderSet& precoders,
                                const PowerOptions& options,
                                const SensingSnrMatrix* a_matrix) {
  const int n_ue = coeffs.n_ue();
  const int n = n_ue + 1;
  if (n_ue == 0) {
    return finalize_solution(RVector::Zero(n), coeffs, precoders, options,
                             a_matrix, 1, true, {0.0});
  }
  const std::vector<int> active = active_indices(n_ue, false);
  socp::Program prog = build_allocation_program(
      coeffs, precoders, options.gamma_c, options.p_tx, options.p_total_cap,
      active, /*extra_vars=*/1);
  const int t_var = static_cast<int>(active.size());
  {
    socp::Cone epigraph;  // ||q_active|| <= t lifts the quadratic objective
    epigraph.a = RMatrix::Zero(t_var, prog.n_vars);
    for (int i = 0; i < t_var; ++i) epigraph.a(i, i) = 1.0;
    epigraph.b = RVector::Zero(t_var);
    epigraph.f = RVector::Zero(prog.n_vars);
    epigraph.f(t_var) = 1.0;
    epigraph.g = 0.0;
    prog.cones.push_back(std::move(epigraph));
  }
  prog.objective = RVector::Zero(prog.n_vars);
  prog.objective(t_var) = 1.0;

  const socp::Solution sol = socp::solve(prog, options.solver);
  if (sol.status == socp::Status::infeasible)
    throw InfeasibleAllocationError("baseline power minimization infeasible");

  const RVector q = expand(sol.q.head(t_var), active, n);
  PowerSolution out = finalize_solution(q, coeffs, precoders, options, a_matrix,
                                        1, sol.status == socp::Status::optimal,
                                        {});
  out.objective_history = {out.sensing_snr};
  return out;
}

PowerSolution ccp_allocate(const SensingSnrMatrix& a_matrix,
                           const SinrCoefficients& coeffs,
                           const PrecoderSet& precoders,
                           const PowerOptions& options, const RVector* q0) {
  const int n_ue = coeffs.n_ue();
  const int n = n_ue + 1;
  if (a_matrix.re_a.rows() != n || a_matrix.re_a.cols() != n)
    throw ShapeError("ccp_allocate: sensing matrix size mismatch");

  const std::vector<int> active =
      active_indices(n_ue, options.with_sensing_symbol);
  if (active.empty()) {
    return finalize_solution(RVector::Zero(n), coeffs, precoders, options,
                             &a_matrix, 1, true, {0.0});
  }
  socp::Program prog = build_allocation_program(coeffs, precoders,
                                                options.gamma_c, options.p_tx,
                                                options.p_total_cap, active, 0);

  const auto center_opt = socp::find_interior(prog, options.solver);
  if (!center_opt)
    throw InfeasibleAllocationError("power allocation constraints infeasible");
  const RVector& center = *center_opt;

  PowerOptions base_opts = options;
  base_opts.p_total_cap = options.p_total_cap;
  const PowerSolution baseline =
      baseline_allocate(coeffs, precoders, base_opts, &a_matrix);

  std::vector<RVector> starts;
  if (q0) {
    if (q0->size() != n) throw ShapeError("ccp_allocate: q0 size mismatch");
    RVector s(active.size());
    for (std::size_t t = 0; t < active.size(); ++t) s(t) = (*q0)(active[t]);
    starts.push_back(std::move(s));
  } else {
    RVector s(active.size());
    for (std::size_t t = 0; t < active.size(); ++t)
      s(t) = baseline.q(active[t]);
    if (options.with_sensing_symbol)
      s(0) = 1e-3 * std::sqrt(options.p_tx);
    starts.push_back(std::move(s));
    if (options.with_sensing_symbol) {
      // Second start at the sensing-heavy extreme point; escapes stationary
      // points that under-allocate the dedicated beam.
      prog.objective = RVector::Zero(prog.n_vars);
      prog.objective(0) = -1.0;
      const socp::Solution smax = socp::solve(prog, center, options.solver);
      if (smax.status != socp::Status::infeasible) starts.push_back(smax.q);
    }
  }

  // Any start is re-feasibilized by blending toward the interior point; the
  // solver falls back to phase-1 if the blend is still outside.
  std::optional<CcpRun> best;
  for (const RVector& s : starts) {
    RVector q_start = 0.5 * (s + center);
    CcpRun run = run_ccp(prog, a_matrix.re_a, active, q_start, center, options);
    if (!best || run.history.back() > best->history.back()) best = std::move(run);
  }

  // The baseline point is feasible for this problem, so the reported optimum
  // never falls below it.
  if (best->history.back() < baseline.sensing_snr) {
    PowerSolution out = baseline;
    if (options.with_sensing_symbol) {
      out.iterations = best->iterations;
      out.converged = best->converged;
    }
    return out;
  }

  return finalize_solution(expand(best->q_active, active, n), coeffs, precoders,
                           options, &a_matrix, best->iterations, best->converged,
                           std::move(best->history));
}

}  // namespace cfjcas
