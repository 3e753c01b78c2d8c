// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "cfjcas/precoding.hpp"
#include "cfjcas/scenario.hpp"
#include "cfjcas/socp.hpp"
#include "cfjcas/types.hpp"

namespace cfjcas {

/// |h_i^H w_j| for every UE i and stream j (column 0 = sensing stream).
struct SinrCoefficients {
  RMatrix gains;         // n_ue x (n_ue+1)
  double noise_std = 0;  // sigma_n

  int n_ue() const { return static_cast<int>(gains.rows()); }
};

SinrCoefficients build_sinr_coefficients(const ChannelSet& channels,
                                         const PrecoderSet& precoders,
                                         double noise_std);

/// Downlink SINR per UE for the given stream powers rho (length n_ue+1,
/// entry 0 = sensing power).
RVector evaluate_sinr(const SinrCoefficients& coeffs, const RVector& rho);

/// Quadratic form of the sensing SNR: gamma_s = q^T Re{A} q with q the
/// amplitude vector [sqrt(rho_0) ... sqrt(rho_Nue)].
struct SensingSnrMatrix {
  CMatrix a;     // (n_ue+1)^2, Hermitian PSD
  RMatrix re_a;

  double snr(const RVector& q) const { return q.dot(re_a * q); }
};

/// Expectation mode: the average over unit-power independent symbols keeps
/// only the diagonal of the inner reflection matrix.
SensingSnrMatrix build_sensing_matrix(const ChannelSet& channels,
                                      const PrecoderSet& precoders,
                                      const AngleSet& angles,
                                      double noise_variance_w);

/// Explicit-symbol mode: uses the realized tau x (n_ue+1) symbol block.
SensingSnrMatrix build_sensing_matrix(const ChannelSet& channels,
                                      const PrecoderSet& precoders,
                                      const AngleSet& angles,
                                      double noise_variance_w,
                                      const CMatrix& symbols);

struct PowerOptions {
  double gamma_c = 100.0;              // SINR threshold, linear
  double p_tx = 1.0;                   // per-AP power cap, W
  std::optional<double> p_total_cap;   // network-wide power cap, W
  bool with_sensing_symbol = true;     // false pins rho_0 = 0
  double ccp_eps_rel = 1e-6;           // termination: ||ReA dq|| <= eps_rel*||ReA||_F
  int max_ccp_iterations = 100;
  socp::SolverOptions solver;
};

struct PowerSolution {
  RVector q;              // n_ue+1 amplitudes sqrt(rho)
  RVector rho;            // elementwise squares
  double sensing_snr = 0.0;
  RVector ue_sinrs;
  RVector per_ap_power;   // n_tx entries
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;  // q^T ReA q per accepted iterate
};

/// Linearized subproblem of one CCP step over the full amplitude vector:
/// maximize q . (ReA q_prev) subject to the per-UE SINR cones, the per-AP
/// power cones, the optional total-power cone, and q >= 0.
socp::Program build_ccp_subproblem(const SensingSnrMatrix& a_matrix,
                                   const SinrCoefficients& coeffs,
                                   const PrecoderSet& precoders,
                                   const RVector& q_prev, double gamma_c,
                                   double p_tx,
                                   std::optional<double> p_total_cap);

/// Concave-convex procedure maximizing the sensing SNR under the SINR and
/// power constraints. Starts from the communication-centric solution plus a
/// small sensing amplitude unless q0 is supplied; returns the best of the
/// candidate runs (the baseline point is always a candidate, so the achieved
/// SNR never falls below it). Throws InfeasibleAllocationError.
PowerSolution ccp_allocate(const SensingSnrMatrix& a_matrix,
                           const SinrCoefficients& coeffs,
                           const PrecoderSet& precoders,
                           const PowerOptions& options,
                           const RVector* q0 = nullptr);

/// Communication-centric baseline: minimize total power under the same SINR
/// and per-AP constraints with rho_0 = 0. Convex, solved in one shot.
/// The sensing SNR of the result is evaluated against a_matrix when given.
PowerSolution baseline_allocate(const SinrCoefficients& coeffs,
                                const PrecoderSet& precoders,
                                const PowerOptions& options,
                                const SensingSnrMatrix* a_matrix = nullptr);

/// P_k = sum_i rho_i ||w_{i,k}||^2 for each transmitter AP.
RVector per_ap_power(const PrecoderSet& precoders, const RVector& rho);

}  // namespace cfjcas
