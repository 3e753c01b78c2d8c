// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cfjcas/channel.hpp"
#include "cfjcas/types.hpp"

namespace cfjcas {

/// Centralized unit-norm precoders. Index 0 is the sensing stream throughout.
struct PrecoderSet {
  std::vector<CVector> ue_precoders;  // w_i, unit norm, length n_tx*m
  CVector sensing_precoder;           // w_0, unit norm
  RMatrix per_ap_norms;               // (n_ue+1) x n_tx; row 0 = sensing
  double rzf_lambda = 0.0;
  int n_tx = 0;
  int m_antennas = 0;

  int n_ue() const { return static_cast<int>(ue_precoders.size()); }
  /// Stacked (n_tx*m) x (n_ue+1) matrix [w_0 w_1 ... w_Nue].
  CMatrix stacked() const;
};

/// Regularized zero forcing: solve (sum_j h_j h_j^H + lambda I) w = h_i for
/// each UE, then normalize. lambda > 0 keeps the system positive definite.
std::vector<CVector> rzf_precoders(const std::vector<CVector>& channels,
                                   double lambda);

/// Projects the target channel onto the orthogonal complement of the UE
/// channel span (rank-revealing SVD basis, relative drop tolerance 1e-10) and
/// normalizes. Throws DegenerateProjectionError when the projection vanishes
/// or no nullspace exists.
CVector zf_sensing_precoder(const CVector& target_channel,
                            const std::vector<CVector>& ue_channels);

/// Splits a centralized vector into n_tx per-AP blocks of length m.
std::vector<CVector> partition_per_ap(const CVector& w, int n_tx, int m);

/// MMSE-style loading: n_ue * sigma_n^2 * m / p_tx (with n_ue floored at 1 so
/// the value stays positive for UE-free scenarios).
double default_rzf_lambda(const Scenario& scenario);

PrecoderSet build_precoders(const ChannelSet& channels, double lambda);

}  // namespace cfjcas
