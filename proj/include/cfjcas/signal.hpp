// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cfjcas/channel.hpp"
#include "cfjcas/precoding.hpp"
#include "cfjcas/rng.hpp"
#include "cfjcas/types.hpp"

namespace cfjcas {

enum class SymbolAlphabet { gaussian, qpsk };

/// tau x (n_ue+1) block of zero-mean unit-power symbols; column 0 carries the
/// sensing stream. Each stream draws from its own substream.
CMatrix draw_symbols(int tau, int n_ue, SymbolAlphabet alphabet, Rng& rng);

/// Stacked transmit signal for a whole dwell: column m is the concatenation
/// of x_k[m] = W_k D_s[m] q over transmitter APs ((n_tx*m_antennas) x tau).
CMatrix transmit_block(const PrecoderSet& precoders, const RVector& q,
                       const CMatrix& symbols);

/// Per-AP transmit vectors x_k[m] at one symbol index.
std::vector<CVector> transmit_signals(const PrecoderSet& precoders,
                                      const RVector& q, const CMatrix& symbols,
                                      int m_index);

/// UE-side reception: y_i[m] = h_i^H x[m] + n_i[m]. Returns n_ue x tau.
CMatrix receive_ue(const ChannelSet& channels, const CMatrix& x_block,
                   double noise_variance_w, Rng& rng);

/// Known part of the reflected signal for a dwell. Each G[m] is block
/// diagonal over receivers with rank-one blocks a(phi_r, theta_r) c[m]^T,
/// where c_k[m] = a^T(varphi_k, vartheta_k) x_k[m]; only c and the receive
/// responses are stored.
struct SensingMaps {
  std::vector<CVector> rx_responses;  // length n_rx, each of length m_antennas
  CMatrix tx_gain;   // n_tx x (n_ue+1): row k = a^T(varphi_k) W_k
  CMatrix c;         // n_tx x tau
  int m_antennas = 0;
  int n_rx = 0;
  int n_tx = 0;
  int tau = 0;

  /// Materializes G[m] ((m_antennas*n_rx) x (n_tx*n_rx)).
  CMatrix g(int m) const;
  std::vector<CMatrix> materialize() const;
};

SensingMaps build_sensing_maps(const AngleSet& angles,
                               const PrecoderSet& precoders, const RVector& q,
                               const CMatrix& symbols);

struct SensingObservation {
  CMatrix y;  // (m_antennas*n_rx) x tau
  bool target_present = false;
  CMatrix alpha;  // n_rx x n_tx; zero when absent
};

/// Receiver-side observation after target-free cancellation:
/// y[m] = G[m] alpha + n[m] under H1, y[m] = n[m] under H0 (alpha == nullptr).
SensingObservation receive_sensing(const SensingMaps& maps,
                                   const CMatrix* alpha,
                                   double noise_variance_w, Rng& rng);

}  // namespace cfjcas
