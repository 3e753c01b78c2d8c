// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cfjcas/rng.hpp"
#include "cfjcas/scenario.hpp"
#include "cfjcas/types.hpp"

namespace cfjcas {

/// How the variance of the reflection coefficients alpha_{r,k} is formed:
/// `combined` folds the two-way radar-equation path loss into the RCS
/// variance; `raw` uses the RCS variance for every (r,k) pair directly.
enum class RcsMode { combined, raw };

struct ChannelOptions {
  double rcs_variance = 1e-3;   // sigma^2_rcs, linear scale
  RcsMode rcs_mode = RcsMode::combined;
  double shadowing_std_db = 0.0;  // log-normal shadowing; 0 disables
};

/// All propagation state for one realization.
struct ChannelSet {
  /// h_i, length n_tx*m. Stored in the receive convention: the signal seen by
  /// UE i is h_i^H x with x the stacked transmit signal.
  std::vector<CVector> ue_channels;
  /// h_0, length n_tx*m. conj(h_0) stacks the transmitter-to-target array
  /// responses, so h_0^H w is the beamforming gain toward the target.
  CVector target_channel;
  RMatrix sensing_gain_variances;  // n_rx x n_tx, sigma^2_{r,k}
  std::vector<CVector> rx_responses;  // a(phi_r, theta_r) per receiver
  int n_tx = 0;
  int m_antennas = 0;
};

/// Half-wavelength ULA response: entry m is exp(j*m*pi*sin(az)*cos(el)).
CVector array_response(double azimuth_rad, double elevation_rad, int m_antennas);

/// 3GPP UMi NLOS: 36.7*log10(d_m) + 22.7 + 26*log10(f_GHz).
double comm_pathloss_db(double distance_m, double carrier_hz);

/// Two-way radar equation with unit element gains:
/// rcs_variance * lambda^2 / ((4*pi)^3 * d_tx^2 * d_rx^2).
double sensing_gain_variance(double d_tx_m, double d_rx_m, double carrier_hz,
                             double rcs_variance);

/// i.i.d. Rayleigh fading with UMi path loss; per-antenna variance
/// 10^(-PL/10). Each UE draws from its own substream.
std::vector<CVector> draw_comm_channels(const Scenario& scenario, Rng& rng,
                                        double shadowing_std_db = 0.0);

/// One Swerling-I draw: alpha_{r,k} ~ CN(0, variances(r,k)), independent
/// across entries, held fixed over a dwell.
CMatrix draw_rcs(const RMatrix& variances, Rng& rng);

ChannelSet build_channel_set(const Scenario& scenario, const AngleSet& angles,
                             const ChannelOptions& options, Rng& rng);

}  // namespace cfjcas
