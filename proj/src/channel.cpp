// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/channel.hpp"

#include <cmath>

#include "cfjcas/errors.hpp"

namespace cfjcas {

CVector array_response(double azimuth_rad, double elevation_rad, int m_antennas) {
  if (m_antennas < 1) throw ShapeError("array_response: m_antennas must be >= 1");
  const double phase_step = M_PI * std::sin(azimuth_rad) * std::cos(elevation_rad);
  CVector a(m_antennas);
  for (int m = 0; m < m_antennas; ++m)
    a(m) = std::polar(1.0, phase_step * m);
  return a;
}

double comm_pathloss_db(double distance_m, double carrier_hz) {
  if (distance_m <= 0.0)
    throw std::domain_error("comm_pathloss_db: distance must be positive");
  const double f_ghz = carrier_hz / 1e9;
  return 36.7 * std::log10(distance_m) + 22.7 + 26.0 * std::log10(f_ghz);
}

double sensing_gain_variance(double d_tx_m, double d_rx_m, double carrier_hz,
                             double rcs_variance) {
  if (d_tx_m <= 0.0 || d_rx_m <= 0.0)
    throw std::domain_error("sensing_gain_variance: distances must be positive");
  if (rcs_variance < 0.0)
    throw std::domain_error("sensing_gain_variance: rcs_variance must be >= 0");
  const double lambda_c = kSpeedOfLight / carrier_hz;
  const double four_pi = 4.0 * M_PI;
  return rcs_variance * lambda_c * lambda_c /
         (four_pi * four_pi * four_pi * d_tx_m * d_tx_m * d_rx_m * d_rx_m);
}

std::vector<CVector> draw_comm_channels(const Scenario& scenario, Rng& rng,
                                        double shadowing_std_db) {
  const int m = scenario.m_antennas;
  const int n_tx = static_cast<int>(scenario.tx_aps.size());
  std::vector<CVector> channels;
  channels.reserve(scenario.n_ue);
  for (int i = 0; i < scenario.n_ue; ++i) {
    Rng ue_rng = rng.fork(i);
    CVector h(n_tx * m);
    for (int k = 0; k < n_tx; ++k) {
      const Vec3& ap = scenario.ap_positions[scenario.tx_aps[k]];
      const double d = (scenario.ue_positions[i] - ap).norm();
      double pl_db = comm_pathloss_db(d, scenario.carrier_hz);
      if (shadowing_std_db > 0.0) pl_db += shadowing_std_db * ue_rng.normal();
      const double per_antenna_var = db_to_linear(-pl_db);
      for (int a = 0; a < m; ++a)
        h(k * m + a) = ue_rng.cnormal(per_antenna_var);
    }
    channels.push_back(std::move(h));
  }
  return channels;
}

CMatrix draw_rcs(const RMatrix& variances, Rng& rng) {
  CMatrix alpha(variances.rows(), variances.cols());
  for (Eigen::Index r = 0; r < variances.rows(); ++r)
    for (Eigen::Index k = 0; k < variances.cols(); ++k) {
      const double v = variances(r, k);
      if (v < 0.0) throw std::domain_error("draw_rcs: negative variance");
      alpha(r, k) = v > 0.0 ? rng.cnormal(v) : Complex(0.0, 0.0);
    }
  return alpha;
}

ChannelSet build_channel_set(const Scenario& scenario, const AngleSet& angles,
                             const ChannelOptions& options, Rng& rng) {
  ChannelSet cs;
  cs.n_tx = static_cast<int>(scenario.tx_aps.size());
  cs.m_antennas = scenario.m_antennas;

  Rng comm_rng = rng.fork(0);
  cs.ue_channels = draw_comm_channels(scenario, comm_rng, options.shadowing_std_db);

  // h_0 stores the conjugated stack of tx-side responses so that h_0^H w is
  // the coherent gain toward the target.
  cs.target_channel.resize(cs.n_tx * cs.m_antennas);
  for (int k = 0; k < cs.n_tx; ++k) {
    const CVector a = array_response(angles.tx_azimuth[k], angles.tx_elevation[k],
                                     cs.m_antennas);
    cs.target_channel.segment(k * cs.m_antennas, cs.m_antennas) = a.conjugate();
  }

  const int n_rx = static_cast<int>(scenario.rx_aps.size());
  cs.rx_responses.reserve(n_rx);
  for (int r = 0; r < n_rx; ++r)
    cs.rx_responses.push_back(array_response(angles.rx_azimuth[r],
                                             angles.rx_elevation[r],
                                             cs.m_antennas));

  cs.sensing_gain_variances.resize(n_rx, cs.n_tx);
  for (int r = 0; r < n_rx; ++r) {
    const double d_rx =
        (scenario.ap_positions[scenario.rx_aps[r]] - scenario.target_position)
            .norm();
    for (int k = 0; k < cs.n_tx; ++k) {
      if (options.rcs_mode == RcsMode::raw) {
        cs.sensing_gain_variances(r, k) = options.rcs_variance;
      } else {
        const double d_tx = (scenario.ap_positions[scenario.tx_aps[k]] -
                             scenario.target_position)
                                .norm();
        cs.sensing_gain_variances(r, k) = sensing_gain_variance(
            d_tx, d_rx, scenario.carrier_hz, options.rcs_variance);
      }
    }
  }
  return cs;
}

}  // namespace cfjcas
