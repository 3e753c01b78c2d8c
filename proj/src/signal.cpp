// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/signal.hpp"

#include <cmath>

#include "cfjcas/errors.hpp"

namespace cfjcas {

CMatrix draw_symbols(int tau, int n_ue, SymbolAlphabet alphabet, Rng& rng) {
  if (tau < 1) throw ShapeError("draw_symbols: tau must be >= 1");
  if (n_ue < 0) throw ShapeError("draw_symbols: n_ue must be >= 0");
  CMatrix s(tau, n_ue + 1);
  for (int j = 0; j <= n_ue; ++j) {
    Rng stream = rng.fork(j);
    for (int m = 0; m < tau; ++m) {
      if (alphabet == SymbolAlphabet::gaussian) {
        s(m, j) = stream.cnormal(1.0);
      } else {
        const double re = stream.uniform() < 0.5 ? -M_SQRT1_2 : M_SQRT1_2;
        const double im = stream.uniform() < 0.5 ? -M_SQRT1_2 : M_SQRT1_2;
        s(m, j) = Complex(re, im);
      }
    }
  }
  return s;
}

CMatrix transmit_block(const PrecoderSet& precoders, const RVector& q,
                       const CMatrix& symbols) {
  const int n_streams = precoders.n_ue() + 1;
  if (q.size() != n_streams) throw ShapeError("transmit_block: q size mismatch");
  if (symbols.cols() != n_streams)
    throw ShapeError("transmit_block: symbols column count mismatch");
  const CMatrix w = precoders.stacked();
  // Column m is W D_s[m] q = W (s[m] .* q).
  return w * (symbols.transpose().array().colwise() *
              q.cast<Complex>().array()).matrix();
}

std::vector<CVector> transmit_signals(const PrecoderSet& precoders,
                                      const RVector& q, const CMatrix& symbols,
                                      int m_index) {
  if (m_index < 0 || m_index >= symbols.rows())
    throw ShapeError("transmit_signals: symbol index out of range");
  const int n_streams = precoders.n_ue() + 1;
  if (q.size() != n_streams) throw ShapeError("transmit_signals: q size mismatch");
  const int m = precoders.m_antennas;
  std::vector<CVector> x;
  x.reserve(precoders.n_tx);
  for (int k = 0; k < precoders.n_tx; ++k) {
    CVector xk = CVector::Zero(m);
    for (int i = 0; i < n_streams; ++i) {
      const CVector& w = (i == 0) ? precoders.sensing_precoder
                                  : precoders.ue_precoders[i - 1];
      xk += q(i) * symbols(m_index, i) * w.segment(k * m, m);
    }
    x.push_back(std::move(xk));
  }
  return x;
}

CMatrix receive_ue(const ChannelSet& channels, const CMatrix& x_block,
                   double noise_variance_w, Rng& rng) {
  const int n_ue = static_cast<int>(channels.ue_channels.size());
  const Eigen::Index tau = x_block.cols();
  CMatrix y(n_ue, tau);
  for (int i = 0; i < n_ue; ++i) {
    if (channels.ue_channels[i].size() != x_block.rows())
      throw ShapeError("receive_ue: channel/signal dimension mismatch");
    y.row(i) = channels.ue_channels[i].adjoint() * x_block;
    for (Eigen::Index m = 0; m < tau; ++m)
      y(i, m) += rng.cnormal(noise_variance_w);
  }
  return y;
}

CMatrix SensingMaps::g(int m) const {
  if (m < 0 || m >= tau) throw ShapeError("SensingMaps::g: symbol out of range");
  CMatrix gm = CMatrix::Zero(m_antennas * n_rx, n_tx * n_rx);
  for (int r = 0; r < n_rx; ++r)
    gm.block(r * m_antennas, r * n_tx, m_antennas, n_tx) =
        rx_responses[r] * c.col(m).transpose();
  return gm;
}

std::vector<CMatrix> SensingMaps::materialize() const {
  std::vector<CMatrix> gs;
  gs.reserve(tau);
  for (int m = 0; m < tau; ++m) gs.push_back(g(m));
  return gs;
}

SensingMaps build_sensing_maps(const AngleSet& angles,
                               const PrecoderSet& precoders, const RVector& q,
                               const CMatrix& symbols) {
  const int n_streams = precoders.n_ue() + 1;
  if (q.size() != n_streams)
    throw ShapeError("build_sensing_maps: q size mismatch");
  if (symbols.cols() != n_streams)
    throw ShapeError("build_sensing_maps: symbols column count mismatch");

  SensingMaps maps;
  maps.m_antennas = precoders.m_antennas;
  maps.n_tx = precoders.n_tx;
  maps.n_rx = static_cast<int>(angles.rx_azimuth.size());
  maps.tau = static_cast<int>(symbols.rows());

  maps.rx_responses.reserve(maps.n_rx);
  for (int r = 0; r < maps.n_rx; ++r)
    maps.rx_responses.push_back(array_response(
        angles.rx_azimuth[r], angles.rx_elevation[r], maps.m_antennas));

  const CMatrix w = precoders.stacked();
  maps.tx_gain.resize(maps.n_tx, n_streams);
  for (int k = 0; k < maps.n_tx; ++k) {
    const CVector a = array_response(angles.tx_azimuth[k],
                                     angles.tx_elevation[k], maps.m_antennas);
    maps.tx_gain.row(k) =
        (w.middleRows(k * maps.m_antennas, maps.m_antennas).transpose() * a)
            .transpose();
  }
  // c_k[m] = a^T(varphi_k) x_k[m] = tx_gain.row(k) . (s[m] .* q).
  maps.c = maps.tx_gain * (symbols.transpose().array().colwise() *
                           q.cast<Complex>().array()).matrix();
  return maps;
}

SensingObservation receive_sensing(const SensingMaps& maps,
                                   const CMatrix* alpha,
                                   double noise_variance_w, Rng& rng) {
  SensingObservation obs;
  obs.target_present = alpha != nullptr;
  obs.alpha = obs.target_present ? *alpha : CMatrix::Zero(maps.n_rx, maps.n_tx);
  if (obs.target_present &&
      (obs.alpha.rows() != maps.n_rx || obs.alpha.cols() != maps.n_tx))
    throw ShapeError("receive_sensing: alpha must be n_rx x n_tx");

  const int rows = maps.m_antennas * maps.n_rx;
  obs.y.resize(rows, maps.tau);
  for (int m = 0; m < maps.tau; ++m) {
    for (int r = 0; r < maps.n_rx; ++r) {
      auto block = obs.y.col(m).segment(r * maps.m_antennas, maps.m_antennas);
      if (obs.target_present) {
        const Complex gain = maps.c.col(m).transpose() * obs.alpha.row(r).transpose();
        block = gain * maps.rx_responses[r];
      } else {
        block.setZero();
      }
      for (int a = 0; a < maps.m_antennas; ++a)
        block(a) += rng.cnormal(noise_variance_w);
    }
  }
  return obs;
}

}  // namespace cfjcas
