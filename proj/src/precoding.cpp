// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/precoding.hpp"

#include <Eigen/SVD>

#include "cfjcas/errors.hpp"

namespace cfjcas {

CMatrix PrecoderSet::stacked() const {
  const int dim = static_cast<int>(sensing_precoder.size());
  CMatrix w(dim, n_ue() + 1);
  w.col(0) = sensing_precoder;
  for (int i = 0; i < n_ue(); ++i) w.col(i + 1) = ue_precoders[i];
  return w;
}

std::vector<CVector> rzf_precoders(const std::vector<CVector>& channels,
                                   double lambda) {
  if (lambda <= 0.0) throw std::domain_error("rzf_precoders: lambda must be > 0");
  if (channels.empty()) return {};
  const Eigen::Index dim = channels.front().size();
  CMatrix h(dim, static_cast<Eigen::Index>(channels.size()));
  for (std::size_t j = 0; j < channels.size(); ++j) {
    if (channels[j].size() != dim) throw ShapeError("rzf_precoders: ragged channels");
    h.col(static_cast<Eigen::Index>(j)) = channels[j];
  }
  CMatrix gram = h * h.adjoint();
  gram.diagonal().array() += lambda;
  const CMatrix solved = Eigen::LLT<CMatrix>(gram).solve(h);

  std::vector<CVector> precoders;
  precoders.reserve(channels.size());
  for (Eigen::Index j = 0; j < solved.cols(); ++j)
    precoders.push_back(solved.col(j).normalized());
  return precoders;
}

CVector zf_sensing_precoder(const CVector& target_channel,
                            const std::vector<CVector>& ue_channels) {
  if (ue_channels.empty()) return target_channel.normalized();

  const Eigen::Index dim = target_channel.size();
  if (static_cast<Eigen::Index>(ue_channels.size()) >= dim)
    throw DegenerateProjectionError(
        "zf_sensing_precoder: UE channels span the whole space (need n_tx*m > n_ue)");

  CMatrix h(dim, static_cast<Eigen::Index>(ue_channels.size()));
  for (std::size_t j = 0; j < ue_channels.size(); ++j) {
    if (ue_channels[j].size() != dim)
      throw ShapeError("zf_sensing_precoder: ragged channels");
    h.col(static_cast<Eigen::Index>(j)) = ue_channels[j];
  }

  Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * sv(0)) ++rank;

  const CMatrix basis = svd.matrixU().leftCols(rank);
  CVector w = target_channel - basis * (basis.adjoint() * target_channel);
  const double norm = w.norm();
  if (norm <= 1e-9 * target_channel.norm())
    throw DegenerateProjectionError(
        "zf_sensing_precoder: target channel lies in the UE span");
  return w / norm;
}

std::vector<CVector> partition_per_ap(const CVector& w, int n_tx, int m) {
  if (n_tx < 1 || m < 1 || w.size() != static_cast<Eigen::Index>(n_tx) * m)
    throw ShapeError("partition_per_ap: length must equal n_tx * m");
  std::vector<CVector> blocks;
  blocks.reserve(n_tx);
  for (int k = 0; k < n_tx; ++k) blocks.push_back(w.segment(k * m, m));
  return blocks;
}

double default_rzf_lambda(const Scenario& scenario) {
  const double users = std::max(scenario.n_ue, 1);
  return users * scenario.noise_variance_w * scenario.m_antennas /
         scenario.p_tx_max_w;
}

PrecoderSet build_precoders(const ChannelSet& channels, double lambda) {
  PrecoderSet set;
  set.n_tx = channels.n_tx;
  set.m_antennas = channels.m_antennas;
  set.rzf_lambda = lambda;
  set.ue_precoders = rzf_precoders(channels.ue_channels, lambda);
  set.sensing_precoder =
      zf_sensing_precoder(channels.target_channel, channels.ue_channels);

  const int n_ue = set.n_ue();
  set.per_ap_norms.resize(n_ue + 1, set.n_tx);
  for (int i = 0; i <= n_ue; ++i) {
    const CVector& w = (i == 0) ? set.sensing_precoder : set.ue_precoders[i - 1];
    for (int k = 0; k < set.n_tx; ++k)
      set.per_ap_norms(i, k) = w.segment(k * set.m_antennas, set.m_antennas).norm();
  }
  return set;
}

}  // namespace cfjcas
