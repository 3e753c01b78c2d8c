// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/detector.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "cfjcas/errors.hpp"

namespace cfjcas {

DetectorContext make_detector_context(const RMatrix& sensing_gain_variances,
                                      double noise_variance_w) {
  if (noise_variance_w <= 0.0)
    throw std::domain_error("make_detector_context: noise variance must be > 0");
  DetectorContext ctx;
  ctx.noise_variance = noise_variance_w;
  const Eigen::Index n_rx = sensing_gain_variances.rows();
  const Eigen::Index n_tx = sensing_gain_variances.cols();
  ctx.d_diag.resize(n_rx * n_tx);
  ctx.log_c = 0.0;
  for (Eigen::Index r = 0; r < n_rx; ++r)
    for (Eigen::Index k = 0; k < n_tx; ++k) {
      const double v = sensing_gain_variances(r, k);
      if (v <= 0.0)
        throw std::domain_error(
            "make_detector_context: sensing gain variances must be > 0");
      ctx.d_diag(r * n_tx + k) = noise_variance_w / v;
      ctx.log_c -= std::log(M_PI * v);
    }
  return ctx;
}

Accumulation accumulate(const SensingMaps& maps, const CMatrix& y) {
  if (y.rows() != maps.m_antennas * maps.n_rx || y.cols() != maps.tau)
    throw ShapeError("accumulate: observation shape mismatch");
  const int dim = maps.n_tx * maps.n_rx;
  Accumulation acc;
  acc.gram = CMatrix::Zero(dim, dim);
  acc.corr = CVector::Zero(dim);
  // Every receiver block of the Gram equals M * conj(C C^H) because the
  // receive responses only contribute ||a||^2 = M.
  const CMatrix block =
      static_cast<double>(maps.m_antennas) * (maps.c * maps.c.adjoint()).conjugate();
  for (int r = 0; r < maps.n_rx; ++r) {
    acc.gram.block(r * maps.n_tx, r * maps.n_tx, maps.n_tx, maps.n_tx) = block;
    // corr_r = conj(C) * (a_r^H Y_r)^T
    const auto y_r = y.middleRows(r * maps.m_antennas, maps.m_antennas);
    const CMatrix beta = maps.rx_responses[r].adjoint() * y_r;  // 1 x tau
    acc.corr.segment(r * maps.n_tx, maps.n_tx) =
        maps.c.conjugate() * beta.transpose();
  }
  return acc;
}

Accumulation accumulate(const std::vector<CMatrix>& g,
                        const std::vector<CVector>& y) {
  if (g.size() != y.size() || g.empty())
    throw ShapeError("accumulate: sequences must have equal nonzero length");
  const Eigen::Index dim = g.front().cols();
  Accumulation acc;
  acc.gram = CMatrix::Zero(dim, dim);
  acc.corr = CVector::Zero(dim);
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (g[m].cols() != dim || g[m].rows() != y[m].size())
      throw ShapeError("accumulate: inconsistent shapes in sequence");
    acc.gram.noalias() += g[m].adjoint() * g[m];
    acc.corr.noalias() += g[m].adjoint() * y[m];
  }
  return acc;
}

namespace {

CMatrix ridge(const CMatrix& gram, const DetectorContext& ctx) {
  if (gram.rows() != ctx.d_diag.size())
    throw ShapeError("detector: gram/context dimension mismatch");
  CMatrix m = gram;
  m.diagonal() += ctx.d_diag.cast<Complex>();
  return m;
}

}  // namespace

CVector estimate_alpha(const CMatrix& gram, const CVector& corr,
                       const DetectorContext& ctx) {
  return Eigen::LLT<CMatrix>(ridge(gram, ctx)).solve(corr);
}

double test_statistic(const CMatrix& gram, const CVector& corr,
                      const DetectorContext& ctx) {
  const CVector alpha_hat = estimate_alpha(gram, corr, ctx);
  const Complex quad = corr.dot(alpha_hat);  // corr^H alpha_hat
  assert(std::abs(quad.imag()) <= 1e-10 * (1.0 + std::abs(quad.real())));
  return ctx.log_c + quad.real() / ctx.noise_variance;
}

double calibrate_threshold(std::vector<double> h0_statistics, double p_fa) {
  if (!(p_fa > 0.0 && p_fa < 1.0))
    throw std::domain_error("calibrate_threshold: p_fa must be in (0, 1)");
  const std::size_t n = h0_statistics.size();
  if (static_cast<double>(n) < 20.0 / p_fa)
    throw InsufficientSamplesError(
        "calibrate_threshold: need at least 20/p_fa H0 samples");
  const auto idx =
      static_cast<std::size_t>(std::ceil((1.0 - p_fa) * static_cast<double>(n)));
  auto nth = h0_statistics.begin() + static_cast<std::ptrdiff_t>(idx - 1);
  std::nth_element(h0_statistics.begin(), nth, h0_statistics.end());
  return *nth;
}

Hypothesis decide(double statistic, double threshold) {
  return statistic >= threshold ? Hypothesis::h1 : Hypothesis::h0;
}

MaprtDetector::MaprtDetector(const SensingMaps& maps, const DetectorContext& ctx)
    : maps_(maps), ctx_(ctx) {
  const CMatrix zero_obs =
      CMatrix::Zero(maps.m_antennas * maps.n_rx, maps.tau);
  gram_ = accumulate(maps_, zero_obs).gram;
  ridge_llt_.compute(ridge(gram_, ctx_));
}

CVector MaprtDetector::correlate(const CMatrix& y) const {
  if (y.rows() != maps_.m_antennas * maps_.n_rx || y.cols() != maps_.tau)
    throw ShapeError("MaprtDetector::correlate: observation shape mismatch");
  CVector corr(maps_.n_tx * maps_.n_rx);
  for (int r = 0; r < maps_.n_rx; ++r) {
    const auto y_r = y.middleRows(r * maps_.m_antennas, maps_.m_antennas);
    const CMatrix beta = maps_.rx_responses[r].adjoint() * y_r;
    corr.segment(r * maps_.n_tx, maps_.n_tx) =
        maps_.c.conjugate() * beta.transpose();
  }
  return corr;
}

double MaprtDetector::statistic(const CVector& corr) const {
  const CVector alpha_hat = ridge_llt_.solve(corr);
  return ctx_.log_c + corr.dot(alpha_hat).real() / ctx_.noise_variance;
}

CVector MaprtDetector::estimate(const CVector& corr) const {
  return ridge_llt_.solve(corr);
}

}  // namespace cfjcas
