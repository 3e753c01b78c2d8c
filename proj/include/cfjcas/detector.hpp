// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cfjcas/signal.hpp"
#include "cfjcas/types.hpp"

namespace cfjcas {

/// Prior statistics entering the MAP ridge. The diagonal D and the constant
/// ln C are indexed receiver-major: entry (r*n_tx + k) <-> alpha_{r,k}.
struct DetectorContext {
  RVector d_diag;          // sigma_n^2 / sigma^2_{r,k}
  double log_c = 0.0;      // -sum ln(pi sigma^2_{r,k})
  double noise_variance = 0.0;
};

/// Requires every sensing gain variance to be strictly positive.
DetectorContext make_detector_context(const RMatrix& sensing_gain_variances,
                                      double noise_variance_w);

struct Accumulation {
  CMatrix gram;  // sum_m G^H[m] G[m], Hermitian PSD
  CVector corr;  // sum_m G^H[m] y[m]
};

Accumulation accumulate(const SensingMaps& maps, const CMatrix& y);
/// Generic form over explicit per-symbol matrices (used by tests/oracles).
Accumulation accumulate(const std::vector<CMatrix>& g,
                        const std::vector<CVector>& y);

/// MAP-ridge estimate alpha_hat = (gram + D)^{-1} corr.
CVector estimate_alpha(const CMatrix& gram, const CVector& corr,
                       const DetectorContext& ctx);

/// T = ln C + corr^H (gram + D)^{-1} corr / sigma_n^2. The quadratic form is
/// real by construction; the imaginary residue is discarded.
double test_statistic(const CMatrix& gram, const CVector& corr,
                      const DetectorContext& ctx);

/// Empirical (1 - p_fa) quantile: ascending order statistic at one-based
/// index ceil((1 - p_fa) * n). Requires n >= 20 / p_fa.
double calibrate_threshold(std::vector<double> h0_statistics, double p_fa);

enum class Hypothesis { h0, h1 };

/// H1 iff statistic >= threshold.
Hypothesis decide(double statistic, double threshold);

/// Per-dwell statistic engine: the Gram matrix and its ridge factorization
/// depend only on the known maps, so they are computed once and each trial
/// costs one correlation plus a triangular solve.
class MaprtDetector {
 public:
  MaprtDetector(const SensingMaps& maps, const DetectorContext& ctx);

  const CMatrix& gram() const { return gram_; }
  CVector correlate(const CMatrix& y) const;
  double statistic(const CVector& corr) const;
  double statistic_of(const CMatrix& y) const { return statistic(correlate(y)); }
  CVector estimate(const CVector& corr) const;

 private:
  SensingMaps maps_;
  DetectorContext ctx_;
  CMatrix gram_;
  Eigen::LLT<CMatrix> ridge_llt_;
};

}  // namespace cfjcas
