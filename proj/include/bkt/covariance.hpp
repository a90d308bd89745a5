#pragma once

#include <Eigen/Dense>

#include "bkt/types.hpp"

namespace bkt::cov {

enum class SigmaMethod { Method1 = 1, Method2 = 2 };

inline const char* to_string(SigmaMethod m) {
  return m == SigmaMethod::Method1 ? "method1" : "method2";
}

// Estimated noise covariance Sigma of the per-pair feature difference
// g(X, Y). The witness vector Delta has covariance sigma / n.
struct CovEstimate {
  Eigen::MatrixXd sigma;  // s x s, symmetric, PSD after repair
  SigmaMethod method = SigmaMethod::Method2;
  double ridge_added = 0.0;
};

// Appendix-style direct estimate of n * Cov(Delta), assuming X and Y are
// independent (cross terms dropped):
//   Sigma = (1/n) (K_zx H K_xz + K_zy H K_yz),  H = I - (1/n) 1 1^T.
CovEstimate sigma_method1(const WitnessState& state, Eigen::Index n);

// Centered second moment of g(X, Y); no independence assumption:
//   Sigma = (1/n) G H G^T.
CovEstimate sigma_method2(const WitnessState& state, Eigen::Index n);

// Adds a ridge eps * I with eps = max(0, -lambda_min) + 1e-8 * (trace / s)
// so that a Cholesky factorization succeeds; the ridge is recorded.
// For matrices with non-positive trace the relative scale falls back to 1.
CovEstimate psd_repair(const Eigen::MatrixXd& sigma,
                       SigmaMethod method = SigmaMethod::Method2);

// Estimate by the chosen method, then repair only if the raw estimate fails
// a Cholesky factorization (the estimators are PSD by construction up to
// rounding and rank deficiency).
CovEstimate estimate_sigma(const WitnessState& state, Eigen::Index n,
                           SigmaMethod method);

}  // namespace bkt::cov
