#include "bkt/covariance.hpp"

#include <cmath>

namespace bkt::cov {

namespace {

void check_n(const WitnessState& state, Eigen::Index n) {
  if (n < 2) {
    throw InputError("covariance estimation requires n >= 2");
  }
  if (state.n() != n) {
    throw InputError("witness state has " + std::to_string(state.n()) +
                     " columns but n = " + std::to_string(n));
  }
}

// (1/n) * C C^T with exact symmetry.
Eigen::MatrixXd scaled_outer(const Eigen::MatrixXd& c, Eigen::Index n) {
  Eigen::MatrixXd s = (c * c.transpose()) / static_cast<double>(n);
  return 0.5 * (s + s.transpose());
}

// Centers each row across the n columns, i.e. right-multiplication by H.
Eigen::MatrixXd center_columns(const Eigen::MatrixXd& m) {
  return m.colwise() - m.rowwise().mean();
}

}  // namespace

CovEstimate sigma_method1(const WitnessState& state, Eigen::Index n) {
  check_n(state, n);
  // K H K^T = (K H)(K H)^T since H is symmetric idempotent.
  const Eigen::MatrixXd cx = center_columns(state.k_zx);
  const Eigen::MatrixXd cy = center_columns(state.k_zy);
  CovEstimate est;
  est.sigma = scaled_outer(cx, n) + scaled_outer(cy, n);
  est.method = SigmaMethod::Method1;
  return est;
}

CovEstimate sigma_method2(const WitnessState& state, Eigen::Index n) {
  check_n(state, n);
  CovEstimate est;
  est.sigma = scaled_outer(center_columns(state.g), n);
  est.method = SigmaMethod::Method2;
  return est;
}

CovEstimate psd_repair(const Eigen::MatrixXd& sigma, SigmaMethod method) {
  if (sigma.rows() != sigma.cols()) {
    throw InputError("psd_repair requires a square matrix");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw InputError("psd_repair requires a symmetric matrix");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed in psd_repair");
  }
  const double lambda_min = es.eigenvalues().minCoeff();
  const double s = static_cast<double>(sigma.rows());
  double scale = sigma.trace() / s;
  if (!(scale > 0.0)) {
    scale = 1.0;
  }
  const double ridge = std::max(0.0, -lambda_min) + 1e-8 * scale;

  CovEstimate est;
  est.sigma = sigma;
  est.sigma.diagonal().array() += ridge;
  est.method = method;
  est.ridge_added = ridge;
  return est;
}

CovEstimate estimate_sigma(const WitnessState& state, Eigen::Index n,
                           SigmaMethod method) {
  CovEstimate est = method == SigmaMethod::Method1 ? sigma_method1(state, n)
                                                   : sigma_method2(state, n);
  Eigen::LLT<Eigen::MatrixXd> llt(est.sigma);
  if (llt.info() != Eigen::Success) {
    est = psd_repair(est.sigma, method);
  }
  return est;
}

}  // namespace bkt::cov
