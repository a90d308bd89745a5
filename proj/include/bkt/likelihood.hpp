#pragma once

#include <Eigen/Dense>

#include <optional>

#include "bkt/covariance.hpp"
#include "bkt/jacobian.hpp"
#include "bkt/types.hpp"

namespace bkt::lik {

enum class LikPath { Naive, Efficient, Remark };

// Log marginal pseudolikelihood of the data given theta, with full
// normalizing constants so values are comparable across models.
struct LogLik {
  double value = 0.0;
  Hypothesis model = Hypothesis::H0;
  LikPath path = LikPath::Efficient;
};

// GP prior covariance at the evaluation points, [R]_ij = r_theta(z_i, z_j),
// ridge-repaired when the raw matrix fails a Cholesky factorization.
struct RMatrix {
  Eigen::MatrixXd m;
  double ridge_added = 0.0;
};

RMatrix r_matrix(const EvalPoints& z, KernelParam p);

// log det(1 1^T kron R + I_n kron Sigma) computed without assembling the
// ns x ns matrix:  log det(Sigma + n R) + (n - 1) log det(Sigma).
double kron_logdet(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& r,
                   Eigen::Index n);

// vec(G)^T W^{-1} vec(G) for the same W:
//   Tr((Sigma + nR)^{-1} G G^T + ((1/n) Sigma R^{-1} Sigma + Sigma)^{-1} G H G^T).
// The second inverse is applied as Sigma^{-1} - (Sigma + nR)^{-1}, the solve
// form of (Sigma + nR)^{-1} n R Sigma^{-1}, so R is never inverted.
double kron_quadform(const Eigen::MatrixXd& g, const Eigen::MatrixXd& sigma,
                     const Eigen::MatrixXd& r, Eigen::Index n);

// Same quadratic form when Sigma is the empirical covariance (1/n) G H G^T:
//   n Tr((G H G^T + n^2 R)^{-1} (G G^T + n^2 R)).  Requires n >= 2.
double remark_quadform(const Eigen::MatrixXd& g, const Eigen::MatrixXd& r,
                       Eigen::Index n);

// Efficient-path evaluations. The *_core variants take a precomputed witness
// state and total log volume; the dataset overloads compute them.
double loglik_null_core(const WitnessState& state, const cov::CovEstimate& sigma,
                        double total_log_vol, Eigen::Index n);

double loglik_alt_core(const WitnessState& state, const cov::CovEstimate& sigma,
                       const RMatrix& r, double total_log_vol, Eigen::Index n,
                       LikPath* path_used = nullptr,
                       std::optional<LikPath> force = std::nullopt);

LogLik loglik_null(const PairedDataset& data, const EvalPoints& z, KernelParam p,
                   const cov::CovEstimate& sigma,
                   jac::DegeneratePolicy policy = jac::DegeneratePolicy::Error);

LogLik loglik_alt(const PairedDataset& data, const EvalPoints& z, KernelParam p,
                  const cov::CovEstimate& sigma, const RMatrix& r,
                  jac::DegeneratePolicy policy = jac::DegeneratePolicy::Error,
                  std::optional<LikPath> force = std::nullopt);

}  // namespace bkt::lik
