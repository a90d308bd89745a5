#pragma once

#include <Eigen/Dense>

#include "bkt/covariance.hpp"
#include "bkt/likelihood.hpp"
#include "bkt/types.hpp"

// Brute-force reference implementations. Test and `bkt check` use only;
// everything here is deliberately naive.
namespace bkt::oracle {

// Hard cap on the dense assembly size, ns <= kMaxDenseSize.
inline constexpr Eigen::Index kMaxDenseSize = 4096;

struct DenseW {
  Eigen::MatrixXd w;  // ns x ns, 1 1^T kron R + I_n kron Sigma
};

DenseW dense_w(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& r,
               Eigen::Index n);

double dense_gauss_logpdf(const Eigen::VectorXd& v, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov);

// Column-stacked vectorization of an s x n matrix.
Eigen::VectorXd vec(const Eigen::MatrixXd& g);

// Explicit s x 2D Jacobian of (x, y) -> g(x, y) for one pair, assembled
// entry by entry from the closed-form kernel derivatives.
Eigen::MatrixXd dense_jacobian(const Eigen::Ref<const Eigen::VectorXd>& xi,
                               const Eigen::Ref<const Eigen::VectorXd>& yi,
                               const EvalPoints& z, KernelParam p);

// Same Jacobian by central finite differences of g with step h.
Eigen::MatrixXd fd_jacobian(const Eigen::Ref<const Eigen::VectorXd>& xi,
                            const Eigen::Ref<const Eigen::VectorXd>& yi,
                            const EvalPoints& z, KernelParam p,
                            double h = 1e-6);

// Sum over pairs of (1/2) log det(J^T J) using the dense Jacobians.
double dense_total_log_vol(const PairedDataset& data, const EvalPoints& z,
                           KernelParam p);

// Dense evaluations of the two marginal pseudolikelihoods:
//   null: N(vec(G); 0, I_n kron Sigma) * prod vol
//   alt:  N(vec(G); 0, 1 1^T kron R + I_n kron Sigma) * prod vol
double naive_loglik_null(const PairedDataset& data, const EvalPoints& z,
                         KernelParam p, const cov::CovEstimate& sigma);

double naive_loglik_alt(const PairedDataset& data, const EvalPoints& z,
                        KernelParam p, const cov::CovEstimate& sigma,
                        const lik::RMatrix& r);

// Adaptive-quadrature evaluation of the 1-D convolution
// integral k_theta(a, u) k_theta(u, b) du over the real line.
double convolution_quadrature(double a, double b, KernelParam p,
                              double rel_tol = 1e-9);

}  // namespace bkt::oracle
