#pragma once

#include <Eigen/Dense>

#include "bkt/types.hpp"

namespace bkt::jac {

// Per-pair blocks of J^T J where J = [J_x | J_y] is the s x 2D Jacobian of
// (x, y) -> g(x, y). With k(a, b) = exp(-|a - b|^2 / (2 theta)):
//   [Jx^T Jx]_uv =  (1/theta^2) sum_j k(x,z_j)^2 (x_u - z_ju)(x_v - z_jv)
//   [Jx^T Jy]_uv = -(1/theta^2) sum_j k(x,z_j) k(y,z_j) (x_u - z_ju)(y_v - z_jv)
// and Jy^T Jy mirrors the first with y-quantities.
struct JacobianBlocks {
  Eigen::MatrixXd jxtjx;  // D x D
  Eigen::MatrixXd jxtjy;  // D x D
  Eigen::MatrixXd jytjy;  // D x D

  Eigen::Index dim() const { return jxtjx.rows(); }
};

// What to do when J^T J is numerically singular: refuse, or clamp its
// eigenvalues at 1e-12 * trace (opt-in, changes the pseudolikelihood).
enum class DegeneratePolicy { Error, Clamp };

JacobianBlocks jacobian_gram(const Eigen::Ref<const Eigen::VectorXd>& xi,
                             const Eigen::Ref<const Eigen::VectorXd>& yi,
                             const EvalPoints& z, KernelParam p);

// The full 2D x 2D matrix J^T J assembled from the blocks.
Eigen::MatrixXd assemble(const JacobianBlocks& blocks);

// (1/2) log det(J^T J). Throws DegenerateGeometryError when the smallest
// eigenvalue does not clear 1e-12 * trace, unless the policy clamps.
double log_vol(const JacobianBlocks& blocks,
               DegeneratePolicy policy = DegeneratePolicy::Error);

// Sum of per-pair log volumes; summation order is fixed by pair index.
// Requires s >= 2D; errors carry the index of the offending pair.
double total_log_vol(const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::MatrixXd>& y,
                     const EvalPoints& z, KernelParam p,
                     DegeneratePolicy policy = DegeneratePolicy::Error);

double total_log_vol(const PairedDataset& data, const EvalPoints& z,
                     KernelParam p,
                     DegeneratePolicy policy = DegeneratePolicy::Error);

}  // namespace bkt::jac
