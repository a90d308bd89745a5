#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "bkt/types.hpp"

namespace bkt::kernel {

// Which gram to assemble: the base RBF kernel k or its self-convolution r.
enum class GramKind { Kernel, Convolution };

// k_theta(a, b) = exp(-|a - b|^2 / (2 theta)).
double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b,
                       KernelParam p);

// Self-convolution of k_theta under the Lebesgue measure on R^D:
// r_theta(a, b) = pi^{D/2} theta^{D/2} exp(-|a - b|^2 / (4 theta)).
double r_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b, KernelParam p);

// m x p matrix with entry (i, j) the chosen kernel on rows A_i, B_j.
Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& a,
                     const Eigen::Ref<const Eigen::MatrixXd>& b, KernelParam p,
                     GramKind kind);

// theta = median over all unordered pairs of the pooled {x_1..x_n, y_1..y_n}
// of |a - b|^2 / 2, so that the kernel at the median pair equals exp(-1/2).
KernelParam median_heuristic(const PairedDataset& data);

// Draws s/2 rows from x and s/2 rows from y, both without replacement.
// Deterministic for a given seed.
EvalPoints subsample_eval_points(const PairedDataset& data, Eigen::Index s,
                                 std::uint64_t seed);

// Witness vector and gram blocks for one theta:
//   Delta_j = (1/n) sum_i [k(x_i, z_j) - k(y_i, z_j)],  G = K_zx - K_zy.
WitnessState witness_state(const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Eigen::Ref<const Eigen::MatrixXd>& y,
                           const EvalPoints& z, KernelParam p);

WitnessState witness_state(const PairedDataset& data, const EvalPoints& z,
                           KernelParam p);

}  // namespace bkt::kernel
