#include "bkt/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bkt/rng.hpp"

namespace bkt::kernel {

namespace {

void check_same_dim(Eigen::Index da, Eigen::Index db) {
  if (da != db) {
    throw InputError("kernel arguments have mismatched dimensions: " +
                     std::to_string(da) + " vs " + std::to_string(db));
  }
}

// Pairwise squared distances, clamped at zero against rounding.
Eigen::MatrixXd squared_distances(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                  const Eigen::Ref<const Eigen::MatrixXd>& b) {
  check_same_dim(a.cols(), b.cols());
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  return d2.cwiseMax(0.0);
}

}  // namespace

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b,
                       KernelParam p) {
  check_same_dim(a.size(), b.size());
  return std::exp(-(a - b).squaredNorm() / (2.0 * p.theta()));
}

double r_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b, KernelParam p) {
  check_same_dim(a.size(), b.size());
  const double d = static_cast<double>(a.size());
  return std::pow(M_PI * p.theta(), 0.5 * d) *
         std::exp(-(a - b).squaredNorm() / (4.0 * p.theta()));
}

Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& a,
                     const Eigen::Ref<const Eigen::MatrixXd>& b, KernelParam p,
                     GramKind kind) {
  Eigen::MatrixXd d2 = squared_distances(a, b);
  if (kind == GramKind::Kernel) {
    return (-d2.array() / (2.0 * p.theta())).exp();
  }
  const double scale = std::pow(M_PI * p.theta(), 0.5 * static_cast<double>(a.cols()));
  return scale * (-d2.array() / (4.0 * p.theta())).exp();
}

KernelParam median_heuristic(const PairedDataset& data) {
  const Eigen::Index n = data.n();
  Eigen::MatrixXd pooled(2 * n, data.dim());
  pooled << data.x, data.y;

  const Eigen::Index m = pooled.rows();
  std::vector<double> half_d2;
  half_d2.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      half_d2.push_back(0.5 * (pooled.row(i) - pooled.row(j)).squaredNorm());
    }
  }

  const std::size_t k = half_d2.size();
  const std::size_t mid = k / 2;
  std::nth_element(half_d2.begin(), half_d2.begin() + mid, half_d2.end());
  double med = half_d2[mid];
  if (k % 2 == 0) {
    // even count: average the two middle order statistics
    const double lo = *std::max_element(half_d2.begin(), half_d2.begin() + mid);
    med = 0.5 * (lo + med);
  }
  if (!(med > 0.0)) {
    throw InputError("median heuristic undefined: pooled points are degenerate "
                     "(median pairwise distance is zero)");
  }
  return KernelParam(med);
}

namespace {

// First k entries of a seeded partial Fisher-Yates shuffle of 0..n-1.
std::vector<Eigen::Index> draw_without_replacement(Eigen::Index n,
                                                   Eigen::Index k,
                                                   RandomStream& rs) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rs.bounded(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

EvalPoints subsample_eval_points(const PairedDataset& data, Eigen::Index s,
                                 std::uint64_t seed) {
  if (s < 2 || s % 2 != 0) {
    throw ConfigError("evaluation point count s must be even and >= 2, got " +
                      std::to_string(s));
  }
  const Eigen::Index half = s / 2;
  if (half > data.n()) {
    throw ConfigError("cannot subsample " + std::to_string(half) +
                      " evaluation points per sample from n = " +
                      std::to_string(data.n()));
  }

  RandomStream rs(seed);
  const auto ix = draw_without_replacement(data.n(), half, rs);
  const auto iy = draw_without_replacement(data.n(), half, rs);

  EvalPoints out;
  out.z.resize(s, data.dim());
  out.source_indices.reserve(static_cast<std::size_t>(s));
  for (Eigen::Index j = 0; j < half; ++j) {
    out.z.row(j) = data.x.row(ix[static_cast<std::size_t>(j)]);
    out.source_indices.push_back(ix[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index j = 0; j < half; ++j) {
    out.z.row(half + j) = data.y.row(iy[static_cast<std::size_t>(j)]);
    out.source_indices.push_back(data.n() + iy[static_cast<std::size_t>(j)]);
  }
  return out;
}

WitnessState witness_state(const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Eigen::Ref<const Eigen::MatrixXd>& y,
                           const EvalPoints& z, KernelParam p) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw InputError("witness state requires x and y of identical shape");
  }
  check_same_dim(x.cols(), z.dim());

  WitnessState st;
  st.k_zx = gram(z.z, x, p, GramKind::Kernel);
  st.k_zy = gram(z.z, y, p, GramKind::Kernel);
  st.g = st.k_zx - st.k_zy;
  st.delta = st.g.rowwise().mean();
  return st;
}

WitnessState witness_state(const PairedDataset& data, const EvalPoints& z,
                           KernelParam p) {
  return witness_state(data.x, data.y, z, p);
}

}  // namespace bkt::kernel
