#include <doctest.h>

#include <cmath>
#include <set>

#include "bkt/kernel.hpp"
#include "bkt/rng.hpp"

using namespace bkt;

namespace {

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              RandomStream& rs, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = scale * rs.normal();
    }
  }
  return m;
}

}  // namespace

TEST_CASE("gaussian kernel closed form") {
  const KernelParam one(1.0);
  CHECK(kernel::gaussian_kernel(vec1(0.7), vec1(0.7), one) == 1.0);

  // exp(-1) at distance 1 with theta = 0.5
  CHECK(kernel::gaussian_kernel(vec1(1.0), vec1(0.0), KernelParam(0.5)) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  Eigen::VectorXd a(2), b(2);
  a << 1.0, 1.0;
  b << 0.0, 0.0;
  CHECK(kernel::gaussian_kernel(a, b, one) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("gaussian kernel errors") {
  Eigen::VectorXd a(2), b(3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(kernel::gaussian_kernel(a, b, KernelParam(1.0)), InputError);
  CHECK_THROWS_AS(KernelParam(0.0), ConfigError);
  CHECK_THROWS_AS(KernelParam(-2.0), ConfigError);
  CHECK_THROWS_AS(KernelParam(std::numeric_limits<double>::infinity()),
                  ConfigError);
}

TEST_CASE("gaussian kernel symmetry and range") {
  RandomStream rs(1);
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd a = random_matrix(3, 1, rs).col(0);
    const Eigen::VectorXd b = random_matrix(3, 1, rs).col(0);
    const KernelParam p(0.05 + 5.0 * rs.uniform());
    const double kab = kernel::gaussian_kernel(a, b, p);
    CHECK(kab == kernel::gaussian_kernel(b, a, p));
    CHECK(kab > 0.0);
    CHECK(kab <= 1.0);
  }
}

TEST_CASE("r kernel closed form") {
  const KernelParam one(1.0);
  CHECK(kernel::r_kernel(vec1(0.3), vec1(0.3), one) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-14));
  CHECK(kernel::r_kernel(vec1(1.0), vec1(0.0), one) ==
        doctest::Approx(std::sqrt(M_PI) * std::exp(-0.25)).epsilon(1e-14));

  Eigen::VectorXd a(2);
  a << 0.4, -0.2;
  CHECK(kernel::r_kernel(a, a, one) == doctest::Approx(M_PI).epsilon(1e-14));
}

TEST_CASE("gram closed forms") {
  Eigen::MatrixXd one_row(1, 2);
  one_row << 0.5, -1.0;
  const auto g1 =
      kernel::gram(one_row, one_row, KernelParam(2.0), kernel::GramKind::Kernel);
  REQUIRE(g1.rows() == 1);
  CHECK(g1(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  Eigen::MatrixXd a(2, 1), b(1, 1);
  a << 0.0, 1.0;
  b << 0.0;
  const auto g2 = kernel::gram(a, b, KernelParam(0.5), kernel::GramKind::Kernel);
  CHECK(g2(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g2(1, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  // repeated point: constant convolution gram
  Eigen::MatrixXd rep(3, 1);
  rep << 0.7, 0.7, 0.7;
  const auto g3 =
      kernel::gram(rep, rep, KernelParam(1.0), kernel::GramKind::Convolution);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(g3(i, j) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-14));
    }
  }

  CHECK_THROWS_AS(
      kernel::gram(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 3),
                   KernelParam(1.0), kernel::GramKind::Kernel),
      InputError);
}

TEST_CASE("gram matrices are PSD up to rounding") {
  RandomStream rs(7);
  for (int it = 0; it < 20; ++it) {
    const Eigen::Index rows = 2 + static_cast<Eigen::Index>(rs.bounded(19));
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rs.bounded(3));
    const Eigen::MatrixXd a = random_matrix(rows, dim, rs, 2.0);
    const KernelParam p(0.1 + 3.0 * rs.uniform());
    for (const auto kind :
         {kernel::GramKind::Kernel, kernel::GramKind::Convolution}) {
      const Eigen::MatrixXd g = kernel::gram(a, a, p, kind);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8 * g.trace());
    }
  }
}

TEST_CASE("median heuristic hand cases") {
  // pooled {0, 1, 2, 2}: halved sq dists {0.5,2,2,0.5,0.5,0}
  // sorted {0,.5,.5,.5,2,2} -> median 0.5
  Eigen::MatrixXd x(2, 1), y(2, 1);
  x << 0.0, 1.0;
  y << 2.0, 2.0;
  const auto data = PairedDataset::make(x, y);
  CHECK(kernel::median_heuristic(data).theta() ==
        doctest::Approx(0.5).epsilon(1e-15));

  // pooled {0,0,2,2}: halved sq dists {0,2,2,2,2,0} -> median 2
  Eigen::MatrixXd x2(2, 1), y2(2, 1);
  x2 << 0.0, 0.0;
  y2 << 2.0, 2.0;
  CHECK(kernel::median_heuristic(PairedDataset::make(x2, y2)).theta() ==
        doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("median heuristic degenerate data") {
  Eigen::MatrixXd x(3, 1), y(3, 1);
  x.setConstant(1.5);
  y.setConstant(1.5);
  CHECK_THROWS_AS(kernel::median_heuristic(PairedDataset::make(x, y)),
                  InputError);
}

TEST_CASE("median heuristic scale consistency") {
  RandomStream rs(3);
  Eigen::MatrixXd x = random_matrix(8, 2, rs);
  Eigen::MatrixXd y = random_matrix(8, 2, rs);
  const auto base = kernel::median_heuristic(PairedDataset::make(x, y));
  for (const double c : {2.0, 0.5, 10.0}) {
    const auto scaled =
        kernel::median_heuristic(PairedDataset::make(c * x, c * y));
    CHECK(scaled.theta() ==
          doctest::Approx(c * c * base.theta()).epsilon(1e-12));
  }
}

TEST_CASE("subsample eval points") {
  RandomStream rs(5);
  const Eigen::MatrixXd x = random_matrix(100, 2, rs);
  const Eigen::MatrixXd y = random_matrix(100, 2, rs);
  const auto data = PairedDataset::make(x, y);

  SUBCASE("full coverage at s = 2n") {
    Eigen::MatrixXd xs(3, 1), ys(3, 1);
    xs << 1, 2, 3;
    ys << 4, 5, 6;
    const auto small = PairedDataset::make(xs, ys);
    const auto z = kernel::subsample_eval_points(small, 6, 11);
    std::multiset<double> got, want{1, 2, 3, 4, 5, 6};
    for (Eigen::Index i = 0; i < 6; ++i) {
      got.insert(z.z(i, 0));
    }
    CHECK(got == want);
  }

  SUBCASE("determinism") {
    const auto a = kernel::subsample_eval_points(data, 10, 42);
    const auto b = kernel::subsample_eval_points(data, 10, 42);
    CHECK(a.z == b.z);
    CHECK(a.source_indices == b.source_indices);
  }

  SUBCASE("half from each sample, distinct indices") {
    const auto z = kernel::subsample_eval_points(data, 4, 7);
    REQUIRE(z.source_indices.size() == 4);
    std::set<Eigen::Index> x_idx(z.source_indices.begin(),
                                 z.source_indices.begin() + 2);
    std::set<Eigen::Index> y_idx(z.source_indices.begin() + 2,
                                 z.source_indices.end());
    CHECK(x_idx.size() == 2);
    CHECK(y_idx.size() == 2);
    for (const auto i : x_idx) {
      CHECK(i < 100);
    }
    for (const auto i : y_idx) {
      CHECK(i >= 100);
    }
  }

  SUBCASE("configuration errors") {
    CHECK_THROWS_AS(kernel::subsample_eval_points(data, 5, 1), ConfigError);
    CHECK_THROWS_AS(kernel::subsample_eval_points(data, 202, 1), ConfigError);
  }
}

TEST_CASE("witness state") {
  RandomStream rs(9);
  const KernelParam p(0.8);

  SUBCASE("identical samples give zero witness") {
    const Eigen::MatrixXd x = random_matrix(10, 2, rs);
    EvalPoints z{random_matrix(4, 2, rs), {}};
    const auto st = kernel::witness_state(x, x, z, p);
    CHECK(st.delta.isZero(0.0));
    CHECK(st.g.isZero(0.0));
  }

  SUBCASE("single pair closed form") {
    Eigen::MatrixXd x(1, 1), y(1, 1);
    x << 0.0;
    y << 1.0;
    EvalPoints z{Eigen::MatrixXd::Zero(1, 1), {}};
    const auto st = kernel::witness_state(x, y, z, KernelParam(0.5));
    REQUIRE(st.delta.size() == 1);
    CHECK(st.delta(0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  }

  SUBCASE("delta is the row mean of g; swapping samples negates exactly") {
    const Eigen::MatrixXd x = random_matrix(12, 2, rs);
    const Eigen::MatrixXd y = random_matrix(12, 2, rs);
    EvalPoints z{random_matrix(5, 2, rs), {}};
    const auto st = kernel::witness_state(x, y, z, p);
    CHECK((st.delta - st.g.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(st.g == (st.k_zx - st.k_zy));

    const auto sw = kernel::witness_state(y, x, z, p);
    CHECK(sw.g == (-st.g).eval());
    CHECK(sw.delta == (-st.delta).eval());
  }
}
