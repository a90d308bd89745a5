#include <doctest.h>

#include <cmath>

#include "bkt/covariance.hpp"
#include "bkt/kernel.hpp"
#include "bkt/rng.hpp"

using namespace bkt;

namespace {

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

WitnessState state_for(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       const Eigen::MatrixXd& zpts, KernelParam p) {
  EvalPoints z{zpts, {}};
  return kernel::witness_state(x, y, z, p);
}

double lambda_min(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("method 1 annihilates constant samples") {
  Eigen::MatrixXd x(4, 1), y(4, 1);
  x.setConstant(0.3);
  y.setConstant(-1.2);
  RandomStream rs(2);
  const auto st = state_for(x, y, random_matrix(3, 1, rs), KernelParam(1.0));
  const auto est = cov::sigma_method1(st, 4);
  CHECK(est.sigma.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(est.method == cov::SigmaMethod::Method1);
}

TEST_CASE("method 1 hand instance") {
  // x = {0, 1}, y = {0, 0}, z = {0}, theta = 0.5:
  // K_zx = [1, e^-1], K_zy = [1, 1]
  // Sigma = (1/2)(K_zx H K_xz + K_zy H K_yz) = (1 - e^-1)^2 / 4
  Eigen::MatrixXd x(2, 1), y(2, 1), z(1, 1);
  x << 0.0, 1.0;
  y << 0.0, 0.0;
  z << 0.0;
  const auto st = state_for(x, y, z, KernelParam(0.5));
  const double expected = std::pow(1.0 - std::exp(-1.0), 2) / 4.0;
  CHECK(cov::sigma_method1(st, 2).sigma(0, 0) ==
        doctest::Approx(expected).epsilon(1e-13));
  // with constant y the centered y-part vanishes and method 2 agrees
  CHECK(cov::sigma_method2(st, 2).sigma(0, 0) ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("method 2 basics") {
  RandomStream rs(4);
  const Eigen::MatrixXd x = random_matrix(6, 2, rs);
  const Eigen::MatrixXd zp = random_matrix(3, 2, rs);

  SUBCASE("identical samples give zero covariance") {
    const auto st = state_for(x, x, zp, KernelParam(1.0));
    CHECK(cov::sigma_method2(st, 6).sigma.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("scalar centered second moment") {
    Eigen::MatrixXd xs(2, 1), ys(2, 1), z(1, 1);
    xs << 0.0, 1.0;
    ys << 0.5, -0.5;
    z << 0.2;
    const KernelParam p(0.7);
    const auto st = state_for(xs, ys, z, p);
    const double g1 = st.g(0, 0);
    const double g2 = st.g(0, 1);
    const double mean = 0.5 * (g1 + g2);
    const double expected =
        0.5 * ((g1 - mean) * (g1 - mean) + (g2 - mean) * (g2 - mean));
    CHECK(cov::sigma_method2(st, 2).sigma(0, 0) ==
          doctest::Approx(expected).epsilon(1e-13));
  }

  SUBCASE("sign of g does not matter") {
    const Eigen::MatrixXd y = random_matrix(6, 2, rs);
    const auto st = state_for(x, y, zp, KernelParam(1.0));
    const auto sw = state_for(y, x, zp, KernelParam(1.0));
    CHECK(cov::sigma_method2(st, 6).sigma == cov::sigma_method2(sw, 6).sigma);
  }
}

TEST_CASE("method 2 is PSD without repair") {
  RandomStream rs(6);
  for (int it = 0; it < 30; ++it) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rs.bounded(12));
    const Eigen::Index s = 1 + static_cast<Eigen::Index>(rs.bounded(8));
    const auto st = state_for(random_matrix(n, 1, rs), random_matrix(n, 1, rs),
                              random_matrix(s, 1, rs),
                              KernelParam(0.2 + 2.0 * rs.uniform()));
    const auto est = cov::sigma_method2(st, n);
    CHECK(est.sigma.isApprox(est.sigma.transpose(), 1e-12));
    CHECK(lambda_min(est.sigma) >= -1e-10 * std::max(est.sigma.trace(), 1e-30));
  }
}

TEST_CASE("methods agree under independence as n grows") {
  // Fixed-seed standard-normal data: relative Frobenius distance between
  // the two estimates shrinks monotonically over n = 100, 1000, 10000.
  RandomStream zs(17);
  const Eigen::MatrixXd zp = random_matrix(6, 1, zs);
  const KernelParam p(1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (const Eigen::Index n : {100, 1000, 10000}) {
    RandomStream rs(55);
    const auto st =
        state_for(random_matrix(n, 1, rs), random_matrix(n, 1, rs), zp, p);
    const auto m1 = cov::sigma_method1(st, n);
    const auto m2 = cov::sigma_method2(st, n);
    const double rel = (m1.sigma - m2.sigma).norm() / m2.sigma.norm();
    CHECK(rel < prev);
    prev = rel;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("psd repair") {
  SUBCASE("identity gains the relative ridge") {
    const auto est = cov::psd_repair(Eigen::MatrixXd::Identity(3, 3));
    CHECK(est.ridge_added == doctest::Approx(1e-8).epsilon(1e-12));
    CHECK(est.sigma(0, 0) == doctest::Approx(1.0 + 1e-8).epsilon(1e-12));
    CHECK(est.sigma(0, 1) == 0.0);
  }

  SUBCASE("rank-deficient centered outer product becomes positive definite") {
    RandomStream rs(8);
    const Eigen::Index n = 3;
    const Eigen::Index s = 6;  // s > n forces rank deficiency
    const auto st = state_for(random_matrix(n, 1, rs), random_matrix(n, 1, rs),
                              random_matrix(s, 1, rs), KernelParam(1.0));
    const auto raw = cov::sigma_method2(st, n);
    const auto fixed = cov::psd_repair(raw.sigma, raw.method);
    CHECK(lambda_min(fixed.sigma) > 0.0);
    CHECK(fixed.ridge_added > 0.0);
  }

  SUBCASE("explicit negative eigenvalue") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
    m(0, 0) = -0.1;
    const auto fixed = cov::psd_repair(m);
    const double floor = 1e-8 * m.trace() / 4.0;
    CHECK(lambda_min(fixed.sigma) >= doctest::Approx(floor).epsilon(1e-6));
    CHECK(fixed.ridge_added == doctest::Approx(0.1 + floor).epsilon(1e-10));
  }

  SUBCASE("non-symmetric input is rejected") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(cov::psd_repair(m), InputError);
    CHECK_THROWS_AS(cov::psd_repair(Eigen::MatrixXd::Zero(2, 3)), InputError);
  }

  SUBCASE("zero matrix falls back to the unit scale") {
    const auto fixed = cov::psd_repair(Eigen::MatrixXd::Zero(2, 2));
    CHECK(fixed.ridge_added == doctest::Approx(1e-8));
    CHECK(lambda_min(fixed.sigma) > 0.0);
  }
}

TEST_CASE("estimate_sigma repairs only on failure") {
  RandomStream rs(10);
  // healthy case: n >> s, no ridge needed
  const auto healthy =
      state_for(random_matrix(50, 1, rs), random_matrix(50, 1, rs),
                random_matrix(3, 1, rs), KernelParam(1.0));
  CHECK(cov::estimate_sigma(healthy, 50, cov::SigmaMethod::Method2)
            .ridge_added == 0.0);

  // rank-deficient case: ridge recorded
  const auto thin =
      state_for(random_matrix(3, 1, rs), random_matrix(3, 1, rs),
                random_matrix(7, 1, rs), KernelParam(1.0));
  const auto est = cov::estimate_sigma(thin, 3, cov::SigmaMethod::Method2);
  CHECK(est.ridge_added > 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(est.sigma);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("covariance estimation requires n >= 2") {
  RandomStream rs(12);
  const auto st = state_for(random_matrix(1, 1, rs), random_matrix(1, 1, rs),
                            random_matrix(2, 1, rs), KernelParam(1.0));
  CHECK_THROWS_AS(cov::sigma_method1(st, 1), InputError);
  CHECK_THROWS_AS(cov::sigma_method2(st, 1), InputError);
}
