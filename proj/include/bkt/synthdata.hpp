#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "bkt/types.hpp"

namespace bkt::synth {

enum class Family {
  Gauss1d,
  Laplace1d,
  CopulaCorr,
  Mixture1d,
  Gauss2dRot,
  Blobs2x2,
  Padded,
};

Family family_from_string(const std::string& name);
const char* to_string(Family f);

struct MixtureComponent {
  double weight = 0.5;
  double mean = 0.0;
  double sd = 1.0;
};

// Family-specific parameters; only the fields a family reads are relevant.
struct ScenarioParams {
  // gauss1d: x ~ N(x_mean, x_sd^2), y ~ N(y_mean, y_sd^2)
  double x_mean = 0.0, x_sd = 1.0;
  double y_mean = 0.0, y_sd = 1.0;
  // laplace1d / copula_corr: x ~ N(0,1), y ~ Laplace(y_loc, y_scale)
  double y_loc = 0.0, y_scale = 1.0;
  double rho = 0.5;  // Gaussian copula correlation
  // mixture1d
  std::vector<MixtureComponent> x_mix;
  std::vector<MixtureComponent> y_mix;
  // gauss2d_rot / blobs2x2: y covariance Q S_eps Q^T with Q a rotation
  double eps = 1.0;
  double angle = M_PI / 2.0;
  Eigen::Vector2d y_mean2{10.0, 10.0};
  // padded: standard-normal dimensions appended to the blobs2x2 base
  Eigen::Index pad_dims = 0;
};

struct ScenarioSpec {
  Family family = Family::Gauss1d;
  ScenarioParams params;
  Eigen::Index n = 100;
  std::uint64_t seed = 0;
};

// Rotated-diagonal covariance Q S_eps Q^T.
Eigen::Matrix2d rotated_covariance(double eps, double angle);

// Draws n paired observations for the scenario; deterministic per seed.
PairedDataset gen(const ScenarioSpec& spec);

struct Moments {
  Eigen::VectorXd x_mean, x_var;  // per column, sample variance
  Eigen::VectorXd y_mean, y_var;
};

Moments empirical_moments(const PairedDataset& data);

// Analytic marginal CDFs used by the generator self-checks.
double mixture_cdf(double t, const std::vector<MixtureComponent>& mix);

}  // namespace bkt::synth
