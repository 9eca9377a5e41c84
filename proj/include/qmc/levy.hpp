#pragma once

#include <map>
#include <memory>
#include <variant>

#include <Eigen/Dense>

#include "qmc/brownian.hpp"

namespace qmc {

/// Gamma process: L_t ~ Gamma(shape t*gamma, scale lambda).
struct GammaProcess {
  double gamma;
  double lambda;
};

/// Variance gamma via subordination t -> theta G_t + sigma W(G_t) where G is
/// a gamma subordinator with unit mean per unit time (gamma * lambda = 1).
struct VarianceGamma {
  double subordinator_gamma;
  double subordinator_lambda;
  double theta;
  double sigma;
};

/// Normal inverse Gaussian with alpha > |beta| >= 0, delta > 0 (location 0).
/// Closed under convolution: the increment over dt is NIG(alpha, beta, delta*dt).
struct NormalInverseGaussian {
  double alpha;
  double beta;
  double delta;
};

using LevyFamily = std::variant<GammaProcess, VarianceGamma, NormalInverseGaussian>;

void validate_family(const LevyFamily& family);

/// How many input coordinates one path on d nodes consumes
/// (2d for variance gamma, d otherwise).
Eigen::Index levy_input_dim(const LevyFamily& family, Eigen::Index d);

/// Modified Bessel function K_1 by quadrature of the integral representation.
double bessel_k1(double x);

double nig_pdf(double x, const NormalInverseGaussian& p);

/// Numeric inverse of the increment CDF F_dt for one family and time step.
/// NIG inverses are cached on a monotone cubic spline over a normal-score
/// grid; gamma increments invert directly through the incomplete gamma.
class IncrementInverter {
 public:
  IncrementInverter(const LevyFamily& family, double dt);

  double inv(double u) const;
  double cdf(double x) const;
  double dt() const { return dt_; }

 private:
  LevyFamily family_;
  double dt_;
  // NIG spline data (empty for closed-form families)
  Eigen::VectorXd knots_z_, knots_x_, knots_slope_;
  double z_lo_ = 0.0, z_hi_ = 0.0;
};

/// F_dt^{-1}(u) for the increment over dt. Variance gamma throws (increments
/// are sampled by subordination, not by a single inversion).
double increment_inv(const LevyFamily& family, double dt, double u);

/// Path sampler with eagerly built per-step inverters; immutable afterwards.
class LevyPathSampler {
 public:
  LevyPathSampler(LevyFamily family, TimeGrid grid);

  const TimeGrid& grid() const { return grid_; }
  Eigen::Index input_dim() const;

  /// Forward construction from uniforms: L_{t_k} = L_{t_{k-1}} + F^{-1}(u_k).
  DiscretePath forward(const Eigen::VectorXd& u) const;

  /// Orthogonal-transform construction: y = V x, increments F^{-1}(Phi(y_k)).
  DiscretePath transformed(const NormalTransform& v, const Eigen::VectorXd& x) const;

 private:
  DiscretePath from_normal_scores(const Eigen::VectorXd& y) const;

  LevyFamily family_;
  TimeGrid grid_;
  std::vector<std::shared_ptr<const IncrementInverter>> inverters_;  // per step
};

DiscretePath levy_forward_path(const LevyFamily& family, const TimeGrid& grid,
                               const Eigen::VectorXd& u);

DiscretePath levy_transformed_path(const LevyFamily& family, const TimeGrid& grid,
                                   const Eigen::MatrixXd& v, const Eigen::VectorXd& x);

}  // namespace qmc
