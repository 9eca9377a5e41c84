#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace qmc {

double normal_pdf(double x);
double normal_cdf(double x);

/// Inverse standard normal CDF on (0,1). Rational initial guess refined by
/// one Halley step against normal_cdf; |cdf(result) - u| stays below 1e-14
/// over [1e-12, 1 - 1e-12]. Arguments outside (0,1) throw.
double normal_inv_cdf(double u);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

struct GammaParams {
  double shape;  // > 0
  double scale;  // > 0
};

double gamma_pdf(double x, const GammaParams& p);
double gamma_cdf(double x, const GammaParams& p);

/// Inverse gamma CDF, bracketed Newton on gamma_p with bisection fallback.
/// cdf(result) = u within 1e-9. u outside (0,1) throws.
double gamma_inv_cdf(double u, const GammaParams& p);

/// One Box-Muller pair: R = sqrt(-2 log(1-u)), angle 2*pi*v.
std::pair<double, double> box_muller(double u, double v);

/// One Marsaglia-Bray pair. Consumes uniforms from the source strictly in
/// pairs until a pair lands inside the unit disc.
template <typename UniformSource>
std::pair<double, double> marsaglia_bray(UniformSource&& next_uniform) {
  for (;;) {
    const double u1 = 2.0 * next_uniform() - 1.0;
    const double v1 = 2.0 * next_uniform() - 1.0;
    const double s = u1 * u1 + v1 * v1;
    if (s >= 1.0) continue;
    if (s == 0.0) return {0.0, 0.0};
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    return {u1 * factor, v1 * factor};
  }
}

/// A distribution given by its density, CDF and (optionally) inverse CDF.
struct Density {
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  std::function<double(double)> inv_cdf;  // empty when not invertible in closed form

  bool invertible() const { return static_cast<bool>(inv_cdf); }
};

Density normal_density(double mean = 0.0, double stddev = 1.0);
Density exponential_density(double rate);
Density gamma_density(const GammaParams& p);

/// Acceptance-rejection specification: target density f dominated by
/// c * proposal.pdf. The bound is validated on a finite grid at construction;
/// a violated bound throws.
struct RejectionSpec {
  std::function<double(double)> target_pdf;
  Density proposal;
  double bound;  // c

  RejectionSpec(std::function<double(double)> target, Density prop, double c,
                double grid_lo, double grid_hi, int grid_points = 10000);
};

struct RejectionSample {
  double value;
  std::int64_t pairs_consumed;
};

/// Draws proposal samples via inversion and accepts with probability
/// f(y) / (c g(y)). Consumes uniforms in (proposal, acceptance) pairs.
template <typename UniformSource>
RejectionSample acceptance_rejection(const RejectionSpec& spec, UniformSource&& next_uniform) {
  std::int64_t consumed = 0;
  for (;;) {
    const double uy = next_uniform();
    const double ua = next_uniform();
    ++consumed;
    const double y = spec.proposal.inv_cdf(uy);
    const double ratio = spec.target_pdf(y) / (spec.bound * spec.proposal.pdf(y));
    if (!std::isfinite(ratio)) throw std::runtime_error("acceptance_rejection: non-finite ratio");
    if (ua <= ratio) return {y, consumed};
  }
}

/// Importance-sampling estimate of E[h(X)] for X ~ target, drawing from the
/// proposal by inversion:  (1/N) sum h(Y) f(Y) / g(Y),  Y = G^{-1}(u).
double importance_estimate(const std::function<double(double)>& h, const Density& target,
                           const Density& proposal, const Eigen::VectorXd& points);

}  // namespace qmc
