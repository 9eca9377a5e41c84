#include "qmc/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qmc {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrt2Pi = 2.5066282746310005024;

// Rational approximation of the inverse normal CDF (Acklam's coefficients).
double inv_cdf_guess(double u) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (u > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = u - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Continued fraction for the upper incomplete gamma (Lentz's method).
double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Series for the lower incomplete gamma.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_inv_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("normal_inv_cdf: u must be in (0,1)");
  // Reduce to the lower half: for u > 1/2 the complement 1 - u is exact
  // (Sterbenz), the refinement below keeps full precision there, and the
  // inverse becomes antisymmetric by construction.
  if (u > 0.5) return -normal_inv_cdf(1.0 - u);
  double x = inv_cdf_guess(u);
  // One Halley step against the forward CDF.
  const double e = normal_cdf(x) - u;
  const double q = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= q / (1.0 + 0.5 * x * q);
  return x;
}

double gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("gamma_p: shape must be positive");
  if (x <= 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_pdf(double x, const GammaParams& p) {
  if (p.shape <= 0.0 || p.scale <= 0.0)
    throw std::invalid_argument("gamma_pdf: parameters must be positive");
  if (x < 0.0) return 0.0;
  if (x == 0.0) return p.shape < 1.0 ? std::numeric_limits<double>::infinity()
                                     : (p.shape == 1.0 ? 1.0 / p.scale : 0.0);
  return std::exp((p.shape - 1.0) * std::log(x) - x / p.scale - std::lgamma(p.shape) -
                  p.shape * std::log(p.scale));
}

double gamma_cdf(double x, const GammaParams& p) {
  if (p.shape <= 0.0 || p.scale <= 0.0)
    throw std::invalid_argument("gamma_cdf: parameters must be positive");
  return gamma_p(p.shape, x / p.scale);
}

double gamma_inv_cdf(double u, const GammaParams& p) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gamma_inv_cdf: u must be in (0,1)");
  if (p.shape <= 0.0 || p.scale <= 0.0)
    throw std::invalid_argument("gamma_inv_cdf: parameters must be positive");
  const double a = p.shape;
  const double lgam = std::lgamma(a);

  // Wilson-Hilferty starting point, with a power-law fallback for the left
  // tail (exact leading order of P(a,x) ~ x^a / Gamma(a+1)).
  double x;
  {
    const double z = normal_inv_cdf(u);
    const double t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
    x = a * t * t * t;
    if (!(x > 0.0) || !std::isfinite(x)) {
      x = std::exp((std::log(u) + lgam + std::log(a)) / a);
    }
  }

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 300; ++it) {
    const double f = gamma_p(a, x) - u;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    if (std::fabs(f) < 1e-13 && it > 0) break;
    // Newton in log(x): handles the power-law region near zero for a < 1.
    // The log step is clamped so an overshoot stays recoverable.
    const double pdf = std::exp((a - 1.0) * std::log(x) - x - lgam);
    double next;
    if (pdf > 0.0 && std::isfinite(pdf)) {
      const double log_step = std::clamp(-f / (pdf * x), -5.0, 5.0);
      next = x * std::exp(log_step);
    } else {
      next = std::numeric_limits<double>::quiet_NaN();
    }
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : x * 2.0;
    }
    if (std::isfinite(hi) && hi - lo < 1e-15 * hi) break;
    x = next;
  }
  return x * p.scale;
}

std::pair<double, double> box_muller(double u, double v) {
  if (u < 0.0 || u >= 1.0) throw std::invalid_argument("box_muller: u must be in [0,1)");
  const double r = std::sqrt(-2.0 * std::log1p(-u));
  const double angle = 2.0 * std::numbers::pi * v;
  return {r * std::cos(angle), r * std::sin(angle)};
}

Density normal_density(double mean, double stddev) {
  if (stddev <= 0.0) throw std::invalid_argument("normal_density: stddev must be positive");
  return Density{
      [=](double x) { return normal_pdf((x - mean) / stddev) / stddev; },
      [=](double x) { return normal_cdf((x - mean) / stddev); },
      [=](double u) { return mean + stddev * normal_inv_cdf(u); },
  };
}

Density exponential_density(double rate) {
  if (rate <= 0.0) throw std::invalid_argument("exponential_density: rate must be positive");
  return Density{
      [=](double x) { return x < 0.0 ? 0.0 : rate * std::exp(-rate * x); },
      [=](double x) { return x < 0.0 ? 0.0 : -std::expm1(-rate * x); },
      [=](double u) { return -std::log1p(-u) / rate; },
  };
}

Density gamma_density(const GammaParams& p) {
  return Density{
      [=](double x) { return gamma_pdf(x, p); },
      [=](double x) { return gamma_cdf(x, p); },
      [=](double u) { return gamma_inv_cdf(u, p); },
  };
}

RejectionSpec::RejectionSpec(std::function<double(double)> target, Density prop, double c,
                             double grid_lo, double grid_hi, int grid_points)
    : target_pdf(std::move(target)), proposal(std::move(prop)), bound(c) {
  if (!(c > 0.0)) throw std::invalid_argument("RejectionSpec: bound must be positive");
  if (!proposal.invertible())
    throw std::invalid_argument("RejectionSpec: proposal must have an inverse CDF");
  const double step = (grid_hi - grid_lo) / grid_points;
  for (int i = 0; i <= grid_points; ++i) {
    const double x = grid_lo + i * step;
    const double f = target_pdf(x);
    const double g = proposal.pdf(x);
    if (f > c * g * (1.0 + 1e-12))
      throw std::invalid_argument("RejectionSpec: bound f <= c*g violated on grid");
  }
}

double importance_estimate(const std::function<double(double)>& h, const Density& target,
                           const Density& proposal, const Eigen::VectorXd& points) {
  if (!proposal.invertible())
    throw std::invalid_argument("importance_estimate: proposal must have an inverse CDF");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    const double y = proposal.inv_cdf(points[i]);
    const double g = proposal.pdf(y);
    const double fh = target.pdf(y) * h(y);
    if (g == 0.0) {
      if (fh != 0.0) throw std::runtime_error("importance_estimate: proposal density vanishes");
      continue;
    }
    sum += fh / g;
  }
  return sum / static_cast<double>(points.size());
}

}  // namespace qmc
