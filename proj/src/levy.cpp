#include "qmc/levy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qmc/dist.hpp"

namespace qmc {

namespace {

// 16-point Gauss-Legendre nodes/weights on [0,1].
const double kGlNode[16] = {
    0.0052995325041750337, 0.0277124884633837046, 0.0671843988060841224, 0.1222977958224984868,
    0.1910618777986781147, 0.2709916111713863151, 0.3591982246103705422, 0.4524937450811812866,
    0.5475062549188187134, 0.6408017753896294578, 0.7290083888286136849, 0.8089381222013218853,
    0.8777022041775015132, 0.9328156011939158776, 0.9722875115366162954, 0.9947004674958249663};
const double kGlWeight[16] = {
    0.0135762297058770482, 0.0311267619693239468, 0.0475792558412463928, 0.0623144856277669384,
    0.0747979944082883680, 0.0845782596975012679, 0.0913017075224617918, 0.0947253052275342510,
    0.0947253052275342510, 0.0913017075224617918, 0.0845782596975012679, 0.0747979944082883680,
    0.0623144856277669384, 0.0475792558412463928, 0.0311267619693239468, 0.0135762297058770482};

template <typename F>
double gauss_legendre(F&& f, double a, double b, int panels) {
  double sum = 0.0;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (int i = 0; i < 16; ++i) {
      sum += kGlWeight[i] * f(lo + kGlNode[i] * width);
    }
  }
  return sum * width;
}

struct FamilyValidator {
  void operator()(const GammaProcess& g) const {
    if (!(g.gamma > 0.0 && g.lambda > 0.0))
      throw std::invalid_argument("GammaProcess: gamma and lambda must be positive");
  }
  void operator()(const VarianceGamma& v) const {
    if (!(v.subordinator_gamma > 0.0 && v.subordinator_lambda > 0.0))
      throw std::invalid_argument("VarianceGamma: subordinator parameters must be positive");
    if (std::fabs(v.subordinator_gamma * v.subordinator_lambda - 1.0) > 1e-12)
      throw std::invalid_argument("VarianceGamma: subordinator must have unit mean per unit time");
    if (!(v.sigma > 0.0)) throw std::invalid_argument("VarianceGamma: sigma must be positive");
  }
  void operator()(const NormalInverseGaussian& n) const {
    if (!(n.alpha > std::fabs(n.beta)))
      throw std::invalid_argument("NormalInverseGaussian: need alpha > |beta|");
    if (!(n.delta > 0.0)) throw std::invalid_argument("NormalInverseGaussian: delta must be positive");
  }
};

}  // namespace

void validate_family(const LevyFamily& family) { std::visit(FamilyValidator{}, family); }

Eigen::Index levy_input_dim(const LevyFamily& family, Eigen::Index d) {
  return std::holds_alternative<VarianceGamma>(family) ? 2 * d : d;
}

double bessel_k1(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("bessel_k1: x must be positive");
  if (x > 740.0) return 0.0;  // underflow
  // K_1(x) = int_0^inf exp(-x cosh t) cosh t dt, truncated where the
  // integrand underflows.
  const double t_max = std::acosh(std::max(1.0, 745.0 / x)) + 1.0;
  const int panels = std::max(8, static_cast<int>(std::ceil(4.0 * t_max)));
  return gauss_legendre(
      [x](double t) {
        const double c = std::cosh(t);
        return std::exp(-x * c) * c;
      },
      0.0, t_max, panels);
}

double nig_pdf(double x, const NormalInverseGaussian& p) {
  const double g = std::sqrt(p.alpha * p.alpha - p.beta * p.beta);
  const double s = std::sqrt(p.delta * p.delta + x * x);
  return p.alpha * p.delta / std::numbers::pi * std::exp(p.delta * g + p.beta * x) *
         bessel_k1(p.alpha * s) / s;
}

// ---------------------------------------------------------------------------
// IncrementInverter
// ---------------------------------------------------------------------------

namespace {

constexpr int kFinePanels = 4096;   // CDF integration panels in sinh space
constexpr int kSplineKnots = 2048;  // inverse spline knots
constexpr double kZRange = 8.2;     // normal-score range covered by the spline

// Cubic Hermite on a uniform z grid.
double hermite_eval(const Eigen::VectorXd& zs, const Eigen::VectorXd& xs,
                    const Eigen::VectorXd& ms, double z) {
  const Eigen::Index n = zs.size();
  const double h = zs[1] - zs[0];
  Eigen::Index i = static_cast<Eigen::Index>((z - zs[0]) / h);
  i = std::min(std::max<Eigen::Index>(i, 0), n - 2);
  const double t = (z - zs[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * xs[i] + h10 * h * ms[i] + h01 * xs[i + 1] + h11 * h * ms[i + 1];
}

}  // namespace

IncrementInverter::IncrementInverter(const LevyFamily& family, double dt)
    : family_(family), dt_(dt) {
  validate_family(family);
  if (!(dt > 0.0)) throw std::invalid_argument("IncrementInverter: dt must be positive");
  const auto* nig = std::get_if<NormalInverseGaussian>(&family_);
  if (nig == nullptr) return;  // gamma inverts in closed form, VG is not inverted

  const NormalInverseGaussian inc{nig->alpha, nig->beta, nig->delta * dt};
  const double g = std::sqrt(inc.alpha * inc.alpha - inc.beta * inc.beta);
  const double mean = inc.delta * inc.beta / g;
  const double stddev = std::sqrt(inc.delta * inc.alpha * inc.alpha / (g * g * g));

  // Expand the support until the exponential-envelope tail bound is negligible.
  double x_hi = mean + 10.0 * stddev;
  while (nig_pdf(x_hi, inc) / (inc.alpha - inc.beta) > 1e-15) x_hi *= 1.5;
  double x_lo = mean - 10.0 * stddev;
  while (nig_pdf(x_lo, inc) / (inc.alpha + inc.beta) > 1e-15) x_lo *= 1.5;

  // Cumulative density on a sinh-stretched grid (resolves the spike at 0
  // whose width is of order delta*dt).
  const double scale = inc.delta;
  const double w_lo = std::asinh(x_lo / scale);
  const double w_hi = std::asinh(x_hi / scale);
  const double dw = (w_hi - w_lo) / kFinePanels;
  Eigen::VectorXd fine_x(kFinePanels + 1), fine_cdf(kFinePanels + 1);
  fine_x[0] = x_lo;
  fine_cdf[0] = 0.0;
  auto integrand = [&](double w) {
    const double x = scale * std::sinh(w);
    return nig_pdf(x, inc) * scale * std::cosh(w);
  };
  for (int i = 0; i < kFinePanels; ++i) {
    const double a = w_lo + i * dw;
    fine_x[i + 1] = scale * std::sinh(a + dw);
    fine_cdf[i + 1] = fine_cdf[i] + gauss_legendre(integrand, a, a + dw, 1);
  }
  fine_cdf /= fine_cdf[kFinePanels];  // normalize the lost tail mass away

  // Spline knots uniform in the normal score z, x located by table walk plus
  // Newton refinement against the interpolated CDF.
  z_lo_ = -kZRange;
  z_hi_ = kZRange;
  knots_z_.resize(kSplineKnots);
  knots_x_.resize(kSplineKnots);
  knots_slope_.resize(kSplineKnots);
  Eigen::Index cursor = 0;
  for (int k = 0; k < kSplineKnots; ++k) {
    const double z = z_lo_ + (z_hi_ - z_lo_) * k / (kSplineKnots - 1.0);
    const double u = normal_cdf(z);
    while (cursor + 1 < fine_cdf.size() - 1 && fine_cdf[cursor + 1] < u) ++cursor;
    // secant within the fine cell, then two Newton steps on the true density
    double x = fine_x[cursor];
    const double du = fine_cdf[cursor + 1] - fine_cdf[cursor];
    if (du > 0.0) x += (u - fine_cdf[cursor]) / du * (fine_x[cursor + 1] - fine_x[cursor]);
    for (int it = 0; it < 2; ++it) {
      const double f = nig_pdf(x, inc);
      if (f <= 0.0) break;
      const double c = fine_cdf[cursor] +
                       gauss_legendre([&](double t) { return nig_pdf(t, inc); }, fine_x[cursor], x, 1);
      x -= (c - u) / f;
    }
    knots_z_[k] = z;
    knots_x_[k] = x;
    const double f = nig_pdf(x, inc);
    knots_slope_[k] = f > 0.0 ? normal_pdf(z) / f : 0.0;
  }
}

double IncrementInverter::inv(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("increment_inv: u must be in (0,1)");
  if (const auto* g = std::get_if<GammaProcess>(&family_)) {
    return gamma_inv_cdf(u, GammaParams{dt_ * g->gamma, g->lambda});
  }
  if (std::holds_alternative<VarianceGamma>(family_)) {
    throw std::invalid_argument("increment_inv: variance gamma increments are sampled by subordination");
  }
  double z = normal_inv_cdf(u);
  z = std::min(std::max(z, z_lo_), z_hi_);
  return hermite_eval(knots_z_, knots_x_, knots_slope_, z);
}

double IncrementInverter::cdf(double x) const {
  if (const auto* g = std::get_if<GammaProcess>(&family_)) {
    return gamma_cdf(x, GammaParams{dt_ * g->gamma, g->lambda});
  }
  if (std::holds_alternative<VarianceGamma>(family_)) {
    throw std::invalid_argument("cdf: variance gamma increments are sampled by subordination");
  }
  const auto& nig = std::get<NormalInverseGaussian>(family_);
  const NormalInverseGaussian inc{nig.alpha, nig.beta, nig.delta * dt_};
  if (x <= knots_x_[0]) return normal_cdf(z_lo_);
  if (x >= knots_x_[knots_x_.size() - 1]) return normal_cdf(z_hi_);
  // binary search the monotone knot table, then integrate the density locally
  Eigen::Index lo = 0, hi = knots_x_.size() - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (knots_x_[mid] <= x ? lo : hi) = mid;
  }
  const double u_lo = normal_cdf(knots_z_[lo]);
  return u_lo + gauss_legendre([&](double t) { return nig_pdf(t, inc); }, knots_x_[lo], x, 1);
}

double increment_inv(const LevyFamily& family, double dt, double u) {
  return IncrementInverter(family, dt).inv(u);
}

// ---------------------------------------------------------------------------
// LevyPathSampler
// ---------------------------------------------------------------------------

LevyPathSampler::LevyPathSampler(LevyFamily family, TimeGrid grid)
    : family_(std::move(family)), grid_(std::move(grid)) {
  validate_family(family_);
  inverters_.reserve(static_cast<std::size_t>(grid_.size()));
  std::map<double, std::shared_ptr<const IncrementInverter>> cache;
  double prev = 0.0;
  const bool vg = std::holds_alternative<VarianceGamma>(family_);
  for (Eigen::Index k = 0; k < grid_.size(); ++k) {
    const double dt = grid_[k] - prev;
    prev = grid_[k];
    auto it = cache.find(dt);
    if (it == cache.end()) {
      std::shared_ptr<const IncrementInverter> inv;
      if (vg) {
        const auto& v = std::get<VarianceGamma>(family_);
        inv = std::make_shared<IncrementInverter>(
            LevyFamily{GammaProcess{v.subordinator_gamma, v.subordinator_lambda}}, dt);
      } else {
        inv = std::make_shared<IncrementInverter>(family_, dt);
      }
      it = cache.emplace(dt, std::move(inv)).first;
    }
    inverters_.push_back(it->second);
  }
}

Eigen::Index LevyPathSampler::input_dim() const { return levy_input_dim(family_, grid_.size()); }

DiscretePath LevyPathSampler::forward(const Eigen::VectorXd& u) const {
  if (u.size() != input_dim()) throw std::invalid_argument("levy forward: input size mismatch");
  const Eigen::Index d = grid_.size();
  Eigen::VectorXd values(d);
  double acc = 0.0;
  if (const auto* vg = std::get_if<VarianceGamma>(&family_)) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double dg = inverters_[static_cast<std::size_t>(k)]->inv(u[2 * k]);
      const double z = normal_inv_cdf(u[2 * k + 1]);
      acc += vg->theta * dg + vg->sigma * std::sqrt(dg) * z;
      values[k] = acc;
    }
  } else {
    for (Eigen::Index k = 0; k < d; ++k) {
      acc += inverters_[static_cast<std::size_t>(k)]->inv(u[k]);
      values[k] = acc;
    }
  }
  return {grid_, std::move(values)};
}

DiscretePath LevyPathSampler::from_normal_scores(const Eigen::VectorXd& y) const {
  const Eigen::Index d = grid_.size();
  Eigen::VectorXd values(d);
  double acc = 0.0;
  if (const auto* vg = std::get_if<VarianceGamma>(&family_)) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double dg = inverters_[static_cast<std::size_t>(k)]->inv(normal_cdf(y[2 * k]));
      acc += vg->theta * dg + vg->sigma * std::sqrt(dg) * y[2 * k + 1];
      values[k] = acc;
    }
  } else {
    for (Eigen::Index k = 0; k < d; ++k) {
      acc += inverters_[static_cast<std::size_t>(k)]->inv(normal_cdf(y[k]));
      values[k] = acc;
    }
  }
  return {grid_, std::move(values)};
}

DiscretePath LevyPathSampler::transformed(const NormalTransform& v, const Eigen::VectorXd& x) const {
  if (x.size() != input_dim() || v.dimension() != input_dim())
    throw std::invalid_argument("levy transformed: input size mismatch");
  return from_normal_scores(v.apply(x));
}

DiscretePath levy_forward_path(const LevyFamily& family, const TimeGrid& grid,
                               const Eigen::VectorXd& u) {
  return LevyPathSampler(family, grid).forward(u);
}

DiscretePath levy_transformed_path(const LevyFamily& family, const TimeGrid& grid,
                                   const Eigen::MatrixXd& v, const Eigen::VectorXd& x) {
  LevyPathSampler sampler(family, grid);
  DenseTransform transform(v);
  return sampler.transformed(transform, x);
}

}  // namespace qmc
