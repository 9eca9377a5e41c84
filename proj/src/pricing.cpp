#include "qmc/pricing.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "qmc/dist.hpp"
#include "qmc/lowdisc.hpp"

namespace qmc {

namespace {

constexpr double kUniformFloor = 0x1.0p-53;

double sample_stddev(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

void BsMarket::validate() const {
  if (!(sigma > 0.0 && s0 > 0.0 && maturity > 0.0))
    throw std::invalid_argument("BsMarket: sigma, s0, maturity must be positive");
}

double bs_call(const BsMarket& m, double strike) {
  m.validate();
  if (!(strike > 0.0)) throw std::invalid_argument("bs_call: strike must be positive");
  const double sig_sqrt_t = m.sigma * std::sqrt(m.maturity);
  const double d1 =
      (std::log(m.s0 / strike) + (m.r + 0.5 * m.sigma * m.sigma) * m.maturity) / sig_sqrt_t;
  const double d2 = d1 - sig_sqrt_t;
  return m.s0 * normal_cdf(d1) - std::exp(-m.r * m.maturity) * strike * normal_cdf(d2);
}

double bs_put(const BsMarket& m, double strike) {
  // put-call parity
  return bs_call(m, strike) - m.s0 + strike * std::exp(-m.r * m.maturity);
}

BinomialPrices binomial_one_step(double r, double up, double down, double s0, double strike,
                                 double p) {
  if (!(0.0 < down && down < 1.0 + r && 1.0 + r < up))
    throw std::invalid_argument("binomial_one_step: need 0 < d < 1+r < u");
  const double payoff_up = std::max(s0 * up - strike, 0.0);
  const double payoff_down = std::max(s0 * down - strike, 0.0);
  const double p_star = (1.0 + r - down) / (up - down);
  return {
      (p_star * payoff_up + (1.0 - p_star) * payoff_down) / (1.0 + r),
      (p * payoff_up + (1.0 - p) * payoff_down) / (1.0 + r),
  };
}

DiscretePath gbm_path(const DiscretePath& brownian, const BsMarket& m) {
  m.validate();
  const Eigen::Index d = brownian.values.size();
  Eigen::VectorXd prices(d);
  const double drift = m.r - 0.5 * m.sigma * m.sigma;
  for (Eigen::Index k = 0; k < d; ++k) {
    prices[k] = m.s0 * std::exp(drift * brownian.grid[k] + m.sigma * brownian.values[k]);
  }
  return {brownian.grid, std::move(prices)};
}

// ---------------------------------------------------------------------------
// Payoffs
// ---------------------------------------------------------------------------

namespace {

double window_average(const TimeGrid& grid, const Eigen::VectorXd& prices, double lo, double hi) {
  double sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < prices.size(); ++k) {
    if (grid[k] >= lo && grid[k] <= hi) {
      sum += prices[k];
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("payoff_eval: averaging window contains no node");
  return sum / static_cast<double>(count);
}

struct PayoffVisitor {
  const TimeGrid& grid;
  const Eigen::VectorXd& prices;
  double s0;

  double terminal() const { return prices[prices.size() - 1]; }

  double operator()(const EuropeanCall& p) const { return std::max(terminal() - p.strike, 0.0); }
  double operator()(const EuropeanPut& p) const { return std::max(p.strike - terminal(), 0.0); }
  double operator()(const DigitalCall& p) const { return terminal() > p.strike ? p.cash : 0.0; }
  double operator()(const DigitalPut& p) const { return terminal() < p.strike ? p.cash : 0.0; }
  double operator()(const AsianFixed& p) const {
    return std::max(window_average(grid, prices, p.window_lo, p.window_hi) - p.strike, 0.0);
  }
  double operator()(const AsianFloat& p) const {
    return std::max(window_average(grid, prices, p.window_lo, p.window_hi) - terminal(), 0.0);
  }
  double operator()(const Basket& p) const {
    if (p.weights.size() != prices.size())
      throw std::invalid_argument("payoff_eval: basket weight/price count mismatch");
    return std::max(p.weights.dot(prices) - p.strike, 0.0);
  }
  double operator()(const Ratchet&) const {
    const Eigen::Index d = prices.size();
    double sum = 0.0;
    double prev = s0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (prices[j] - prev >= 0.0) sum += prices[j];
      prev = prices[j];
    }
    return sum / static_cast<double>(d);
  }
};

}  // namespace

double payoff_eval(const Payoff& payoff, const TimeGrid& grid, const Eigen::VectorXd& prices,
                   double s0) {
  if (prices.size() == 0) throw std::invalid_argument("payoff_eval: empty price path");
  return std::visit(PayoffVisitor{grid, prices, s0}, payoff);
}

// ---------------------------------------------------------------------------
// Estimator
// ---------------------------------------------------------------------------

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void to_normal_scores(Eigen::Ref<RowMatrixXd> u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      u(i, j) = normal_inv_cdf(std::max(u(i, j), kUniformFloor));
    }
  }
}

PriceEstimate qmc_mean(const NormalIntegrand& f, const NormalTransform& transform,
                       const QmcConfig& cfg) {
  const Eigen::Index dim = f.dimension();
  if (transform.dimension() != dim) throw std::invalid_argument("qmc_mean: dimension mismatch");
  if (cfg.shifts < 1 || cfg.points < 1) throw std::invalid_argument("qmc_mean: bad configuration");

  const auto t0 = std::chrono::steady_clock::now();
  Eigen::VectorXd shift_means(cfg.shifts);
  for (int s = 0; s < cfg.shifts; ++s) {
    SobolGenerator sobol(static_cast<int>(dim));
    if (cfg.skip_zero_point) sobol.seek(1);
    RowMatrixXd pts = sobol.next_block(cfg.points);
    const RandomShift shift = RandomShift::draw(dim, mix_seed(cfg.seed, s));
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double dj = shift.delta[j];
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        double v = pts(i, j) + dj;
        if (v >= 1.0) v -= 1.0;
        pts(i, j) = normal_inv_cdf(std::max(v, kUniformFloor));
      }
    }
    transform.apply_rows(pts);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      sum += f.eval(pts.row(i).transpose());
    }
    shift_means[s] = sum / static_cast<double>(cfg.points);
  }
  const auto t1 = std::chrono::steady_clock::now();

  PriceEstimate est;
  est.mean = shift_means.mean();
  est.stddev = sample_stddev(shift_means);
  est.shifts = cfg.shifts;
  est.points_per_shift = cfg.points;
  est.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
  return est;
}

BsPathIntegrand::BsPathIntegrand(BsMarket market, Payoff payoff, Eigen::Index steps)
    : market_(market),
      payoff_(std::move(payoff)),
      steps_(steps),
      grid_(TimeGrid::even(steps, market.maturity)),
      discount_(std::exp(-market.r * market.maturity)),
      drift_((market.r - 0.5 * market.sigma * market.sigma) * grid_.nodes()),
      sqrt_dt_(std::sqrt(market.maturity / static_cast<double>(steps))) {
  market_.validate();
}

double BsPathIntegrand::eval(const Eigen::VectorXd& y) const {
  Eigen::VectorXd prices(steps_);
  double b = 0.0;
  for (Eigen::Index k = 0; k < steps_; ++k) {
    b += sqrt_dt_ * y[k];
    prices[k] = market_.s0 * std::exp(drift_[k] + market_.sigma * b);
  }
  return discount_ * payoff_eval(payoff_, grid_, prices, market_.s0);
}

HestonPathIntegrand::HestonPathIntegrand(HestonParams params, Payoff payoff, int steps,
                                         double maturity)
    : params_(params),
      payoff_(std::move(payoff)),
      steps_(steps),
      maturity_(maturity),
      grid_(TimeGrid::even(steps, maturity)),
      discount_(std::exp(-params.r * maturity)),
      sqrt_dt_(std::sqrt(maturity / steps)) {
  params_.validate();
  if (steps < 1) throw std::invalid_argument("HestonPathIntegrand: steps must be >= 1");
}

double HestonPathIntegrand::eval(const Eigen::VectorXd& y) const {
  const double h = maturity_ / steps_;
  const double rho_bar = std::sqrt(1.0 - params_.rho * params_.rho);
  double s = params_.s0;
  double v = params_.v0;
  Eigen::VectorXd prices(steps_);
  for (int k = 0; k < steps_; ++k) {
    const double dw1 = sqrt_dt_ * y[k];
    const double dw2 = sqrt_dt_ * y[steps_ + k];
    const double sqrt_v = std::sqrt(std::max(v, 0.0));
    s += params_.r * s * h + sqrt_v * s * (params_.rho * dw1 + rho_bar * dw2);
    v += params_.kappa * (params_.theta - v) * h + params_.xi * sqrt_v * dw1;
    if (params_.truncation == HestonParams::Truncation::absorption) v = std::max(v, 0.0);
    prices[k] = s;
  }
  return discount_ * payoff_eval(payoff_, grid_, prices, params_.s0);
}

PriceEstimate qmc_price(const BsMarket& market, const Payoff& payoff, Eigen::Index steps,
                        const PathConstruction& construction, const QmcConfig& cfg) {
  BsPathIntegrand f(market, payoff, steps);
  return qmc_mean(f, *make_transform(construction, steps), cfg);
}

PriceEstimate qmc_price(const HestonParams& params, const Payoff& payoff, int steps,
                        double maturity, const PathConstruction& construction,
                        const QmcConfig& cfg) {
  HestonPathIntegrand f(params, payoff, steps, maturity);
  return qmc_mean(f, *make_transform(construction, 2 * steps), cfg);
}

// ---------------------------------------------------------------------------
// Regression transform
// ---------------------------------------------------------------------------

RegressionTransformResult regression_transform(const Eigen::MatrixXd& pilot_x,
                                               const Eigen::VectorXd& pilot_y) {
  const Eigen::Index n = pilot_x.rows();
  const Eigen::Index d = pilot_x.cols();
  if (pilot_y.size() != n) throw std::invalid_argument("regression_transform: size mismatch");
  if (n < d + 1) throw std::invalid_argument("regression_transform: need at least d+1 pilot rows");

  Eigen::MatrixXd design(n, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = pilot_x;
  const Eigen::MatrixXd gram = design.transpose() * design;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw std::invalid_argument("regression_transform: pilot design is rank deficient");
  const Eigen::VectorXd coef = ldlt.solve(design.transpose() * pilot_y);
  const Eigen::VectorXd w = coef.tail(d);

  // a locally flat payoff leaves w at solver-noise level; treat it as zero
  const double scale = std::sqrt(pilot_y.squaredNorm() / static_cast<double>(n));
  const bool degenerate = w.norm() <= 1e-9 * std::max(scale, 1e-300);
  HouseholderTransform transform(degenerate ? Eigen::VectorXd::Zero(d).eval() : w);
  return {transform, w, degenerate};
}

RegressionTransformResult regression_transform_for(const NormalIntegrand& f,
                                                   std::int64_t pilot_count, std::uint64_t seed) {
  const Eigen::Index d = f.dimension();
  const std::int64_t n = std::max<std::int64_t>(pilot_count, d + 1);
  SobolGenerator sobol(static_cast<int>(d));
  sobol.seek(1);  // pilot skips the all-zeros point
  RowMatrixXd x = sobol.next_block(n);
  const RandomShift shift = RandomShift::draw(d, mix_seed(seed, 0x9d17));
  apply_shift_inplace(x, shift);
  to_normal_scores(x);
  Eigen::VectorXd y(n);
  for (std::int64_t i = 0; i < n; ++i) y[i] = f.eval(x.row(i).transpose());
  return regression_transform(x, y);
}

Eigen::VectorXd basket_terminal_prices(const Eigen::VectorXd& s0, double r, double maturity,
                                       const Eigen::MatrixXd& chol, const Eigen::VectorXd& z) {
  const Eigen::Index m = s0.size();
  if (chol.rows() != m || chol.cols() != z.size())
    throw std::invalid_argument("basket_terminal_prices: dimension mismatch");
  const Eigen::VectorXd noise = chol * z;
  Eigen::VectorXd prices(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double var = chol.row(j).squaredNorm();
    prices[j] = s0[j] * std::exp((r - 0.5 * var) * maturity + std::sqrt(maturity) * noise[j]);
  }
  return prices;
}

}  // namespace qmc
