#include "qmc/mlmc.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "qmc/dist.hpp"
#include "qmc/lowdisc.hpp"

namespace qmc {

namespace {

constexpr double kUniformFloor = 0x1.0p-53;

bool is_power_of(std::int64_t n, int m) {
  if (n < 1) return false;
  while (n % m == 0) n /= m;
  return n == 1;
}

}  // namespace

Eigen::VectorXd coarsen(int m, const Eigen::VectorXd& x) {
  if (m < 2) throw std::invalid_argument("coarsen: refinement must be >= 2");
  const Eigen::Index n = x.size();
  if (n % m != 0 || !is_power_of(n, m))
    throw std::invalid_argument("coarsen: input length must be a positive power of m");
  const Eigen::Index out_n = n / m;
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::VectorXd out(out_n);
  for (Eigen::Index i = 0; i < out_n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += x[i * m + j];
    out[i] = sum * scale;
  }
  return out;
}

double level_difference(const std::function<double(const Eigen::VectorXd&)>& f_fine,
                        const std::function<double(const Eigen::VectorXd&)>& f_coarse, int m,
                        const Eigen::VectorXd& x) {
  return f_fine(x) - f_coarse(coarsen(m, x));
}

Eigen::Index LevelSpec::dimension() const {
  Eigen::Index d = 1;
  for (int i = 0; i < level; ++i) d *= refinement;
  return d;
}

std::vector<std::int64_t> allocate_doubling(std::int64_t n_finest, int levels) {
  if (n_finest < 1) throw std::invalid_argument("allocate_doubling: n_finest must be >= 1");
  if (levels < 0) throw std::invalid_argument("allocate_doubling: levels must be >= 0");
  std::vector<std::int64_t> out(static_cast<std::size_t>(levels) + 1);
  for (int l = 0; l <= levels; ++l) out[static_cast<std::size_t>(l)] = n_finest << (levels - l);
  return out;
}

std::vector<std::int64_t> allocate_cost_optimal(const Eigen::VectorXd& variances,
                                                const Eigen::VectorXd& costs, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("allocate_cost_optimal: eps must be positive");
  if (variances.size() != costs.size() || variances.size() == 0)
    throw std::invalid_argument("allocate_cost_optimal: size mismatch");
  if ((variances.array() <= 0.0).any() || (costs.array() <= 0.0).any())
    throw std::invalid_argument("allocate_cost_optimal: variances and costs must be positive");
  const double lagrange = (variances.array() * costs.array()).sqrt().sum();
  std::vector<std::int64_t> out(static_cast<std::size_t>(variances.size()));
  for (Eigen::Index l = 0; l < variances.size(); ++l) {
    const double n = std::sqrt(variances[l] / costs[l]) * lagrange / (eps * eps);
    out[static_cast<std::size_t>(l)] = static_cast<std::int64_t>(std::ceil(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integrands
// ---------------------------------------------------------------------------

AsianGbmLevelIntegrand::AsianGbmLevelIntegrand(BsMarket market, double strike, int refinement)
    : market_(market),
      strike_(strike),
      refinement_(refinement),
      discount_(std::exp(-market.r * market.maturity)) {
  market_.validate();
  if (refinement < 2) throw std::invalid_argument("AsianGbmLevelIntegrand: refinement >= 2");
}

Eigen::Index AsianGbmLevelIntegrand::dimension(int level) const {
  Eigen::Index d = 1;
  for (int i = 0; i < level; ++i) d *= refinement_;
  return d;
}

double AsianGbmLevelIntegrand::eval(int level, const Eigen::VectorXd& y) const {
  const Eigen::Index d = dimension(level);
  if (y.size() != d) throw std::invalid_argument("AsianGbmLevelIntegrand: input size mismatch");
  const double t = market_.maturity;
  const double dt = t / static_cast<double>(d);
  const double sqrt_dt = std::sqrt(dt);
  const double drift = (market_.r - 0.5 * market_.sigma * market_.sigma) * dt;
  double log_s = std::log(market_.s0);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    log_s += drift + market_.sigma * sqrt_dt * y[k];
    sum += std::exp(log_s);
  }
  const double average = sum / static_cast<double>(d);
  return discount_ * std::max(average - strike_, 0.0);
}

// ---------------------------------------------------------------------------
// Point sources
// ---------------------------------------------------------------------------

RowMatrixXd McPointSource::normals(int replication, int level, std::int64_t n,
                                   Eigen::Index dim) {
  UniformRng rng(mix_seed(seed_, static_cast<std::uint64_t>(replication) * 64 + level));
  RowMatrixXd out(n, dim);
  for (std::int64_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      out(i, j) = normal_inv_cdf(std::max(rng.next(), kUniformFloor));
    }
  }
  return out;
}

RowMatrixXd QmcPointSource::normals(int replication, int level, std::int64_t n,
                                    Eigen::Index dim) {
  SobolGenerator sobol(static_cast<int>(dim));
  if (skip_zero_) sobol.seek(1);
  RowMatrixXd pts = sobol.next_block(n);
  const RandomShift shift =
      RandomShift::draw(dim, mix_seed(seed_, static_cast<std::uint64_t>(replication) * 64 + level));
  apply_shift_inplace(pts, shift);
  to_normal_scores(pts);
  return pts;
}

// ---------------------------------------------------------------------------
// Estimator
// ---------------------------------------------------------------------------

MlEstimate ml_estimate(const std::vector<LevelSpec>& levels, const LevelIntegrand& f,
                       MlPointSource& source, const MlOptions& opts) {
  if (levels.empty()) throw std::invalid_argument("ml_estimate: need at least one level");
  if (opts.replications < 1) throw std::invalid_argument("ml_estimate: replications must be >= 1");
  if (!opts.transforms.empty() && opts.transforms.size() != levels.size())
    throw std::invalid_argument("ml_estimate: one transform per level required");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (levels[l].level != static_cast<int>(l))
      throw std::invalid_argument("ml_estimate: levels must be 0..L in order");
    if (levels[l].dimension() != f.dimension(static_cast<int>(l)))
      throw std::invalid_argument("ml_estimate: level dimension mismatch with integrand");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const int num_levels = static_cast<int>(levels.size());
  const int reps = opts.replications;

  Eigen::MatrixXd level_means(reps, num_levels);
  for (int r = 0; r < reps; ++r) {
    for (int l = 0; l < num_levels; ++l) {
      const LevelSpec& spec = levels[static_cast<std::size_t>(l)];
      const Eigen::Index dim = spec.dimension();
      RowMatrixXd pts = source.normals(r, l, spec.samples, dim);
      if (!opts.transforms.empty() && opts.transforms[static_cast<std::size_t>(l)]) {
        opts.transforms[static_cast<std::size_t>(l)]->apply_rows(pts);
      }
      double sum = 0.0;
      for (std::int64_t i = 0; i < spec.samples; ++i) {
        const Eigen::VectorXd y = pts.row(i).transpose();
        if (l == 0) {
          sum += f.eval(0, y);
        } else {
          sum += f.eval(l, y) - f.eval(l - 1, coarsen(spec.refinement, y));
        }
      }
      level_means(r, l) = sum / static_cast<double>(spec.samples);
    }
  }
  const auto t1 = std::chrono::steady_clock::now();

  MlEstimate est;
  est.level_means = level_means.colwise().mean();
  est.level_stddevs.resize(num_levels);
  for (int l = 0; l < num_levels; ++l) {
    if (reps < 2) {
      est.level_stddevs[l] = 0.0;
    } else {
      const double m = est.level_means[l];
      est.level_stddevs[l] =
          std::sqrt((level_means.col(l).array() - m).square().sum() / (reps - 1));
    }
  }
  est.rep_totals = level_means.rowwise().sum();
  est.total = est.rep_totals.mean();
  est.total_stddev =
      reps < 2 ? 0.0
               : std::sqrt((est.rep_totals.array() - est.total).square().sum() / (reps - 1));
  est.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
  return est;
}

}  // namespace qmc
