#include "qmc/experiments.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "qmc/dist.hpp"
#include "qmc/lowdisc.hpp"

namespace qmc {

namespace {

constexpr double kUniformFloor = 0x1.0p-53;

/// Level difference as a single integrand over the fine-level input.
class LevelDifferenceIntegrand final : public NormalIntegrand {
 public:
  LevelDifferenceIntegrand(const LevelIntegrand& f, int level, int refinement)
      : f_(f), level_(level), refinement_(refinement) {}
  Eigen::Index dimension() const override { return f_.dimension(level_); }
  double eval(const Eigen::VectorXd& y) const override {
    if (level_ == 0) return f_.eval(0, y);
    return f_.eval(level_, y) - f_.eval(level_ - 1, coarsen(refinement_, y));
  }

 private:
  const LevelIntegrand& f_;
  int level_;
  int refinement_;
};

std::int64_t regression_pilot_count(std::int64_t requested, Eigen::Index dim) {
  // the least-squares fit needs a comfortable margin over d+1 rows
  return std::max<std::int64_t>(requested, 8 * (dim + 1));
}

/// Applies one transform per driver block. With ordered_coefficients the
/// input coordinates alternate between the drivers (coefficient k of driver
/// j sits at coordinate 2k+j), so equally important coefficients occupy
/// adjacent, equally good sequence dimensions.
class PerDriverTransform final : public NormalTransform {
 public:
  PerDriverTransform(std::shared_ptr<const NormalTransform> inner, bool ordered_coefficients)
      : inner_(std::move(inner)), ordered_(ordered_coefficients) {}
  Eigen::Index dimension() const override { return 2 * inner_->dimension(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
    const Eigen::Index n = inner_->dimension();
    if (x.size() != 2 * n) throw std::invalid_argument("PerDriverTransform: size mismatch");
    Eigen::VectorXd out(2 * n);
    if (ordered_) {
      Eigen::VectorXd a(n), b(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        a[i] = x[2 * i];
        b[i] = x[2 * i + 1];
      }
      out.head(n) = inner_->apply(a);
      out.tail(n) = inner_->apply(b);
    } else {
      out.head(n) = inner_->apply(x.head(n));
      out.tail(n) = inner_->apply(x.tail(n));
    }
    return out;
  }

 private:
  std::shared_ptr<const NormalTransform> inner_;
  bool ordered_;
};

}  // namespace

std::string to_string(ConstructionName c) {
  switch (c) {
    case ConstructionName::forward: return "forward";
    case ConstructionName::bb: return "bb";
    case ConstructionName::bb2: return "bb2";
    case ConstructionName::pca: return "pca";
    case ConstructionName::regression: return "regression";
  }
  return "?";
}

std::optional<ConstructionName> construction_from_string(const std::string& s) {
  if (s == "forward") return ConstructionName::forward;
  if (s == "bb") return ConstructionName::bb;
  if (s == "bb2") return ConstructionName::bb2;
  if (s == "pca") return ConstructionName::pca;
  if (s == "regression") return ConstructionName::regression;
  return std::nullopt;
}

std::string to_string(MlMethod m) {
  switch (m) {
    case MlMethod::mc: return "mc";
    case MlMethod::qmc_forward: return "qmc-forward";
    case MlMethod::qmc_pca: return "qmc-pca";
    case MlMethod::qmc_regression: return "qmc-regression";
  }
  return "?";
}

std::optional<MlMethod> ml_method_from_string(const std::string& s) {
  if (s == "mc") return MlMethod::mc;
  if (s == "qmc-forward") return MlMethod::qmc_forward;
  if (s == "qmc-pca") return MlMethod::qmc_pca;
  if (s == "qmc-regression") return MlMethod::qmc_regression;
  return std::nullopt;
}

std::shared_ptr<const NormalTransform> named_transform(ConstructionName c, Eigen::Index dim) {
  switch (c) {
    case ConstructionName::forward:
      return std::make_shared<IdentityTransform>(dim);
    case ConstructionName::bb:
      return make_transform(Bridge{}, dim);
    case ConstructionName::bb2: {
      return make_transform(BridgePerBlock{2}, dim);
    }
    case ConstructionName::pca:
      return std::make_shared<PcaTransform>(dim);
    case ConstructionName::regression:
      throw std::invalid_argument("named_transform: regression needs a pilot; use the drivers");
  }
  throw std::invalid_argument("named_transform: unknown construction");
}

// ---------------------------------------------------------------------------
// Convergence experiments
// ---------------------------------------------------------------------------

std::vector<ResultRow> converge_rows(const std::string& experiment, const NormalIntegrand& f,
                                     const ConvergeSettings& settings) {
  if (settings.m_min < 0 || settings.m_max < settings.m_min)
    throw std::invalid_argument("converge: bad m range");
  const Eigen::Index dim = f.dimension();

  std::vector<ResultRow> rows;
  for (ConstructionName c : settings.constructions) {
    std::shared_ptr<const NormalTransform> transform;
    if (c == ConstructionName::regression) {
      const auto reg = regression_transform_for(
          f, regression_pilot_count(settings.regression_pilot, dim), settings.seed);
      transform = std::make_shared<HouseholderTransform>(reg.transform);
    } else {
      transform = named_transform(c, dim);
    }
    for (int m = settings.m_min; m <= settings.m_max; ++m) {
      QmcConfig cfg;
      cfg.shifts = settings.shifts;
      cfg.points = std::int64_t{1} << m;
      // same shift seeds for every construction at a given m, so the
      // comparison across constructions is paired
      cfg.seed = mix_seed(settings.seed, static_cast<std::uint64_t>(m));
      cfg.skip_zero_point = settings.skip_zero_point;
      const PriceEstimate est = qmc_mean(f, *transform, cfg);
      rows.push_back({experiment, to_string(c), static_cast<double>(m), est.mean, est.stddev,
                      est.elapsed_seconds});
    }
  }
  return rows;
}

std::shared_ptr<const NormalTransform> heston_transform(ConstructionName c, int steps) {
  const Eigen::Index dim = 2 * steps;
  switch (c) {
    case ConstructionName::forward:
      return std::make_shared<IdentityTransform>(dim);
    case ConstructionName::bb:
      return make_transform(Bridge{}, dim);
    case ConstructionName::bb2:
      return std::make_shared<PerDriverTransform>(make_transform(Bridge{}, steps), false);
    case ConstructionName::pca:
      // the joint covariance is Sigma (x) I2: eigenvalues pair up across the
      // two drivers, so the canonical ordering interleaves their coefficients
      return std::make_shared<PerDriverTransform>(std::make_shared<PcaTransform>(steps), true);
    case ConstructionName::regression:
      throw std::invalid_argument("heston_transform: regression needs a pilot; use the drivers");
  }
  throw std::invalid_argument("heston_transform: unknown construction");
}

std::vector<ResultRow> converge_heston_asian(const HestonAsianExperiment& e,
                                             const ConvergeSettings& settings) {
  HestonPathIntegrand f(e.params, AsianFixed{e.strike}, e.steps, e.maturity);

  std::vector<ResultRow> rows;
  for (ConstructionName c : settings.constructions) {
    std::shared_ptr<const NormalTransform> transform;
    if (c == ConstructionName::regression) {
      const auto reg = regression_transform_for(
          f, regression_pilot_count(settings.regression_pilot, f.dimension()), settings.seed);
      transform = std::make_shared<HouseholderTransform>(reg.transform);
    } else {
      transform = heston_transform(c, e.steps);
    }
    for (int m = settings.m_min; m <= settings.m_max; ++m) {
      QmcConfig cfg;
      cfg.shifts = settings.shifts;
      cfg.points = std::int64_t{1} << m;
      cfg.seed = mix_seed(settings.seed, static_cast<std::uint64_t>(m));
      cfg.skip_zero_point = settings.skip_zero_point;
      const PriceEstimate est = qmc_mean(f, *transform, cfg);
      rows.push_back({"heston-asian", to_string(c), static_cast<double>(m), est.mean, est.stddev,
                      est.elapsed_seconds});
    }
  }
  return rows;
}

std::vector<ResultRow> converge_ratchet(const RatchetExperiment& e,
                                        const ConvergeSettings& settings) {
  BsPathIntegrand f(e.market, Ratchet{}, e.steps);
  return converge_rows("ratchet", f, settings);
}

// ---------------------------------------------------------------------------
// Multilevel table
// ---------------------------------------------------------------------------

std::vector<ResultRow> mlmc_table(const MlmcExperiment& e) {
  if (e.runs < 1) throw std::invalid_argument("mlmc_table: runs must be >= 1");
  AsianGbmLevelIntegrand f(e.market, e.strike, e.refinement);

  std::vector<ResultRow> rows;
  for (MlMethod method : e.methods) {
    // per-level transforms are independent of N_L; build them once
    std::vector<std::shared_ptr<const NormalTransform>> transforms;
    if (method == MlMethod::qmc_pca) {
      for (int l = 0; l <= e.levels; ++l)
        transforms.push_back(std::make_shared<PcaTransform>(f.dimension(l)));
    } else if (method == MlMethod::qmc_regression) {
      for (int l = 0; l <= e.levels; ++l) {
        LevelDifferenceIntegrand diff(f, l, e.refinement);
        const auto reg = regression_transform_for(
            diff, regression_pilot_count(e.regression_pilot, diff.dimension()),
            mix_seed(e.seed, 0xa1b2c3 + static_cast<std::uint64_t>(l)));
        transforms.push_back(std::make_shared<HouseholderTransform>(reg.transform));
      }
    }

    for (std::int64_t n_l : e.n_finest) {
      const auto samples = allocate_doubling(n_l, e.levels);
      std::vector<LevelSpec> levels;
      for (int l = 0; l <= e.levels; ++l) {
        levels.push_back(LevelSpec{l, e.refinement, samples[static_cast<std::size_t>(l)],
                                   static_cast<double>(Eigen::Index{1} << l)});
      }
      MlOptions opts;
      opts.replications = e.runs;
      opts.transforms = transforms;

      const std::uint64_t source_seed = mix_seed(e.seed, static_cast<std::uint64_t>(n_l));
      MlEstimate est;
      if (method == MlMethod::mc) {
        McPointSource source(source_seed);
        est = ml_estimate(levels, f, source, opts);
      } else {
        QmcPointSource source(source_seed, e.skip_zero_point);
        est = ml_estimate(levels, f, source, opts);
      }
      rows.push_back({"bs-asian-mlmc", to_string(method), static_cast<double>(n_l), est.total,
                      est.total_stddev, est.elapsed_seconds});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Rejection-noise demonstration
// ---------------------------------------------------------------------------

std::vector<RejectionDemoRow> rejection_noise_demo(const RejectionDemoSettings& s) {
  if (s.n_terms < 1 || s.points < 1) throw std::invalid_argument("rejection demo: bad settings");
  if (!(s.proposal_rate > 0.0 && s.proposal_rate < 1.0))
    throw std::invalid_argument("rejection demo: proposal rate must be in (0,1)");

  std::vector<RejectionDemoRow> rows;
  const double b = s.proposal_rate;
  const Density proposal = exponential_density(b);

  for (double lambda = s.lambda_bar - s.epsilon; lambda <= s.lambda_bar + s.epsilon + 1e-12;
       lambda += s.lambda_step) {
    const GammaParams target{lambda, 1.0};
    const double offset = s.lambda_bar * s.n_terms;

    // envelope constant: the ratio f/g peaks at (lambda-1)/(1-b)
    const double x_star = (lambda - 1.0) / (1.0 - b);
    const double c =
        gamma_pdf(x_star, target) / proposal.pdf(x_star) * (1.0 + 1e-9);
    RejectionSpec spec([target](double x) { return gamma_pdf(x, target); }, proposal, c, 1e-9,
                       60.0, 2000);

    // fixed-stream Monte Carlo with acceptance-rejection: the generator is
    // restarted for every lambda, so the same uniforms are re-used
    UniformRng rng(s.seed);
    auto next_uniform = [&rng]() { return rng.next(); };
    double ar_sum = 0.0;
    for (std::int64_t j = 0; j < s.points; ++j) {
      double sum_terms = 0.0;
      for (int i = 0; i < s.n_terms; ++i) {
        sum_terms += acceptance_rejection(spec, next_uniform).value;
      }
      ar_sum += sum_terms - offset;
    }

    // Sobol with inversion
    SobolGenerator sobol(s.n_terms);
    RowMatrixXd pts = sobol.next_block(s.points);
    double qmc_sum = 0.0;
    for (std::int64_t j = 0; j < s.points; ++j) {
      double sum_terms = 0.0;
      for (int i = 0; i < s.n_terms; ++i) {
        sum_terms += gamma_inv_cdf(std::max(pts(j, i), kUniformFloor), target);
      }
      qmc_sum += sum_terms - offset;
    }

    rows.push_back({lambda, ar_sum / static_cast<double>(s.points),
                    qmc_sum / static_cast<double>(s.points)});
  }
  return rows;
}

double curve_roughness(const std::vector<RejectionDemoRow>& rows, bool ar_column) {
  if (rows.size() < 3) return 0.0;
  Eigen::VectorXd diffs(rows.size() - 1);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double a = ar_column ? rows[i + 1].ar_mc : rows[i + 1].qmc_inversion;
    const double b = ar_column ? rows[i].ar_mc : rows[i].qmc_inversion;
    diffs[static_cast<Eigen::Index>(i)] = a - b;
  }
  const double mean = diffs.mean();
  return std::sqrt((diffs.array() - mean).square().sum() / static_cast<double>(diffs.size() - 1));
}

// ---------------------------------------------------------------------------
// Path sweeps
// ---------------------------------------------------------------------------

std::vector<PathSweepRow> path_sweep(const PathSweepSettings& s) {
  if (s.dimension < 1) throw std::invalid_argument("path_sweep: dimension must be >= 1");
  if (s.vary_coordinate < 0 || s.vary_coordinate > s.dimension)
    throw std::invalid_argument("path_sweep: coordinate out of range");

  const TimeGrid grid = TimeGrid::even(s.dimension);
  const Eigen::Index input_dim =
      s.nig_process ? levy_input_dim(LevyFamily{s.nig}, s.dimension) : s.dimension;
  auto transform = named_transform(s.construction, input_dim);

  // base input: a fixed normal draw, shared by every sweep value
  UniformRng rng(s.seed);
  Eigen::VectorXd base(input_dim);
  for (Eigen::Index i = 0; i < input_dim; ++i)
    base[i] = normal_inv_cdf(std::max(rng.next(), kUniformFloor));

  std::vector<double> sweeps = s.sweep_values;
  if (s.vary_coordinate == 0 || sweeps.empty()) sweeps = {base[0]};

  std::vector<PathSweepRow> rows;
  if (s.nig_process) {
    LevyPathSampler sampler(LevyFamily{s.nig}, grid);
    for (double v : sweeps) {
      Eigen::VectorXd x = base;
      if (s.vary_coordinate > 0) x[s.vary_coordinate - 1] = v;
      const DiscretePath path = sampler.transformed(*transform, x);
      for (Eigen::Index k = 0; k < grid.size(); ++k) rows.push_back({v, grid[k], path.values[k]});
    }
  } else {
    for (double v : sweeps) {
      Eigen::VectorXd x = base;
      if (s.vary_coordinate > 0) x[s.vary_coordinate - 1] = v;
      const Eigen::VectorXd values = cumsum_map(transform->apply(x));
      for (Eigen::Index k = 0; k < grid.size(); ++k) rows.push_back({v, grid[k], values[k]});
    }
  }
  return rows;
}

}  // namespace qmc
