#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qmc/dist.hpp"
#include "qmc/lowdisc.hpp"
#include "qmc/mlmc.hpp"

using namespace qmc;

namespace {

Eigen::MatrixXd coarsening_matrix(int m, Eigen::Index fine_dim) {
  Eigen::MatrixXd c(fine_dim / m, fine_dim);
  for (Eigen::Index i = 0; i < fine_dim; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(fine_dim);
    e[i] = 1.0;
    c.col(i) = coarsen(m, e);
  }
  return c;
}

/// Forces the coupling: every level sees the repeated coarsening of one
/// common fine-level draw.
class CoupledSource final : public MlPointSource {
 public:
  CoupledSource(std::uint64_t seed, int top_level, int refinement)
      : seed_(seed), top_(top_level), m_(refinement) {}
  RowMatrixXd normals(int replication, int level, std::int64_t n, Eigen::Index dim) override {
    UniformRng rng(mix_seed(seed_, static_cast<std::uint64_t>(replication)));
    Eigen::Index fine_dim = 1;
    for (int i = 0; i < top_; ++i) fine_dim *= m_;
    RowMatrixXd out(n, dim);
    for (std::int64_t i = 0; i < n; ++i) {
      Eigen::VectorXd x(fine_dim);
      for (Eigen::Index j = 0; j < fine_dim; ++j)
        x[j] = normal_inv_cdf(std::max(rng.next(), 0x1.0p-53));
      for (int l = top_; l > level; --l) x = coarsen(m_, x);
      out.row(i) = x.transpose();
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  int top_;
  int m_;
};

}  // namespace

TEST_CASE("coarsen block sums") {
  Eigen::VectorXd x(4);
  x << 1.0, 2.0, 3.0, 4.0;
  const Eigen::VectorXd c = coarsen(2, x);
  CHECK(c.size() == 2);
  CHECK(c[0] == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(7.0 / std::sqrt(2.0)).epsilon(1e-15));

  CHECK_THROWS_AS(coarsen(2, Eigen::VectorXd::Zero(6)), std::invalid_argument);
  CHECK_THROWS_AS(coarsen(1, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("coarsening rows are orthonormal: C C^T = I for m in {2,3}, l <= 4") {
  for (int m : {2, 3}) {
    for (int l = 0; l <= 4; ++l) {
      Eigen::Index fine = 1;
      for (int i = 0; i <= l; ++i) fine *= m;
      const Eigen::MatrixXd c = coarsening_matrix(m, fine);
      const Eigen::MatrixXd gram = c * c.transpose();
      CHECK((gram - Eigen::MatrixXd::Identity(fine / m, fine / m)).cwiseAbs().maxCoeff() <=
            1e-14);
    }
  }
}

TEST_CASE("coarsened standard normals keep unit variance") {
  UniformRng rng(2);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x[j] = normal_inv_cdf(std::max(rng.next(), 0x1.0p-53));
    const double v = coarsen(2, x)[0];
    sum += v;
    sum2 += v * v;
  }
  const double var = sum2 / n - (sum / n) * (sum / n);
  CHECK(std::fabs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("repeated coarsening composes: m=2 twice equals m=4 once") {
  UniformRng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = rng.draw(16);
    const Eigen::VectorXd twice = coarsen(2, coarsen(2, x));
    const Eigen::VectorXd once = coarsen(4, x);
    CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("coarsen preserves the normalized total") {
  UniformRng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = rng.draw(8);
    const Eigen::VectorXd c = coarsen(2, x);
    const double fine_total = x.sum() / std::sqrt(8.0);
    const double coarse_total = c.sum() / std::sqrt(4.0);
    CHECK(std::fabs(fine_total - coarse_total) < 1e-14);
  }
}

TEST_CASE("level difference with perfect coupling vanishes") {
  auto coarse = [](const Eigen::VectorXd& z) { return z.squaredNorm(); };
  auto fine = [&](const Eigen::VectorXd& x) { return coarsen(2, x).squaredNorm(); };
  UniformRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    CHECK(level_difference(fine, coarse, 2, rng.draw(8)) == 0.0);
  }
}

TEST_CASE("linear terminal-value functionals are coupling-invariant under forward") {
  // terminal of the forward path is the normalized total, which coarsening
  // preserves, so the level difference vanishes identically
  auto terminal = [](const Eigen::VectorXd& x) {
    return x.sum() / std::sqrt(static_cast<double>(x.size()));
  };
  UniformRng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    CHECK(std::fabs(level_difference(terminal, terminal, 2, rng.draw(4))) < 1e-14);
  }
}

TEST_CASE("asian level-difference variance decays across levels") {
  const BsMarket market{0.04, 0.3, 100.0, 1.0};
  const AsianGbmLevelIntegrand f(market, 100.0, 2);
  UniformRng rng(7);
  const int n = 10000;
  double prev_var = std::numeric_limits<double>::infinity();
  for (int level = 3; level <= 6; ++level) {
    const Eigen::Index d = f.dimension(level);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(d);
      for (Eigen::Index j = 0; j < d; ++j)
        x[j] = normal_inv_cdf(std::max(rng.next(), 0x1.0p-53));
      const double v = f.eval(level, x) - f.eval(level - 1, coarsen(2, x));
      sum += v;
      sum2 += v * v;
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    CHECK(var < prev_var);
    prev_var = var;
  }
}

TEST_CASE("doubling allocation") {
  CHECK(allocate_doubling(2, 2) == std::vector<std::int64_t>{8, 4, 2});
  const auto n = allocate_doubling(64, 10);
  CHECK(n[0] == 65536);
  CHECK(n[10] == 64);
  // equal cost per level when the unit cost doubles with the level
  for (int l = 0; l <= 10; ++l) CHECK(n[l] * (1 << l) == 65536);
  CHECK_THROWS_AS(allocate_doubling(0, 3), std::invalid_argument);
}

TEST_CASE("cost-optimal allocation") {
  // single level: N = ceil(V / eps^2)
  {
    const auto n = allocate_cost_optimal(Eigen::VectorXd::Constant(1, 2.0),
                                         Eigen::VectorXd::Constant(1, 3.0), 0.1);
    CHECK(n[0] == 200);
  }
  // symmetric inputs give equal sample counts
  {
    const auto n = allocate_cost_optimal(Eigen::VectorXd::Constant(4, 1.0),
                                         Eigen::VectorXd::Constant(4, 2.0), 0.05);
    for (std::size_t i = 1; i < n.size(); ++i) CHECK(n[i] == n[0]);
  }
  // doubling costs and halving variances give the doubling profile
  {
    Eigen::VectorXd v(5), c(5);
    for (int l = 0; l < 5; ++l) {
      v[l] = std::pow(2.0, -l);
      c[l] = std::pow(2.0, l);
    }
    const auto n = allocate_cost_optimal(v, c, 0.01);
    for (int l = 1; l < 5; ++l) {
      CHECK(n[l] * 2 == doctest::Approx(static_cast<double>(n[l - 1])).epsilon(1e-3));
    }
    // the ceiling keeps the variance constraint satisfied
    double total = 0.0;
    for (int l = 0; l < 5; ++l) total += v[l] / static_cast<double>(n[l]);
    CHECK(total <= 0.01 * 0.01 + 1e-12);
  }
  CHECK_THROWS_AS(allocate_cost_optimal(Eigen::VectorXd::Constant(1, 1.0),
                                        Eigen::VectorXd::Constant(1, 1.0), 0.0),
                  std::invalid_argument);
}

TEST_CASE("ml_estimate with one level reduces to the plain mean") {
  const BsMarket market{0.04, 0.3, 100.0, 1.0};
  const AsianGbmLevelIntegrand f(market, 100.0, 2);
  std::vector<LevelSpec> levels{{0, 2, 256, 1.0}};
  MlOptions opts;
  opts.replications = 3;
  QmcPointSource source(11);
  const MlEstimate est = ml_estimate(levels, f, source, opts);

  QmcPointSource same(11);
  double expect = 0.0;
  {
    const RowMatrixXd pts = same.normals(0, 0, 256, 1);
    double sum = 0.0;
    for (int i = 0; i < 256; ++i) sum += f.eval(0, pts.row(i).transpose());
    expect = sum / 256.0;
  }
  CHECK(est.level_means.size() == 1);
  CHECK(est.rep_totals[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(est.total == doctest::Approx(est.level_means.sum()).epsilon(1e-14));
}

TEST_CASE("telescope collapses exactly under forced coupling") {
  const BsMarket market{0.04, 0.3, 100.0, 1.0};
  const AsianGbmLevelIntegrand f(market, 100.0, 2);
  const int top = 5;
  const std::int64_t n = 64;
  std::vector<LevelSpec> levels;
  for (int l = 0; l <= top; ++l) levels.push_back({l, 2, n, 1.0});

  MlOptions opts;
  opts.replications = 2;
  CoupledSource source(99, top, 2);
  const MlEstimate est = ml_estimate(levels, f, source, opts);

  // the telescoped total must equal the single-level fine estimate exactly
  CoupledSource again(99, top, 2);
  for (int r = 0; r < 2; ++r) {
    const RowMatrixXd fine = again.normals(r, top, n, f.dimension(top));
    double fine_mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) fine_mean += f.eval(top, fine.row(i).transpose());
    fine_mean /= static_cast<double>(n);
    CHECK(std::fabs(est.rep_totals[r] - fine_mean) <= 1e-12);
  }
}

TEST_CASE("constant-chain family collapses to the level-0 estimate") {
  // f^l = g(coarsen^l(x)): every coupled difference is identically zero
  struct Chain final : LevelIntegrand {
    Eigen::Index dimension(int level) const override { return Eigen::Index{1} << level; }
    double eval(int level, const Eigen::VectorXd& y) const override {
      Eigen::VectorXd z = y;
      for (int l = level; l > 0; --l) z = coarsen(2, z);
      return std::cos(z[0]);
    }
  } chain;

  std::vector<LevelSpec> levels;
  for (int l = 0; l <= 4; ++l) levels.push_back({l, 2, 128, 1.0});
  MlOptions opts;
  opts.replications = 2;
  McPointSource source(123);
  const MlEstimate est = ml_estimate(levels, chain, source, opts);
  for (int l = 1; l <= 4; ++l) CHECK(est.level_means[l] == 0.0);
  CHECK(est.total == est.level_means[0]);
}

TEST_CASE("mc and qmc sources are deterministic given the seed") {
  McPointSource a(5), b(5);
  CHECK((a.normals(1, 2, 16, 4) - b.normals(1, 2, 16, 4)).cwiseAbs().maxCoeff() == 0.0);
  QmcPointSource c(5), d(5);
  CHECK((c.normals(1, 2, 16, 4) - d.normals(1, 2, 16, 4)).cwiseAbs().maxCoeff() == 0.0);
  // different replications get different shifts
  CHECK((c.normals(1, 2, 16, 4) - d.normals(2, 2, 16, 4)).cwiseAbs().maxCoeff() > 0.0);
}
