#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qmc/brownian.hpp"
#include "qmc/lowdisc.hpp"

using namespace qmc;

namespace {

Eigen::VectorXd normal_draw(UniformRng& rng, Eigen::Index d) {
  Eigen::VectorXd x(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    // inverse by bisection is overkill here; Box-Muller-free simple draw
    double u = rng.next();
    double v = rng.next();
    if (u <= 0.0) u = 0.5;
    x[i] = std::sqrt(-2.0 * std::log1p(-u)) * std::cos(2.0 * std::numbers::pi * v);
  }
  return x;
}

// Construction matrix: image of the standard basis under the path map.
template <typename PathFn>
Eigen::MatrixXd construction_matrix(Eigen::Index d, PathFn&& path) {
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    a.col(i) = path(e);
  }
  return a;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("time grid validation") {
  CHECK_THROWS_AS(TimeGrid(Eigen::Vector3d(0.0, 0.5, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(Eigen::Vector3d(0.2, 0.2, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(Eigen::Vector3d(0.5, 0.4, 1.0)), std::invalid_argument);
  const TimeGrid g = TimeGrid::even(4);
  CHECK(g.is_even());
  CHECK(g[3] == 1.0);
  CHECK_FALSE(TimeGrid(Eigen::Vector2d(0.25, 1.0)).is_even());
}

TEST_CASE("covariance matrix is min(tj, tk)") {
  const TimeGrid g(Eigen::Vector3d(0.1, 0.4, 0.9));
  const Eigen::MatrixXd sigma = cov_matrix(g);
  CHECK(sigma(0, 0) == 0.1);
  CHECK(sigma(0, 2) == 0.1);
  CHECK(sigma(2, 1) == 0.4);
  CHECK(sigma(2, 2) == 0.9);
  // even grid: (1/d) min(j,k)
  const Eigen::MatrixXd even = cov_matrix(TimeGrid::even(4));
  CHECK(even(1, 3) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("cumsum map equals multiplication by the cholesky factor") {
  CHECK(cumsum_map(Eigen::VectorXd::Constant(1, 3.5))[0] == 3.5);
  const Eigen::VectorXd two = cumsum_map(Eigen::Vector2d(1.0, 1.0));
  CHECK(two[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(two[1] == doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-15));

  const Eigen::Index d = 16;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k <= j; ++k) s(j, k) = 1.0 / std::sqrt(static_cast<double>(d));
  UniformRng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd y = normal_draw(rng, d);
    CHECK(max_abs(cumsum_map(y) - s * y) < 1e-14);
  }
}

TEST_CASE("forward path basics") {
  const TimeGrid single(Eigen::VectorXd::Constant(1, 1.0));
  CHECK(forward_path(single, Eigen::VectorXd::Constant(1, 1.7)).values[0] == 1.7);

  const TimeGrid g = TimeGrid::even(2);
  const DiscretePath p = forward_path(g, Eigen::Vector2d(1.0, 2.0));
  CHECK(p.values[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(p.values[1] == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-15));

  const Eigen::MatrixXd a = construction_matrix(
      8, [&](const Eigen::VectorXd& x) { return forward_path(TimeGrid::even(8), x).values; });
  CHECK(max_abs(a * a.transpose() - cov_matrix(TimeGrid::even(8))) < 1e-12);
}

TEST_CASE("bridge order starts at the terminal node and bisects") {
  const std::vector<int> order = bridge_order(8);
  CHECK(order == std::vector<int>{8, 4, 2, 6, 1, 3, 5, 7});
  const std::vector<int> odd = bridge_order(5);
  CHECK(odd[0] == 5);
  CHECK(odd.size() == 5);
}

TEST_CASE("bridge tables: left/right neighbors per the set definitions") {
  const TimeGrid g = TimeGrid::even(3);
  const BridgeTables tables(g, {3, 1, 2});
  const auto& e = tables.entries();
  CHECK(e[0].node == 3);
  CHECK(e[0].left == 0);
  CHECK(e[0].right == -1);
  CHECK(e[1].node == 1);
  CHECK(e[1].left == 0);
  CHECK(e[1].right == 3);
  CHECK(e[2].node == 2);
  CHECK(e[2].left == 1);
  CHECK(e[2].right == 3);
}

TEST_CASE("bridge conditional mean: midpoint fill is the average of endpoints") {
  // nodes 0.5 and 1, visiting order (2, 1), zero innovation at the midpoint
  const TimeGrid g = TimeGrid::even(2);
  const BridgeTables tables(g, {2, 1});
  const double b = 1.3;
  const Eigen::VectorXd values = tables.apply(Eigen::Vector2d(b, 0.0));
  CHECK(values[1] == doctest::Approx(b).epsilon(1e-15));
  CHECK(values[0] == doctest::Approx(b / 2.0).epsilon(1e-15));
}

TEST_CASE("bridge with identity permutation reproduces the forward path") {
  for (Eigen::Index d : {1, 3, 8}) {
    const TimeGrid g = TimeGrid::even(d);
    std::vector<int> identity(d);
    for (Eigen::Index i = 0; i < d; ++i) identity[i] = static_cast<int>(i) + 1;
    const BridgeTables tables(g, identity);
    UniformRng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd x = normal_draw(rng, d);
      CHECK(max_abs(tables.apply(x) - forward_path(g, x).values) < 1e-14);
    }
  }
}

TEST_CASE("bridge construction has the exact covariance on uneven grids") {
  Eigen::VectorXd nodes(5);
  nodes << 0.05, 0.3, 0.35, 0.8, 1.7;
  const TimeGrid g{nodes};
  const BridgeTables tables(g, bridge_order(5));
  const Eigen::MatrixXd a =
      construction_matrix(5, [&](const Eigen::VectorXd& x) { return tables.apply(x); });
  CHECK(max_abs(a * a.transpose() - cov_matrix(g)) < 1e-12);
}

TEST_CASE("bridge cost audit: at most 2d additions and 3d multiplications") {
  const Eigen::Index d = 1024;
  const TimeGrid g = TimeGrid::even(d);
  const BridgeTables tables(g, bridge_order(d));
  // walk the precomputed entries exactly as apply() does, counting flops
  std::int64_t adds = 0, mults = 0;
  Eigen::VectorXd values(d);
  UniformRng rng(3);
  const Eigen::VectorXd x = normal_draw(rng, d);
  for (std::size_t j = 0; j < tables.entries().size(); ++j) {
    const auto& e = tables.entries()[j];
    const double left = e.left == 0 ? 0.0 : values[e.left - 1];
    double v = e.coef_left * left + e.stddev * x[static_cast<Eigen::Index>(j)];
    mults += 2;
    adds += 1;
    if (e.right > 0) {
      v += e.coef_right * values[e.right - 1];
      mults += 1;
      adds += 1;
    }
    values[e.node - 1] = v;
  }
  CHECK(adds <= 2 * d);
  CHECK(mults <= 3 * d);
  CHECK(max_abs(values - tables.apply(x)) == 0.0);
}

TEST_CASE("pca closed form matches the numeric eigensolver oracle") {
  // d = 2 covariance identity
  const Eigen::MatrixXd a2 = pca_factors(Eigen::Index(2));
  Eigen::MatrixXd sigma2(2, 2);
  sigma2 << 0.5, 0.5, 0.5, 1.0;
  CHECK(max_abs(a2 * a2.transpose() - sigma2) < 1e-12);

  // d = 16: eigenvalues against both the closed form and Eigen's solver
  const Eigen::Index d = 16;
  const Eigen::VectorXd lambda = pca_eigenvalues_even(d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_matrix(TimeGrid::even(d)));
  for (Eigen::Index k = 0; k < d; ++k) {
    const double expected = 1.0 / (4.0 * d *
                                   std::pow(std::sin((2.0 * (k + 1) - 1.0) * std::numbers::pi /
                                                     (2.0 * (2.0 * d + 1.0))),
                                            2));
    CHECK(lambda[k] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(lambda[k] == doctest::Approx(solver.eigenvalues()[d - 1 - k]).epsilon(1e-10));
  }

  // descending order and orthogonal columns
  const Eigen::MatrixXd a = pca_factors(d);
  for (Eigen::Index k = 1; k < d; ++k) CHECK(lambda[k] <= lambda[k - 1]);
  const Eigen::MatrixXd gram = a.transpose() * a;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (i != j) CHECK(std::fabs(gram(i, j)) < 1e-10);
  CHECK(max_abs(a * a.transpose() - cov_matrix(TimeGrid::even(d))) < 1e-10);
}

TEST_CASE("pca on an uneven grid via the numeric fallback") {
  Eigen::VectorXd nodes(4);
  nodes << 0.1, 0.2, 0.9, 1.0;
  const TimeGrid g{nodes};
  const Eigen::MatrixXd a = pca_factors(g);
  CHECK(max_abs(a * a.transpose() - cov_matrix(g)) < 1e-10);
}

TEST_CASE("orthogonal path: identity equals forward, SV covariance identity") {
  const Eigen::Index d = 8;
  const TimeGrid g = TimeGrid::even(d);
  UniformRng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd x = normal_draw(rng, d);
    const DiscretePath via_orth = orthogonal_path(Eigen::MatrixXd::Identity(d, d), x, g);
    CHECK(max_abs(via_orth.values - forward_path(g, x).values) < 1e-14);
  }

  // any orthogonal V: (SV)(SV)^T = Sigma, via a random Householder product
  Eigen::VectorXd w = normal_draw(rng, d);
  Eigen::MatrixXd v =
      Eigen::MatrixXd::Identity(d, d) - 2.0 / w.squaredNorm() * (w * w.transpose());
  const Eigen::MatrixXd a =
      construction_matrix(d, [&](const Eigen::VectorXd& x) { return orthogonal_path(v, x, g).values; });
  CHECK(max_abs(a * a.transpose() - cov_matrix(g)) < 1e-12);

  // non-orthogonal input is rejected
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(d, d);
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(orthogonal_path(bad, Eigen::VectorXd::Zero(d), g), std::invalid_argument);
}

TEST_CASE("inverse haar transform is the dyadic bridge's orthogonal factor") {
  const Eigen::Index d = 8;
  const TimeGrid g = TimeGrid::even(d);
  const BridgeTables tables(g, bridge_order(d));
  const Eigen::MatrixXd via_bridge =
      construction_matrix(d, [&](const Eigen::VectorXd& x) { return tables.apply(x); });
  const Eigen::MatrixXd via_haar = construction_matrix(
      d, [&](const Eigen::VectorXd& x) { return cumsum_map(inverse_haar(x)); });
  CHECK(max_abs(via_bridge - via_haar) < 1e-12);

  // the haar matrix itself is orthogonal
  const Eigen::MatrixXd h =
      construction_matrix(d, [](const Eigen::VectorXd& x) { return inverse_haar(x); });
  CHECK(is_orthogonal(h, 1e-12));
  CHECK_THROWS_AS(inverse_haar(Eigen::VectorXd::Zero(6)), std::invalid_argument);
}

TEST_CASE("rescaling an even path to a target grid") {
  // target = even grid: identity
  const TimeGrid even = TimeGrid::even(4);
  UniformRng rng(31);
  const Eigen::VectorXd x = normal_draw(rng, 4);
  const DiscretePath p = forward_path(even, x);
  CHECK(max_abs(rescale_to_grid(p, even).values - p.values) < 1e-14);

  // d = 2 hand check onto (0.25, 1)
  const TimeGrid target2(Eigen::Vector2d(0.25, 1.0));
  const Eigen::MatrixXd a2 = construction_matrix(2, [&](const Eigen::VectorXd& e) {
    return rescale_to_grid(forward_path(TimeGrid::even(2), e), target2).values;
  });
  CHECK(max_abs(a2 * a2.transpose() - cov_matrix(target2)) < 1e-12);

  // d = 16 onto an uneven grid: covariance identity again
  Eigen::VectorXd nodes(16);
  for (int i = 0; i < 16; ++i) nodes[i] = 0.01 * (i + 1) * (i + 1);
  const TimeGrid target{nodes};
  const Eigen::MatrixXd a = construction_matrix(16, [&](const Eigen::VectorXd& e) {
    return rescale_to_grid(forward_path(TimeGrid::even(16), e), target).values;
  });
  CHECK(max_abs(a * a.transpose() - cov_matrix(target)) < 1e-12);
}

TEST_CASE("every construction satisfies A A^T = Sigma for d in 1..32") {
  for (Eigen::Index d : {1, 2, 4, 8, 16, 32}) {
    const TimeGrid g = TimeGrid::even(d);
    const Eigen::MatrixXd sigma = cov_matrix(g);
    std::vector<PathConstruction> constructions;
    constructions.emplace_back(Forward{});
    constructions.emplace_back(Bridge{});
    constructions.emplace_back(Pca{});
    if (d >= 2) constructions.emplace_back(BridgePerBlock{2});
    {
      // a fixed non-trivial orthogonal matrix (Householder)
      Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(d, 1.0, static_cast<double>(d));
      Eigen::MatrixXd v =
          Eigen::MatrixXd::Identity(d, d) - 2.0 / w.squaredNorm() * (w * w.transpose());
      constructions.emplace_back(Orthogonal{v});
    }
    for (const auto& c : constructions) {
      const Eigen::MatrixXd a = construction_matrix(
          d, [&](const Eigen::VectorXd& x) { return construct_path(c, g, x).values; });
      CHECK(max_abs(a * a.transpose() - sigma) <= 1e-10);
    }
  }
}

TEST_CASE("constructions are linear in the input") {
  const Eigen::Index d = 8;
  const TimeGrid g = TimeGrid::even(d);
  UniformRng rng(77);
  const Eigen::VectorXd x = normal_draw(rng, d);
  const Eigen::VectorXd y = normal_draw(rng, d);
  const double alpha = 0.7, beta = -1.3;
  for (const PathConstruction& c :
       std::vector<PathConstruction>{Forward{}, Bridge{}, Pca{}, BridgePerBlock{2}}) {
    const Eigen::VectorXd combined = construct_path(c, g, alpha * x + beta * y).values;
    const Eigen::VectorXd split = alpha * construct_path(c, g, x).values +
                                  beta * construct_path(c, g, y).values;
    CHECK(max_abs(combined - split) < 1e-12);
  }
}

TEST_CASE("normal transforms are orthogonal and consistent with each other") {
  const Eigen::Index d = 16;
  // every named transform's matrix satisfies V V^T = I
  for (const PathConstruction& c :
       std::vector<PathConstruction>{Forward{}, Bridge{}, Pca{}, BridgePerBlock{2}}) {
    const auto t = make_transform(c, d);
    const Eigen::MatrixXd v = construction_matrix(
        d, [&](const Eigen::VectorXd& x) { return t->apply(x); });
    CHECK(is_orthogonal(v, 1e-10));
  }

  // batch apply matches single apply
  const auto pca = make_transform(Pca{}, d);
  UniformRng rng(5);
  RowMatrixXd block(10, d);
  for (int i = 0; i < 10; ++i) block.row(i) = normal_draw(rng, d).transpose();
  RowMatrixXd transformed = block;
  pca->apply_rows(transformed);
  for (int i = 0; i < 10; ++i) {
    CHECK(max_abs(transformed.row(i).transpose() - pca->apply(block.row(i).transpose())) < 1e-12);
  }
}

TEST_CASE("householder transform maps w to ||w|| e1") {
  Eigen::VectorXd w(5);
  w << 0.3, -1.2, 0.5, 2.0, -0.1;
  const HouseholderTransform t(w);
  CHECK_FALSE(t.identity());
  const Eigen::VectorXd image = t.apply(w);
  CHECK(std::fabs(image[0] - w.norm()) < 1e-10);
  for (int i = 1; i < 5; ++i) CHECK(std::fabs(image[i]) < 1e-10);
  CHECK(is_orthogonal(t.matrix(), 1e-12));

  // already along e1: identity up to sign
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1[0] = 2.5;
  CHECK(HouseholderTransform(e1).identity());
  // zero vector: identity
  CHECK(HouseholderTransform(Eigen::VectorXd::Zero(3)).identity());
}
