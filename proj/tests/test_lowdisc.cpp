#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "qmc/lowdisc.hpp"

using namespace qmc;

namespace {

// Star discrepancy of 2-d points restricted to a g x g grid of anchored boxes.
double grid_star_discrepancy(const RowMatrixXd& pts, int g) {
  const Eigen::Index n = pts.rows();
  std::vector<std::vector<int>> counts(g + 1, std::vector<int>(g + 1, 0));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int cx = std::min(g, static_cast<int>(pts(i, 0) * g) + 1);
    const int cy = std::min(g, static_cast<int>(pts(i, 1) * g) + 1);
    for (int a = cx; a <= g; ++a)
      for (int b = cy; b <= g; ++b) counts[a][b] += 1;
  }
  double worst = 0.0;
  for (int a = 1; a <= g; ++a) {
    for (int b = 1; b <= g; ++b) {
      const double volume = (static_cast<double>(a) / g) * (static_cast<double>(b) / g);
      worst = std::max(worst, std::fabs(counts[a][b] / static_cast<double>(n) - volume));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("van der Corput radical inverse") {
  CHECK(van_der_corput(0, 2) == 0.0);
  CHECK(van_der_corput(1, 2) == 0.5);
  CHECK(van_der_corput(6, 2) == doctest::Approx(0.375).epsilon(1e-15));  // 110 -> 0.011
  CHECK(van_der_corput(4, 3) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));  // 11 in base 3
  CHECK_THROWS_AS(van_der_corput(3, 1), std::invalid_argument);
}

TEST_CASE("sobol first point is zero, dimension-1 stream matches the recurrence") {
  SobolGenerator gen(3);
  const Eigen::VectorXd p0 = gen.next();
  CHECK(p0.isZero(0.0));
  CHECK(gen.next()[0] == 0.5);
  CHECK(gen.next()[0] == 0.75);
  CHECK(gen.next()[0] == 0.25);
}

TEST_CASE("sobol dimension-1 prefix is a permutation of k/2^m") {
  SobolGenerator gen(1);
  const int m = 6;
  std::set<double> seen;
  for (int k = 0; k < (1 << m); ++k) seen.insert(gen.next()[0] * (1 << m));
  CHECK(seen.size() == (1u << m));
  CHECK(*seen.begin() == 0.0);
  CHECK(*seen.rbegin() == (1 << m) - 1);
}

TEST_CASE("sobol coordinates stay in [0,1) and visit dyadic intervals evenly") {
  SobolGenerator gen(8);
  const int m = 5;
  std::vector<int> hits(1 << m, 0);
  for (int k = 0; k < (1 << m); ++k) {
    const Eigen::VectorXd p = gen.next();
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      CHECK(p[j] >= 0.0);
      CHECK(p[j] < 1.0);
    }
    hits[static_cast<int>(p[0] * (1 << m))] += 1;
  }
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("sobol seek matches sequential iteration and supports cloning") {
  SobolGenerator a(16);
  for (int i = 0; i < 1000; ++i) a.next();
  SobolGenerator b(16);
  b.seek(1000);
  for (int i = 0; i < 16; ++i) {
    const Eigen::VectorXd pa = a.next();
    const Eigen::VectorXd pb = b.next();
    CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sobol 2-d beats seeded uniform points on grid star discrepancy") {
  const Eigen::Index n = 1 << 10;
  SobolGenerator gen(2);
  const double d_sobol = grid_star_discrepancy(gen.next_block(n), 64);
  UniformRng rng(321);
  const double d_unif = grid_star_discrepancy(rng.draw_matrix(n, 2), 64);
  CHECK(d_sobol < d_unif);
  CHECK(d_sobol < 0.01);
}

TEST_CASE("sobol mid-dimension pairs keep low discrepancy") {
  // catches a bad high-dimension initialization: projections (22,23) and
  // (31,32) of the first 2^10 points should still be far below random
  const Eigen::Index n = 1 << 10;
  SobolGenerator gen(40);
  const RowMatrixXd block = gen.next_block(n);
  UniformRng rng(99);
  const double d_unif = grid_star_discrepancy(rng.draw_matrix(n, 2), 64);
  for (int j : {21, 30}) {
    RowMatrixXd pair(n, 2);
    pair.col(0) = block.col(j);
    pair.col(1) = block.col(j + 1);
    CHECK(grid_star_discrepancy(pair, 64) < 0.6 * d_unif);
  }
}

TEST_CASE("sobol index overflow is an explicit error") {
  SobolGenerator gen(1);
  gen.seek((1ull << 32) - 1);
  CHECK_NOTHROW(gen.next());
  CHECK_THROWS_AS(gen.next(), std::overflow_error);
}

TEST_CASE("random shift wraps and preserves [0,1)") {
  RandomShift s{Eigen::Vector2d(0.2, 0.3)};
  const Eigen::VectorXd shifted = apply_shift(Eigen::Vector2d(0.9, 0.9), s);
  CHECK(shifted[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(shifted[1] == doctest::Approx(0.2).epsilon(1e-12));

  RandomShift zero{Eigen::Vector2d(0.0, 0.0)};
  const Eigen::VectorXd same = apply_shift(Eigen::Vector2d(0.25, 0.5), zero);
  CHECK(same[0] == 0.25);
  CHECK(same[1] == 0.5);

  CHECK_THROWS_AS(apply_shift(Eigen::Vector3d(0.1, 0.2, 0.3), s), std::invalid_argument);
}

TEST_CASE("shift then unshift is the identity up to 1e-15") {
  const RandomShift s = RandomShift::draw(8, 42);
  RandomShift inverse{Eigen::VectorXd(8)};
  for (int i = 0; i < 8; ++i) inverse.delta[i] = 1.0 - s.delta[i];
  UniformRng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd p = rng.draw(8);
    const Eigen::VectorXd back = apply_shift(apply_shift(p, s), inverse);
    for (int i = 0; i < 8; ++i) {
      double diff = back[i] - p[i];  // wrap-aware distance on the torus
      if (diff > 0.5) diff -= 1.0;
      if (diff < -0.5) diff += 1.0;
      CHECK(std::fabs(diff) < 1e-15);
    }
  }
}

TEST_CASE("shifted sobol stream has uniform per-coordinate mean") {
  const Eigen::Index n = 1 << 8;
  SobolGenerator gen(4);
  RowMatrixXd pts = gen.next_block(n);
  apply_shift_inplace(pts, RandomShift::draw(4, 2024));
  const double tol = 3.0 / std::sqrt(12.0 * static_cast<double>(n));
  for (int j = 0; j < 4; ++j) CHECK(std::fabs(pts.col(j).mean() - 0.5) < tol);
}

TEST_CASE("uniform rng determinism and basic statistics") {
  UniformRng a(12345), b(12345), c(54321);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 10; ++i) {
    const double va = a.next();
    all_equal = all_equal && (va == b.next());
    any_diff = any_diff || (va != c.next());
  }
  CHECK(all_equal);
  CHECK(any_diff);

  UniformRng rng(99);
  const Eigen::Index n = 100000;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.next();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 0.005);
}
