#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace qmc {

/// Blocks of points are stored row-major, one point per row.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Uniform pseudo-random generator on [0,1).
///
/// xoshiro256++ with splitmix64 seeding. Period 2^256 - 1; identical seeds
/// give identical streams and 1.0 is never produced (53-bit mantissa fill).
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed);

  std::uint64_t next_u64();
  double next();  // [0,1)

  /// n consecutive draws as a vector.
  Eigen::VectorXd draw(Eigen::Index n);

  /// n x d matrix of draws, filled row by row.
  RowMatrixXd draw_matrix(Eigen::Index n, Eigen::Index d);

 private:
  std::array<std::uint64_t, 4> state_;
};

/// Radical inverse of n in the given base. base < 2 throws.
double van_der_corput(std::uint64_t n, int base = 2);

/// Sobol sequence generator in dimension d, Gray-code increment form.
///
/// Point 0 is the all-zeros point. Direction numbers come from primitive
/// polynomials over GF(2) enumerated in the conventional order (by degree,
/// then by encoding value); initialization values for the low dimensions use
/// the standard published table, higher dimensions use a fixed deterministic
/// odd-integer stream so that arbitrary dimensions stay reproducible.
class SobolGenerator {
 public:
  static constexpr int kMaxDimension = 4096;
  static constexpr std::uint32_t kBits = 32;

  explicit SobolGenerator(int dimension);

  int dimension() const { return dim_; }
  std::uint64_t index() const { return index_; }

  /// Point at the current index; advances the index.
  Eigen::VectorXd next();

  /// Fill the next n points into an n x d matrix (row = point).
  RowMatrixXd next_block(Eigen::Index n);

  /// Reposition to an arbitrary index (direct Gray-code evaluation).
  void seek(std::uint64_t index);

 private:
  void advance_state();

  int dim_;
  std::uint64_t index_;
  std::vector<std::uint32_t> state_;       // current integer point, per dim
  std::vector<std::uint32_t> directions_;  // dim * kBits direction integers
};

/// Componentwise modulo-1 translation vector, derived from a seed.
struct RandomShift {
  Eigen::VectorXd delta;

  static RandomShift draw(Eigen::Index dim, std::uint64_t seed);
};

/// (p + s.delta) mod 1, componentwise. Dimension mismatch throws.
Eigen::VectorXd apply_shift(const Eigen::VectorXd& p, const RandomShift& s);

/// In-place row-wise shift of a block of points.
void apply_shift_inplace(Eigen::Ref<RowMatrixXd> points, const RandomShift& s);

}  // namespace qmc
