#pragma once

#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace qmc {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Strictly increasing time nodes 0 < t_1 < ... < t_d.
class TimeGrid {
 public:
  explicit TimeGrid(Eigen::VectorXd nodes);
  static TimeGrid even(Eigen::Index d, double horizon = 1.0);

  Eigen::Index size() const { return nodes_.size(); }
  double operator[](Eigen::Index i) const { return nodes_[i]; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  double horizon() const { return nodes_[nodes_.size() - 1]; }
  bool is_even(double tol = 1e-12) const;

 private:
  Eigen::VectorXd nodes_;
};

/// Covariance matrix (min(t_j, t_k))_{jk} of a discrete Brownian path.
Eigen::MatrixXd cov_matrix(const TimeGrid& grid);

struct DiscretePath {
  TimeGrid grid;
  Eigen::VectorXd values;
};

/// Cumulative sum divided by sqrt(d): multiplication by the Cholesky factor S
/// of the even-grid covariance matrix, without materializing S.
Eigen::VectorXd cumsum_map(const Eigen::VectorXd& y);

/// Step-by-step construction: B_{t_1} = sqrt(t_1) x_1,
/// B_{t_{k+1}} = B_{t_k} + sqrt(t_{k+1} - t_k) x_{k+1}.
DiscretePath forward_path(const TimeGrid& grid, const Eigen::VectorXd& x);

/// Default bridge visiting order: terminal node first, then midpoints by
/// repeated bisection (the van der Corput order when d is a power of two).
/// Returned indices are 1-based node numbers.
std::vector<int> bridge_order(Eigen::Index d);

/// Precomputed conditioning data for the Brownian bridge under an arbitrary
/// visiting order. Entries do not depend on the random input.
class BridgeTables {
 public:
  struct Entry {
    int node;          // 1-based index being constructed
    int left;          // nearest already-constructed index below (0 = time origin)
    int right;         // nearest already-constructed index above (-1 = none)
    double coef_left;
    double coef_right;
    double stddev;
  };

  BridgeTables(const TimeGrid& grid, std::vector<int> order);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Entry>& entries() const { return entries_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

 private:
  TimeGrid grid_;
  std::vector<Entry> entries_;
};

inline BridgeTables build_bridge_tables(const TimeGrid& grid, std::vector<int> order) {
  return BridgeTables(grid, std::move(order));
}

DiscretePath bridge_path(const BridgeTables& tables, const Eigen::VectorXd& x);

/// Eigenvalues of the even-grid covariance matrix, descending:
/// lambda_k = 1 / (4 d sin^2((2k-1) pi / (2 (2d+1)))).
Eigen::VectorXd pca_eigenvalues_even(Eigen::Index d);

/// PCA construction matrix A = V D^{1/2} with A A^T = Sigma, columns ordered
/// by descending eigenvalue. Closed-form sine basis for the even unit grid;
/// the TimeGrid overload falls back to a numeric eigendecomposition when the
/// grid is uneven.
Eigen::MatrixXd pca_factors(Eigen::Index d);
Eigen::MatrixXd pca_factors(const TimeGrid& grid);

/// Inverse (synthesis) Haar transform, d = 2^k, O(d) butterfly. This is the
/// orthogonal factor of the dyadic-order Brownian bridge.
Eigen::VectorXd inverse_haar(const Eigen::VectorXd& x);

/// Checks ||V V^T - I||_max <= tol.
bool is_orthogonal(const Eigen::MatrixXd& v, double tol = 1e-10);

/// B = S V x on an even grid (scaled by sqrt(horizon)). Throws if V is not
/// orthogonal or the grid is uneven.
DiscretePath orthogonal_path(const Eigen::MatrixXd& v, const Eigen::VectorXd& x,
                             const TimeGrid& grid);

/// Turns an even-grid path on t_j = j/d into a path on an arbitrary grid by
/// rescaling increments and re-accumulating.
DiscretePath rescale_to_grid(const DiscretePath& even_path, const TimeGrid& target);

// ---------------------------------------------------------------------------
// Orthogonal factors as reusable transforms.
//
// Every construction of a discrete Brownian path factors as A = S V with V
// orthogonal; the V part is what matters for quasi-Monte Carlo, so it is
// exposed as a standalone transform on the standard normal input vector.
// ---------------------------------------------------------------------------

class NormalTransform {
 public:
  virtual ~NormalTransform() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) const = 0;
  /// Transforms every row of a block of points. Default: row-by-row apply.
  virtual void apply_rows(Eigen::Ref<RowMatrixXd> points) const;
};

class IdentityTransform final : public NormalTransform {
 public:
  explicit IdentityTransform(Eigen::Index d) : dim_(d) {}
  Eigen::Index dimension() const override { return dim_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override { return x; }
  void apply_rows(Eigen::Ref<RowMatrixXd>) const override {}

 private:
  Eigen::Index dim_;
};

/// Inverse Haar butterfly (d = 2^k).
class HaarTransform final : public NormalTransform {
 public:
  explicit HaarTransform(Eigen::Index d);
  Eigen::Index dimension() const override { return dim_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;

 private:
  Eigen::Index dim_;
};

/// Orthogonal factor of the bridge with an arbitrary visiting order,
/// applied as sqrt(d) * diff(bridge_path(x)) on the even unit grid.
class BridgeTransform final : public NormalTransform {
 public:
  BridgeTransform(Eigen::Index d, std::vector<int> order);
  explicit BridgeTransform(Eigen::Index d) : BridgeTransform(d, bridge_order(d)) {}
  Eigen::Index dimension() const override;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;

 private:
  BridgeTables tables_;
};

/// Orthogonal factor of the even-grid PCA construction (dense apply).
class PcaTransform final : public NormalTransform {
 public:
  explicit PcaTransform(Eigen::Index d);
  Eigen::Index dimension() const override { return v_.rows(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override { return v_ * x; }
  void apply_rows(Eigen::Ref<RowMatrixXd> points) const override;
  const Eigen::MatrixXd& matrix() const { return v_; }

 private:
  Eigen::MatrixXd v_;
};

/// Householder reflection mapping w/||w|| to the first basis vector,
/// applied as a rank-one update.
class HouseholderTransform final : public NormalTransform {
 public:
  /// Identity when w is (numerically) zero or already along e_1.
  explicit HouseholderTransform(const Eigen::VectorXd& w);
  Eigen::Index dimension() const override { return dim_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;
  void apply_rows(Eigen::Ref<RowMatrixXd> points) const override;
  bool identity() const { return identity_; }
  Eigen::MatrixXd matrix() const;

 private:
  Eigen::Index dim_;
  bool identity_;
  Eigen::VectorXd v_;  // reflection axis, ||v||^2 stored alongside
  double vtv_ = 0.0;
};

/// Arbitrary dense orthogonal matrix; orthogonality checked at construction.
class DenseTransform final : public NormalTransform {
 public:
  explicit DenseTransform(Eigen::MatrixXd v);
  Eigen::Index dimension() const override { return v_.rows(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override { return v_ * x; }
  void apply_rows(Eigen::Ref<RowMatrixXd> points) const override;
  const Eigen::MatrixXd& matrix() const { return v_; }

 private:
  Eigen::MatrixXd v_;
};

/// Applies an inner transform independently to k round-robin interleaved
/// blocks: block b holds coordinates b, b+k, b+2k, ...
class BlockInterleavedTransform final : public NormalTransform {
 public:
  BlockInterleavedTransform(Eigen::Index d, int blocks,
                            std::shared_ptr<const NormalTransform> inner);
  Eigen::Index dimension() const override { return dim_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;

 private:
  Eigen::Index dim_;
  int blocks_;
  std::shared_ptr<const NormalTransform> inner_;
};

// ---------------------------------------------------------------------------
// Construction selector.
// ---------------------------------------------------------------------------

struct Forward {};
struct Bridge {
  std::vector<int> order;  // empty = default bisection order
};
struct Pca {};
struct Orthogonal {
  Eigen::MatrixXd v;
};
struct BridgePerBlock {
  int blocks = 2;
};

using PathConstruction = std::variant<Forward, Bridge, Pca, Orthogonal, BridgePerBlock>;

/// The orthogonal factor V of the construction on the even grid of size d.
std::shared_ptr<const NormalTransform> make_transform(const PathConstruction& c, Eigen::Index d);

/// Builds the path on an arbitrary grid from d standard normals.
DiscretePath construct_path(const PathConstruction& c, const TimeGrid& grid,
                            const Eigen::VectorXd& x);

}  // namespace qmc
