#include "qmc/brownian.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace qmc {

// ---------------------------------------------------------------------------
// TimeGrid
// ---------------------------------------------------------------------------

TimeGrid::TimeGrid(Eigen::VectorXd nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 1) throw std::invalid_argument("TimeGrid: needs at least one node");
  if (!(nodes_[0] > 0.0)) throw std::invalid_argument("TimeGrid: t_1 must be positive");
  for (Eigen::Index i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1]))
      throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
  }
}

TimeGrid TimeGrid::even(Eigen::Index d, double horizon) {
  if (d < 1) throw std::invalid_argument("TimeGrid: d must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
  Eigen::VectorXd nodes(d);
  for (Eigen::Index j = 0; j < d; ++j)
    nodes[j] = horizon * static_cast<double>(j + 1) / static_cast<double>(d);
  return TimeGrid(std::move(nodes));
}

bool TimeGrid::is_even(double tol) const {
  const Eigen::Index d = nodes_.size();
  const double step = horizon() / static_cast<double>(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (std::fabs(nodes_[j] - step * static_cast<double>(j + 1)) > tol * horizon()) return false;
  }
  return true;
}

Eigen::MatrixXd cov_matrix(const TimeGrid& grid) {
  const Eigen::Index d = grid.size();
  Eigen::MatrixXd sigma(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k < d; ++k) sigma(j, k) = std::min(grid[j], grid[k]);
  return sigma;
}

// ---------------------------------------------------------------------------
// Forward construction
// ---------------------------------------------------------------------------

Eigen::VectorXd cumsum_map(const Eigen::VectorXd& y) {
  const Eigen::Index d = y.size();
  if (d < 1) throw std::invalid_argument("cumsum_map: empty input");
  Eigen::VectorXd out(d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    acc += y[i];
    out[i] = acc * scale;
  }
  return out;
}

DiscretePath forward_path(const TimeGrid& grid, const Eigen::VectorXd& x) {
  if (x.size() != grid.size()) throw std::invalid_argument("forward_path: dimension mismatch");
  Eigen::VectorXd values(x.size());
  double prev_t = 0.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    acc += std::sqrt(grid[k] - prev_t) * x[k];
    values[k] = acc;
    prev_t = grid[k];
  }
  return {grid, std::move(values)};
}

// ---------------------------------------------------------------------------
// Brownian bridge
// ---------------------------------------------------------------------------

std::vector<int> bridge_order(Eigen::Index d) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(d));
  order.push_back(static_cast<int>(d));
  std::vector<std::pair<int, int>> queue{{0, static_cast<int>(d)}};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const auto [lo, hi] = queue[q];
    if (hi - lo < 2) continue;
    const int mid = (lo + hi) / 2;
    order.push_back(mid);
    queue.emplace_back(lo, mid);
    queue.emplace_back(mid, hi);
  }
  return order;
}

BridgeTables::BridgeTables(const TimeGrid& grid, std::vector<int> order) : grid_(grid) {
  const Eigen::Index d = grid.size();
  if (static_cast<Eigen::Index>(order.size()) != d)
    throw std::invalid_argument("BridgeTables: order size mismatch");
  std::vector<bool> seen(static_cast<std::size_t>(d) + 1, false);
  for (int node : order) {
    if (node < 1 || node > d || seen[static_cast<std::size_t>(node)])
      throw std::invalid_argument("BridgeTables: order is not a permutation of 1..d");
    seen[static_cast<std::size_t>(node)] = true;
  }

  auto node_time = [&](int idx) { return idx == 0 ? 0.0 : grid[idx - 1]; };

  entries_.reserve(static_cast<std::size_t>(d));
  std::set<int> constructed;
  for (int node : order) {
    Entry e{};
    e.node = node;
    auto above = constructed.upper_bound(node);
    e.right = above == constructed.end() ? -1 : *above;
    e.left = above == constructed.begin() ? 0 : *std::prev(above);
    const double ts = node_time(node);
    const double tl = node_time(e.left);
    if (e.right < 0) {
      e.coef_left = 1.0;
      e.coef_right = 0.0;
      e.stddev = std::sqrt(ts - tl);
    } else {
      const double tr = node_time(e.right);
      e.coef_left = (tr - ts) / (tr - tl);
      e.coef_right = (ts - tl) / (tr - tl);
      e.stddev = std::sqrt((ts - tl) * (tr - ts) / (tr - tl));
    }
    entries_.push_back(e);
    constructed.insert(node);
  }
}

Eigen::VectorXd BridgeTables::apply(const Eigen::VectorXd& x) const {
  const Eigen::Index d = grid_.size();
  if (x.size() != d) throw std::invalid_argument("bridge_path: dimension mismatch");
  Eigen::VectorXd values(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Entry& e = entries_[static_cast<std::size_t>(j)];
    const double left_value = e.left == 0 ? 0.0 : values[e.left - 1];
    double v = e.coef_left * left_value + e.stddev * x[j];
    if (e.right > 0) v += e.coef_right * values[e.right - 1];
    values[e.node - 1] = v;
  }
  return values;
}

DiscretePath bridge_path(const BridgeTables& tables, const Eigen::VectorXd& x) {
  return {tables.grid(), tables.apply(x)};
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

Eigen::VectorXd pca_eigenvalues_even(Eigen::Index d) {
  Eigen::VectorXd lambda(d);
  const double denom = 2.0 * (2.0 * static_cast<double>(d) + 1.0);
  for (Eigen::Index k = 1; k <= d; ++k) {
    const double s = std::sin(static_cast<double>(2 * k - 1) * std::numbers::pi / denom);
    lambda[k - 1] = 1.0 / (4.0 * static_cast<double>(d) * s * s);
  }
  return lambda;
}

Eigen::MatrixXd pca_factors(Eigen::Index d) {
  const Eigen::VectorXd lambda = pca_eigenvalues_even(d);
  Eigen::MatrixXd a(d, d);
  const double dd = static_cast<double>(2 * d + 1);
  const double norm = 2.0 / std::sqrt(dd);
  for (Eigen::Index k = 1; k <= d; ++k) {
    const double freq = static_cast<double>(2 * k - 1) * std::numbers::pi / dd;
    const double scale = norm * std::sqrt(lambda[k - 1]);
    for (Eigen::Index j = 1; j <= d; ++j) {
      a(j - 1, k - 1) = scale * std::sin(freq * static_cast<double>(j));
    }
  }
  return a;
}

Eigen::MatrixXd pca_factors(const TimeGrid& grid) {
  const Eigen::Index d = grid.size();
  if (grid.is_even()) {
    return std::sqrt(grid.horizon()) * pca_factors(d);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_matrix(grid));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("pca_factors: eigendecomposition failed");
  // Eigen returns ascending eigenvalues; reorder to descending.
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index src = d - 1 - k;
    a.col(k) = solver.eigenvectors().col(src) * std::sqrt(std::max(0.0, solver.eigenvalues()[src]));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Haar and orthogonal paths
// ---------------------------------------------------------------------------

Eigen::VectorXd inverse_haar(const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  if (d < 1 || (d & (d - 1)) != 0)
    throw std::invalid_argument("inverse_haar: dimension must be a power of two");
  Eigen::VectorXd y(d);
  y[0] = x[0];
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (Eigen::Index len = 1; len < d; len *= 2) {
    for (Eigen::Index i = len - 1; i >= 0; --i) {
      const double a = y[i];
      const double w = x[len + i];
      y[2 * i] = (a + w) * inv_sqrt2;
      y[2 * i + 1] = (a - w) * inv_sqrt2;
    }
  }
  return y;
}

bool is_orthogonal(const Eigen::MatrixXd& v, double tol) {
  if (v.rows() != v.cols()) return false;
  const Eigen::MatrixXd g = v * v.transpose() - Eigen::MatrixXd::Identity(v.rows(), v.cols());
  return g.cwiseAbs().maxCoeff() <= tol;
}

DiscretePath orthogonal_path(const Eigen::MatrixXd& v, const Eigen::VectorXd& x,
                             const TimeGrid& grid) {
  if (!is_orthogonal(v)) throw std::invalid_argument("orthogonal_path: V is not orthogonal");
  if (v.rows() != grid.size() || x.size() != grid.size())
    throw std::invalid_argument("orthogonal_path: dimension mismatch");
  if (!grid.is_even()) throw std::invalid_argument("orthogonal_path: grid must be even");
  Eigen::VectorXd values = std::sqrt(grid.horizon()) * cumsum_map(v * x);
  return {grid, std::move(values)};
}

DiscretePath rescale_to_grid(const DiscretePath& even_path, const TimeGrid& target) {
  const Eigen::Index d = even_path.values.size();
  if (target.size() != d) throw std::invalid_argument("rescale_to_grid: dimension mismatch");
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  Eigen::VectorXd values(d);
  double prev_b = 0.0;
  double prev_t = 0.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    acc += sqrt_d * std::sqrt(target[k] - prev_t) * (even_path.values[k] - prev_b);
    values[k] = acc;
    prev_b = even_path.values[k];
    prev_t = target[k];
  }
  return {target, std::move(values)};
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

void NormalTransform::apply_rows(Eigen::Ref<RowMatrixXd> points) const {
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    points.row(i) = apply(points.row(i).transpose()).transpose();
  }
}

HaarTransform::HaarTransform(Eigen::Index d) : dim_(d) {
  if (d < 1 || (d & (d - 1)) != 0)
    throw std::invalid_argument("HaarTransform: dimension must be a power of two");
}

Eigen::VectorXd HaarTransform::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("HaarTransform: dimension mismatch");
  return inverse_haar(x);
}

BridgeTransform::BridgeTransform(Eigen::Index d, std::vector<int> order)
    : tables_(TimeGrid::even(d), std::move(order)) {}

Eigen::Index BridgeTransform::dimension() const { return tables_.grid().size(); }

Eigen::VectorXd BridgeTransform::apply(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd path = tables_.apply(x);
  const Eigen::Index d = path.size();
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  Eigen::VectorXd y(d);
  double prev = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    y[k] = sqrt_d * (path[k] - prev);
    prev = path[k];
  }
  return y;
}

PcaTransform::PcaTransform(Eigen::Index d) {
  // V = S^{-1} A: difference the rows of A and scale by sqrt(d).
  const Eigen::MatrixXd a = pca_factors(d);
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  v_.resize(d, d);
  v_.row(0) = sqrt_d * a.row(0);
  for (Eigen::Index j = 1; j < d; ++j) v_.row(j) = sqrt_d * (a.row(j) - a.row(j - 1));
}

void PcaTransform::apply_rows(Eigen::Ref<RowMatrixXd> points) const {
  points = points * v_.transpose();
}

HouseholderTransform::HouseholderTransform(const Eigen::VectorXd& w) : dim_(w.size()) {
  const double norm = w.norm();
  if (norm == 0.0) {
    identity_ = true;
    return;
  }
  Eigen::VectorXd v = w / norm;
  v[0] -= 1.0;
  vtv_ = v.squaredNorm();
  if (vtv_ < 1e-24) {
    identity_ = true;
    return;
  }
  identity_ = false;
  v_ = std::move(v);
}

Eigen::VectorXd HouseholderTransform::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("HouseholderTransform: dimension mismatch");
  if (identity_) return x;
  return x - v_ * (2.0 * v_.dot(x) / vtv_);
}

void HouseholderTransform::apply_rows(Eigen::Ref<RowMatrixXd> points) const {
  if (identity_) return;
  const Eigen::VectorXd proj = points * v_ * (2.0 / vtv_);
  points.noalias() -= proj * v_.transpose();
}

Eigen::MatrixXd HouseholderTransform::matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(dim_, dim_);
  if (!identity_) m -= (2.0 / vtv_) * (v_ * v_.transpose());
  return m;
}

DenseTransform::DenseTransform(Eigen::MatrixXd v) : v_(std::move(v)) {
  if (!is_orthogonal(v_)) throw std::invalid_argument("DenseTransform: matrix is not orthogonal");
}

void DenseTransform::apply_rows(Eigen::Ref<RowMatrixXd> points) const {
  points = points * v_.transpose();
}

BlockInterleavedTransform::BlockInterleavedTransform(Eigen::Index d, int blocks,
                                                     std::shared_ptr<const NormalTransform> inner)
    : dim_(d), blocks_(blocks), inner_(std::move(inner)) {
  if (blocks < 1 || d % blocks != 0)
    throw std::invalid_argument("BlockInterleavedTransform: blocks must divide the dimension");
  if (inner_->dimension() != d / blocks)
    throw std::invalid_argument("BlockInterleavedTransform: inner transform dimension mismatch");
}

Eigen::VectorXd BlockInterleavedTransform::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("BlockInterleavedTransform: size mismatch");
  const Eigen::Index block_len = dim_ / blocks_;
  Eigen::VectorXd out(dim_);
  Eigen::VectorXd block(block_len);
  for (int b = 0; b < blocks_; ++b) {
    for (Eigen::Index i = 0; i < block_len; ++i) block[i] = x[b + i * blocks_];
    const Eigen::VectorXd t = inner_->apply(block);
    for (Eigen::Index i = 0; i < block_len; ++i) out[b + i * blocks_] = t[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Construction selector
// ---------------------------------------------------------------------------

std::shared_ptr<const NormalTransform> make_transform(const PathConstruction& c, Eigen::Index d) {
  struct Visitor {
    Eigen::Index d;
    std::shared_ptr<const NormalTransform> operator()(const Forward&) const {
      return std::make_shared<IdentityTransform>(d);
    }
    std::shared_ptr<const NormalTransform> operator()(const Bridge& b) const {
      if (b.order.empty() && (d & (d - 1)) == 0)
        return std::make_shared<HaarTransform>(d);
      return std::make_shared<BridgeTransform>(d, b.order.empty() ? bridge_order(d) : b.order);
    }
    std::shared_ptr<const NormalTransform> operator()(const Pca&) const {
      return std::make_shared<PcaTransform>(d);
    }
    std::shared_ptr<const NormalTransform> operator()(const Orthogonal& o) const {
      return std::make_shared<DenseTransform>(o.v);
    }
    std::shared_ptr<const NormalTransform> operator()(const BridgePerBlock& b) const {
      if (b.blocks < 1 || d % b.blocks != 0)
        throw std::invalid_argument("BridgePerBlock: blocks must divide d");
      const Eigen::Index inner_d = d / b.blocks;
      std::shared_ptr<const NormalTransform> inner;
      if ((inner_d & (inner_d - 1)) == 0)
        inner = std::make_shared<HaarTransform>(inner_d);
      else
        inner = std::make_shared<BridgeTransform>(inner_d);
      return std::make_shared<BlockInterleavedTransform>(d, b.blocks, std::move(inner));
    }
  };
  return std::visit(Visitor{d}, c);
}

DiscretePath construct_path(const PathConstruction& c, const TimeGrid& grid,
                            const Eigen::VectorXd& x) {
  const Eigen::Index d = grid.size();
  if (x.size() != d) throw std::invalid_argument("construct_path: dimension mismatch");
  if (std::holds_alternative<Forward>(c)) return forward_path(grid, x);
  if (const auto* b = std::get_if<Bridge>(&c)) {
    BridgeTables tables(grid, b->order.empty() ? bridge_order(d) : b->order);
    return bridge_path(tables, x);
  }
  if (std::holds_alternative<Pca>(c)) {
    return {grid, pca_factors(grid) * x};
  }
  // Orthogonal factors are defined on the even unit grid; rescale to target.
  auto transform = make_transform(c, d);
  DiscretePath unit{TimeGrid::even(d), cumsum_map(transform->apply(x))};
  return rescale_to_grid(unit, grid);
}

}  // namespace qmc
