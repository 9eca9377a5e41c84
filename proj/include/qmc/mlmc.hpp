#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qmc/brownian.hpp"
#include "qmc/pricing.hpp"

namespace qmc {

/// Block-averaging map with entries 1/sqrt(m): turns m^{l+1} fine-level
/// standard normals into m^l valid coarse-level ones. The input length must
/// be a positive power of m.
Eigen::VectorXd coarsen(int m, const Eigen::VectorXd& x);

/// f_fine(x) - f_coarse(coarsen(x)): the coupled level difference, with the
/// same input feeding both sides.
double level_difference(const std::function<double(const Eigen::VectorXd&)>& f_fine,
                        const std::function<double(const Eigen::VectorXd&)>& f_coarse, int m,
                        const Eigen::VectorXd& x);

struct LevelSpec {
  int level = 0;        // l >= 0
  int refinement = 2;   // m >= 2
  std::int64_t samples = 1;
  double unit_cost = 0.0;

  Eigen::Index dimension() const;  // m^l
};

/// N_l = n_finest * 2^{L - l}, the doubling allocation.
std::vector<std::int64_t> allocate_doubling(std::int64_t n_finest, int levels);

/// Lagrangian cost minimizer of sum N_l c_l subject to sum V_l / N_l <= eps^2:
/// N_l = ceil(eps^{-2} sqrt(V_l / c_l) sum_k sqrt(V_k c_k)).
std::vector<std::int64_t> allocate_cost_optimal(const Eigen::VectorXd& variances,
                                                const Eigen::VectorXd& costs, double eps);

/// Family of forward-wired level integrands f^0..f^L.
class LevelIntegrand {
 public:
  virtual ~LevelIntegrand() = default;
  virtual Eigen::Index dimension(int level) const = 0;
  virtual double eval(int level, const Eigen::VectorXd& y) const = 0;
};

/// Discounted fixed-strike Asian call on an exact geometric Brownian path
/// over the even grid with m^l nodes, built forward from the input normals.
class AsianGbmLevelIntegrand final : public LevelIntegrand {
 public:
  AsianGbmLevelIntegrand(BsMarket market, double strike, int refinement = 2);
  Eigen::Index dimension(int level) const override;
  double eval(int level, const Eigen::VectorXd& y) const override;

 private:
  BsMarket market_;
  double strike_;
  int refinement_;
  double discount_;
};

/// Supplies the fine-level standard normal inputs, one matrix per
/// (replication, level).
class MlPointSource {
 public:
  virtual ~MlPointSource() = default;
  virtual RowMatrixXd normals(int replication, int level, std::int64_t n,
                              Eigen::Index dim) = 0;
};

/// Pseudo-random normals (inversion of a seeded uniform stream).
class McPointSource final : public MlPointSource {
 public:
  explicit McPointSource(std::uint64_t seed) : seed_(seed) {}
  RowMatrixXd normals(int replication, int level, std::int64_t n, Eigen::Index dim) override;

 private:
  std::uint64_t seed_;
};

/// Randomly shifted Sobol points through the inverse normal CDF; every
/// (replication, level) pair gets an independent shift.
class QmcPointSource final : public MlPointSource {
 public:
  explicit QmcPointSource(std::uint64_t seed, bool skip_zero_point = false)
      : seed_(seed), skip_zero_(skip_zero_point) {}
  RowMatrixXd normals(int replication, int level, std::int64_t n, Eigen::Index dim) override;

 private:
  std::uint64_t seed_;
  bool skip_zero_;
};

struct MlOptions {
  int replications = 100;
  /// Optional per-level orthogonal transforms applied to the input normals
  /// before the coupled difference is evaluated (empty = identity).
  std::vector<std::shared_ptr<const NormalTransform>> transforms;
};

struct MlEstimate {
  Eigen::VectorXd level_means;    // across replications
  Eigen::VectorXd level_stddevs;  // across replications
  Eigen::VectorXd rep_totals;     // one telescoped total per replication
  double total = 0.0;             // mean of rep_totals = sum of level_means
  double total_stddev = 0.0;      // across replications
  double elapsed_seconds = 0.0;
};

/// Telescoped multilevel estimator: level 0 is a plain mean of f^0, level
/// l >= 1 averages f^l(y) - f^{l-1}(coarsen(y)) over the supplied points.
MlEstimate ml_estimate(const std::vector<LevelSpec>& levels, const LevelIntegrand& f,
                       MlPointSource& source, const MlOptions& opts);

}  // namespace qmc
