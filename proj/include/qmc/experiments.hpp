#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qmc/levy.hpp"
#include "qmc/mlmc.hpp"
#include "qmc/pricing.hpp"

namespace qmc {

/// Input-variable transform selection for the experiment drivers.
enum class ConstructionName { forward, bb, bb2, pca, regression };

std::string to_string(ConstructionName c);
std::optional<ConstructionName> construction_from_string(const std::string& s);

/// Multilevel estimator flavors (Table-style comparison).
enum class MlMethod { mc, qmc_forward, qmc_pca, qmc_regression };

std::string to_string(MlMethod m);
std::optional<MlMethod> ml_method_from_string(const std::string& s);

struct ResultRow {
  std::string experiment;
  std::string method;  // construction or multilevel method
  double x = 0.0;      // log2(points) or N_L
  double mean = 0.0;
  double stddev = 0.0;
  double elapsed_seconds = 0.0;
};

// ---------------------------------------------------------------------------
// Convergence experiments: stddev over random shifts against log2(points).
// ---------------------------------------------------------------------------

struct ConvergeSettings {
  int m_min = 2;
  int m_max = 10;
  int shifts = 64;
  std::uint64_t seed = 1;
  bool skip_zero_point = false;
  std::int64_t regression_pilot = 512;
  std::vector<ConstructionName> constructions = {ConstructionName::forward, ConstructionName::bb,
                                                 ConstructionName::bb2, ConstructionName::pca};
};

/// Runs the shift-randomized estimator for each (construction, m) pair.
std::vector<ResultRow> converge_rows(const std::string& experiment, const NormalIntegrand& f,
                                     const ConvergeSettings& settings);

/// Asian call in the Heston model, solved by Euler with two interleaved
/// Brownian drivers (dimension 2 * steps).
struct HestonAsianExperiment {
  HestonParams params{0.03, 2.0, 0.3, 0.5, 0.2, 100.0, 0.3};
  double strike = 100.0;
  double maturity = 1.0;
  int steps = 32;
};
std::vector<ResultRow> converge_heston_asian(const HestonAsianExperiment& e,
                                             const ConvergeSettings& settings);

/// Ratchet option on a geometric Brownian path.
struct RatchetExperiment {
  BsMarket market{0.04, 0.3, 100.0, 1.0};
  int steps = 32;
};
std::vector<ResultRow> converge_ratchet(const RatchetExperiment& e,
                                        const ConvergeSettings& settings);

// ---------------------------------------------------------------------------
// Multilevel table.
// ---------------------------------------------------------------------------

struct MlmcExperiment {
  BsMarket market{0.04, 0.3, 100.0, 1.0};
  double strike = 100.0;
  int levels = 10;     // L
  int refinement = 2;  // m
  std::vector<std::int64_t> n_finest = {2, 4, 8, 16, 32, 64};
  std::vector<MlMethod> methods = {MlMethod::mc, MlMethod::qmc_forward, MlMethod::qmc_pca,
                                   MlMethod::qmc_regression};
  int runs = 100;
  std::uint64_t seed = 1;
  bool skip_zero_point = false;
  std::int64_t regression_pilot = 512;
};

/// One row per (method, N_L): average and stddev of the telescoped price
/// over `runs` independent replications.
std::vector<ResultRow> mlmc_table(const MlmcExperiment& e);

// ---------------------------------------------------------------------------
// Rejection-noise demonstration.
// ---------------------------------------------------------------------------

/// alpha(lambda) = E[S - lambda_bar n] for S the sum of n Gamma(lambda, 1)
/// variables, estimated two ways on a lambda grid: fixed-stream Monte Carlo
/// with acceptance-rejection, and Sobol points with CDF inversion.
struct RejectionDemoSettings {
  int n_terms = 5;
  std::int64_t points = 1024;
  double lambda_bar = 2.0;
  double epsilon = 0.2;
  double lambda_step = 0.001;
  double proposal_rate = 0.85;
  std::uint64_t seed = 1;
};

struct RejectionDemoRow {
  double lambda;
  double ar_mc;
  double qmc_inversion;
};

std::vector<RejectionDemoRow> rejection_noise_demo(const RejectionDemoSettings& s);

/// Standard deviation of successive differences along the lambda grid.
double curve_roughness(const std::vector<RejectionDemoRow>& rows, bool ar_column);

// ---------------------------------------------------------------------------
// Path sensitivity sweeps.
// ---------------------------------------------------------------------------

struct PathSweepSettings {
  ConstructionName construction = ConstructionName::bb;
  int dimension = 16;
  int vary_coordinate = 7;  // 1-based; 0 sweeps nothing
  std::vector<double> sweep_values = {-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  std::uint64_t seed = 1;
  bool nig_process = false;  // Brownian by default
  NormalInverseGaussian nig{2.0, 0.0, 1.0};
};

struct PathSweepRow {
  double sweep;
  double t;
  double value;
};

std::vector<PathSweepRow> path_sweep(const PathSweepSettings& s);

/// Transform factory shared by the drivers (regression handled separately).
std::shared_ptr<const NormalTransform> named_transform(ConstructionName c, Eigen::Index dim);

/// Transforms for the two-driver Heston input vector (W1 block then W2
/// block). "bb" bridges the whole 2n-dimensional input as one block, "bb2"
/// bridges each driver separately, "pca" is the eigendecomposition of the
/// joint input covariance with coordinates ordered by eigenvalue.
std::shared_ptr<const NormalTransform> heston_transform(ConstructionName c, int steps);

}  // namespace qmc
