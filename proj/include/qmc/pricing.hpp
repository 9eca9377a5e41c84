#pragma once

#include <cstdint>
#include <limits>
#include <variant>

#include <Eigen/Dense>

#include "qmc/brownian.hpp"
#include "qmc/sde.hpp"

namespace qmc {

/// Black-Scholes market under the martingale measure.
struct BsMarket {
  double r;
  double sigma;
  double s0;
  double maturity;

  void validate() const;
};

double bs_call(const BsMarket& m, double strike);
double bs_put(const BsMarket& m, double strike);

/// One-step binomial prices: the arbitrage-free price (using p* = (1+r-d)/(u-d))
/// and the naive expected-value price under a caller-supplied probability p.
struct BinomialPrices {
  double arbitrage_free;
  double naive;
};
BinomialPrices binomial_one_step(double r, double up, double down, double s0, double strike,
                                 double p);

/// Prices S_{t_k} = s0 exp((r - sigma^2/2) t_k + sigma B_{t_k}) on B's grid.
DiscretePath gbm_path(const DiscretePath& brownian, const BsMarket& m);

// ---------------------------------------------------------------------------
// Payoffs
// ---------------------------------------------------------------------------

struct EuropeanCall {
  double strike;
};
struct EuropeanPut {
  double strike;
};
struct DigitalCall {
  double strike;
  double cash = 1.0;
};
struct DigitalPut {
  double strike;
  double cash = 1.0;
};
/// Average over the grid nodes inside [window_lo, window_hi], both endpoints
/// included. Defaults cover the whole horizon.
struct AsianFixed {
  double strike;
  double window_lo = 0.0;
  double window_hi = std::numeric_limits<double>::infinity();
};
struct AsianFloat {
  double window_lo = 0.0;
  double window_hi = std::numeric_limits<double>::infinity();
};
/// Terminal basket max(sum w_j S^j_T - K, 0); evaluated on a vector of
/// terminal prices, one per asset.
struct Basket {
  Eigen::VectorXd weights;
  double strike;
};
/// (1/d) sum_j 1{S_j - S_{j-1} >= 0} S_j with S_0 = s0 for the first term.
struct Ratchet {};

using Payoff = std::variant<EuropeanCall, EuropeanPut, DigitalCall, DigitalPut, AsianFixed,
                            AsianFloat, Basket, Ratchet>;

/// Evaluates a payoff on a discrete price path (for Basket: on the vector of
/// terminal prices; the grid is ignored).
double payoff_eval(const Payoff& payoff, const TimeGrid& grid, const Eigen::VectorXd& prices,
                   double s0);

// ---------------------------------------------------------------------------
// Randomized QMC estimator
// ---------------------------------------------------------------------------

struct QmcConfig {
  int shifts = 16;
  std::int64_t points = 1 << 14;
  std::uint64_t seed = 1;
  bool skip_zero_point = false;
};

struct PriceEstimate {
  double mean = 0.0;
  double stddev = 0.0;  // over random shifts
  int shifts = 0;
  std::int64_t points_per_shift = 0;
  double elapsed_seconds = 0.0;
};

/// Maps uniforms in [0,1) to standard normal scores in place; exact zeros are
/// remapped to the smallest positive representable input of the inverse CDF.
void to_normal_scores(Eigen::Ref<RowMatrixXd> u);

/// Deterministic sub-seed derivation.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Shift-randomized QMC mean of an integrand over standard normal input:
/// for each shift, dimension-d Sobol points are shifted, mapped through the
/// inverse normal CDF, rotated by the transform, and averaged row by row.
class NormalIntegrand {
 public:
  virtual ~NormalIntegrand() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual double eval(const Eigen::VectorXd& y) const = 0;
};

PriceEstimate qmc_mean(const NormalIntegrand& f, const NormalTransform& transform,
                       const QmcConfig& cfg);

/// Discounted payoff of a Black-Scholes price path built from forward-wired
/// normal scores on the even grid with `steps` nodes.
class BsPathIntegrand final : public NormalIntegrand {
 public:
  BsPathIntegrand(BsMarket market, Payoff payoff, Eigen::Index steps);
  Eigen::Index dimension() const override { return steps_; }
  double eval(const Eigen::VectorXd& y) const override;

 private:
  BsMarket market_;
  Payoff payoff_;
  Eigen::Index steps_;
  TimeGrid grid_;
  double discount_;
  Eigen::VectorXd drift_;  // (r - sigma^2/2) t_k
  double sqrt_dt_;
};

/// Discounted payoff under the Heston Euler scheme; consumes 2*steps normals
/// laid out as one block per driver: y[0..steps) are the W1 increments,
/// y[steps..2*steps) the W2 increments.
class HestonPathIntegrand final : public NormalIntegrand {
 public:
  HestonPathIntegrand(HestonParams params, Payoff payoff, int steps, double maturity);
  Eigen::Index dimension() const override { return 2 * steps_; }
  double eval(const Eigen::VectorXd& y) const override;

 private:
  HestonParams params_;
  Payoff payoff_;
  int steps_;
  double maturity_;
  TimeGrid grid_;
  double discount_;
  double sqrt_dt_;
};

PriceEstimate qmc_price(const BsMarket& market, const Payoff& payoff, Eigen::Index steps,
                        const PathConstruction& construction, const QmcConfig& cfg);
PriceEstimate qmc_price(const HestonParams& params, const Payoff& payoff, int steps,
                        double maturity, const PathConstruction& construction,
                        const QmcConfig& cfg);

// ---------------------------------------------------------------------------
// Regression transform
// ---------------------------------------------------------------------------

struct RegressionTransformResult {
  HouseholderTransform transform;
  Eigen::VectorXd weights;  // fitted linear coefficients w
  bool degenerate;          // true when the payoff was locally flat
};

/// Least-squares fit g(x) = a + w^T x on pilot pairs, then the Householder
/// reflection mapping w/||w|| to e_1. Requires count >= d+1 rows and a
/// full-rank design.
RegressionTransformResult regression_transform(const Eigen::MatrixXd& pilot_x,
                                               const Eigen::VectorXd& pilot_y);

/// Pilot-based regression transform for an integrand: evaluates the integrand
/// on Sobol-derived normals (forward construction) and fits the reflection.
RegressionTransformResult regression_transform_for(const NormalIntegrand& f,
                                                   std::int64_t pilot_count, std::uint64_t seed);

/// Terminal-value multi-asset Black-Scholes sample: given a Cholesky factor
/// of the asset covariance (rows = assets), returns the terminal prices
/// S^j_T = s0_j exp((r - 0.5 ||row_j||^2) T + sqrt(T) (chol z)_j).
Eigen::VectorXd basket_terminal_prices(const Eigen::VectorXd& s0, double r, double maturity,
                                       const Eigen::MatrixXd& chol, const Eigen::VectorXd& z);

}  // namespace qmc
