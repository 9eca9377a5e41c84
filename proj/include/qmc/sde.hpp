#pragma once

#include <functional>

#include <Eigen/Dense>

namespace qmc {

/// Scalar SDE dS = mu(t,S) dt + sigma(t,S) dW. The diffusion derivative is
/// only needed by the Milstein scheme (autonomous coefficients).
struct Sde1D {
  std::function<double(double, double)> drift;
  std::function<double(double, double)> diffusion;
  std::function<double(double)> diffusion_ds;  // sigma'(s), optional
  double s0 = 0.0;
};

/// Approximate solution on the nodes 0, h, ..., n h (values[0] = s0).
struct SolvedPath {
  double step = 0.0;
  Eigen::VectorXd values;
};

SolvedPath euler_maruyama(const Sde1D& sde, double h, int n, const Eigen::VectorXd& dw);
SolvedPath milstein(const Sde1D& sde, double h, int n, const Eigen::VectorXd& dw);
SolvedPath runge_kutta_strong1(const Sde1D& sde, double h, int n, const Eigen::VectorXd& dw);

/// Heston model under the martingale measure. The Feller condition
/// 2 kappa theta >= xi^2 is not required; a violated condition is recorded
/// in feller_ok, not rejected.
struct HestonParams {
  double r;
  double kappa;
  double theta;
  double xi;
  double rho;  // in (-1, 1)
  double s0;
  double v0;

  enum class Truncation { full, absorption };
  Truncation truncation = Truncation::full;

  void validate() const;
  bool feller_ok() const { return 2.0 * kappa * theta >= xi * xi; }
};

struct HestonPath {
  double step = 0.0;
  Eigen::VectorXd price;     // n+1 values, price[0] = s0
  Eigen::VectorXd variance;  // n+1 values, variance[0] = v0
};

/// Euler scheme for the two-factor Heston system. dw1 drives the variance;
/// the price is driven by rho dw1 + sqrt(1-rho^2) dw2. Negative variance is
/// handled by evaluating sqrt at max(V, 0).
HestonPath heston_euler(const HestonParams& p, double h, int n, const Eigen::VectorXd& dw1,
                        const Eigen::VectorXd& dw2);

}  // namespace qmc
