#include "qmc/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qmc {

namespace {

void check_inputs(double h, int n, const Eigen::VectorXd& dw, const char* scheme) {
  if (!(h > 0.0)) throw std::invalid_argument(std::string(scheme) + ": step must be positive");
  if (n < 1) throw std::invalid_argument(std::string(scheme) + ": need at least one step");
  if (dw.size() != n) throw std::invalid_argument(std::string(scheme) + ": increment count mismatch");
}

[[noreturn]] void blow_up(const char* scheme, int step) {
  throw std::runtime_error(std::string(scheme) + ": non-finite state at step " +
                           std::to_string(step));
}

}  // namespace

SolvedPath euler_maruyama(const Sde1D& sde, double h, int n, const Eigen::VectorXd& dw) {
  check_inputs(h, n, dw, "euler_maruyama");
  SolvedPath out{h, Eigen::VectorXd(n + 1)};
  double s = sde.s0;
  out.values[0] = s;
  for (int k = 0; k < n; ++k) {
    const double t = k * h;
    s += sde.drift(t, s) * h + sde.diffusion(t, s) * dw[k];
    if (!std::isfinite(s)) blow_up("euler_maruyama", k + 1);
    out.values[k + 1] = s;
  }
  return out;
}

SolvedPath milstein(const Sde1D& sde, double h, int n, const Eigen::VectorXd& dw) {
  check_inputs(h, n, dw, "milstein");
  if (!sde.diffusion_ds) throw std::invalid_argument("milstein: diffusion derivative required");
  SolvedPath out{h, Eigen::VectorXd(n + 1)};
  double s = sde.s0;
  out.values[0] = s;
  for (int k = 0; k < n; ++k) {
    const double t = k * h;
    const double sig = sde.diffusion(t, s);
    s += sde.drift(t, s) * h + sig * dw[k] +
         0.5 * sig * sde.diffusion_ds(s) * (dw[k] * dw[k] - h);
    if (!std::isfinite(s)) blow_up("milstein", k + 1);
    out.values[k + 1] = s;
  }
  return out;
}

SolvedPath runge_kutta_strong1(const Sde1D& sde, double h, int n, const Eigen::VectorXd& dw) {
  check_inputs(h, n, dw, "runge_kutta_strong1");
  SolvedPath out{h, Eigen::VectorXd(n + 1)};
  const double sqrt_h = std::sqrt(h);
  double s = sde.s0;
  out.values[0] = s;
  for (int k = 0; k < n; ++k) {
    const double t = k * h;
    const double sig = sde.diffusion(t, s);
    const double support = s + sig * sqrt_h;
    s += sde.drift(t, s) * h + sig * dw[k] +
         0.5 * (sde.diffusion(t, support) - sig) * (dw[k] * dw[k] - h) / sqrt_h;
    if (!std::isfinite(s)) blow_up("runge_kutta_strong1", k + 1);
    out.values[k + 1] = s;
  }
  return out;
}

void HestonParams::validate() const {
  if (!(kappa > 0.0 && theta > 0.0 && xi > 0.0))
    throw std::invalid_argument("HestonParams: kappa, theta, xi must be positive");
  if (!(rho > -1.0 && rho < 1.0))
    throw std::invalid_argument("HestonParams: rho must be in (-1, 1)");
  if (!(s0 > 0.0 && v0 > 0.0))
    throw std::invalid_argument("HestonParams: s0 and v0 must be positive");
}

HestonPath heston_euler(const HestonParams& p, double h, int n, const Eigen::VectorXd& dw1,
                        const Eigen::VectorXd& dw2) {
  p.validate();
  if (!(h > 0.0)) throw std::invalid_argument("heston_euler: step must be positive");
  if (dw1.size() != n || dw2.size() != n)
    throw std::invalid_argument("heston_euler: increment count mismatch");

  HestonPath out{h, Eigen::VectorXd(n + 1), Eigen::VectorXd(n + 1)};
  const double rho_bar = std::sqrt(1.0 - p.rho * p.rho);
  double s = p.s0;
  double v = p.v0;
  out.price[0] = s;
  out.variance[0] = v;
  for (int k = 0; k < n; ++k) {
    const double v_plus = std::max(v, 0.0);
    const double sqrt_v = std::sqrt(v_plus);
    const double dws = p.rho * dw1[k] + rho_bar * dw2[k];
    s += p.r * s * h + sqrt_v * s * dws;
    v += p.kappa * (p.theta - v) * h + p.xi * sqrt_v * dw1[k];
    if (p.truncation == HestonParams::Truncation::absorption) v = std::max(v, 0.0);
    if (!std::isfinite(s) || !std::isfinite(v)) blow_up("heston_euler", k + 1);
    out.price[k + 1] = s;
    out.variance[k + 1] = v;
  }
  return out;
}

}  // namespace qmc
