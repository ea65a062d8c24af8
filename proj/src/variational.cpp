#include "dmnls/variational.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmnls {

double kinetic_term(const Field& f) {
  std::vector<cx> hat = to_spectrum(f);
  const std::vector<double>& eta = f.grid->eta();
  double s = 0.0;
  for (size_t j = 0; j < hat.size(); ++j)
    s += eta[j] * eta[j] * std::norm(hat[j]);
  return f.grid->dx() * s;
}

double energy(const NonlocalContext& ctx, const Field& f) {
  return 0.5 * ctx.d_av * kinetic_term(f) - nonlocal_N(ctx, f);
}

Field energy_gradient(const NonlocalContext& ctx, const Field& f) {
  Field grad = second_derivative(f);
  grad *= cx(-ctx.d_av, 0.0);
  grad -= apply_Q(ctx, f);
  return grad;
}

namespace {

Field renormalize(const Field& f, double lambda) {
  const double n = norm_l2(f);
  if (!(n > 0.0)) throw std::invalid_argument("renormalize: zero field");
  return (std::sqrt(lambda) / n) * f;
}

}  // namespace

GroundStateResult ground_state(const NonlocalContext& ctx, double lambda,
                               const Field& init, double tol, int max_iter) {
  if (ctx.d_av < 0.0)
    throw std::invalid_argument(
        "ground_state: d_av < 0 rejected (energy unbounded below)");
  if (!(lambda > 0.0)) throw std::invalid_argument("ground_state: lambda > 0");
  if (!(norm_l2(init) > 0.0))
    throw std::invalid_argument("ground_state: zero initial guess");
  if (max_iter < 1) throw std::invalid_argument("ground_state: max_iter >= 1");

  GroundStateResult res;
  res.lambda = lambda;

  Field f = renormalize(init, lambda);
  double E = energy(ctx, f);
  Field grad = energy_gradient(ctx, f);
  double omega = std::real(inner(f, grad)) / lambda;
  Field tangent = grad - cx(omega, 0.0) * f;
  double tnorm2 = inner(tangent, tangent).real();

  res.energy_history.push_back(E);

  Field prev_f = f, prev_tangent = tangent;
  bool have_prev = false;
  double step0 = 0.1;

  const double armijo_c = 1e-4;
  int it = 0;
  for (; it < max_iter; ++it) {
    const double resid = std::sqrt(std::max(0.0, tnorm2)) / std::sqrt(lambda);
    res.residual_history.push_back(resid);
    if (resid < tol) {
      res.converged = true;
      break;
    }
    double tau = step0;
    if (have_prev) {
      // Barzilai-Borwein: tau = <s,s> / Re<s,y>
      Field s = f - prev_f;
      Field y = tangent - prev_tangent;
      const double ss = inner(s, s).real();
      const double sy = std::real(inner(s, y));
      if (sy > 1e-300) tau = ss / sy;
    }
    tau = std::clamp(tau, 1e-12, 1e4);

    prev_f = f;
    prev_tangent = tangent;

    // Roundoff slack: near the minimum the demanded decrease drops below
    // the evaluation noise of E, and a strict test would stall the descent.
    const double noise = 1e-13 * (1.0 + std::abs(E));
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      Field trial = renormalize(f - cx(tau, 0.0) * tangent, lambda);
      const double E_trial = energy(ctx, trial);
      if (E_trial <= E - armijo_c * tau * tnorm2 + noise) {
        f = std::move(trial);
        E = E_trial;
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) break;  // descent stalled at line-search resolution

    res.energy_history.push_back(E);
    grad = energy_gradient(ctx, f);
    omega = std::real(inner(f, grad)) / lambda;
    tangent = grad - cx(omega, 0.0) * f;
    tnorm2 = inner(tangent, tangent).real();
    have_prev = true;
  }

  res.f = std::move(f);
  res.omega = omega;
  res.energy = E;
  res.residual = std::sqrt(std::max(0.0, tnorm2)) / std::sqrt(lambda);
  res.iterations = it;
  res.likely_no_ground_state = (E >= -1e-8 * lambda);
  return res;
}

std::vector<double> default_sigma_grid() {
  std::vector<double> s;
  for (double v = 0.125; v <= 8.0 + 1e-9; v *= std::pow(2.0, 0.25))
    s.push_back(v);
  return s;
}

ThresholdScan threshold_scan(const NonlocalContext& ctx,
                             const std::vector<double>& lambda_grid,
                             const std::vector<double>& sigma_grid) {
  if (lambda_grid.empty() || sigma_grid.empty())
    throw std::invalid_argument("threshold_scan: empty grid");
  for (size_t i = 1; i < lambda_grid.size(); ++i)
    if (!(lambda_grid[i] > lambda_grid[i - 1]))
      throw std::invalid_argument("threshold_scan: lambda grid must increase");

  ThresholdScan scan;
  const double spi = std::sqrt(M_PI);
  for (double lambda : lambda_grid) {
    ThresholdRow row;
    row.lambda = lambda;
    row.best_energy = std::numeric_limits<double>::infinity();
    for (double sigma : sigma_grid) {
      // mass of A e^{-x^2/(2 sigma^2)} is A^2 sigma sqrt(pi)
      const double amp = std::sqrt(lambda / (sigma * spi));
      Field trial = make_field(ctx.grid, [amp, sigma](double x) {
        return cx(amp * std::exp(-0.5 * (x / sigma) * (x / sigma)), 0.0);
      });
      const double E = energy(ctx, trial);
      if (E < row.best_energy) {
        row.best_energy = E;
        row.best_sigma = sigma;
      }
    }
    row.sign = (row.best_energy > 0.0) - (row.best_energy < 0.0);
    scan.rows.push_back(row);
    if (!scan.found_negative && row.best_energy < 0.0) {
      scan.found_negative = true;
      scan.lambda_cr_upper = lambda;
    }
  }
  return scan;
}

}  // namespace dmnls
