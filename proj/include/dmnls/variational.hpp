#pragma once

#include <vector>

#include "dmnls/nonlocal.hpp"

namespace dmnls {

// E(f) = (d_av/2) ||f'||^2 - N(f).  The kinetic term is evaluated
// spectrally; N shares the context's quadrature nodes with apply_Q, which
// makes energy_gradient the exact gradient of this discrete functional.
double energy(const NonlocalContext& ctx, const Field& f);
double kinetic_term(const Field& f);  // ||f'||^2

// Gradient with respect to the real L2 inner product Re inner(.,.):
// -d_av f'' - Q(f), so dE(f)[g] = Re inner(gradient, g).
Field energy_gradient(const NonlocalContext& ctx, const Field& f);

struct GroundStateResult {
  Field f;
  double lambda = 0.0;
  double omega = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool likely_no_ground_state = false;
  std::vector<double> energy_history;
  std::vector<double> residual_history;
};

// Minimizes E on the sphere ||f||^2 = lambda by projected gradient descent:
// Barzilai-Borwein step proposal, Armijo backtracking on the sphere, exact
// renormalization after every trial point.  Requires d_av >= 0.
GroundStateResult ground_state(const NonlocalContext& ctx, double lambda,
                               const Field& init, double tol, int max_iter);

struct ThresholdRow {
  double lambda = 0.0;
  double best_sigma = 0.0;
  double best_energy = 0.0;
  int sign = 0;  // sign of the best trial energy
};

struct ThresholdScan {
  std::vector<ThresholdRow> rows;
  double lambda_cr_upper = 0.0;  // smallest grid lambda with negative energy
  bool found_negative = false;
};

// Minimizes E over the Gaussian trial family (width sigma, mass lambda) for
// each lambda; a negative best value certifies E_lambda < 0, so the reported
// crossing is an upper bound for the true threshold, never the threshold
// itself.
ThresholdScan threshold_scan(const NonlocalContext& ctx,
                             const std::vector<double>& lambda_grid,
                             const std::vector<double>& sigma_grid);

std::vector<double> default_sigma_grid();

}  // namespace dmnls
