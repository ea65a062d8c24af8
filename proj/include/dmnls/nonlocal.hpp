#pragma once

#include <cstdint>
#include <vector>

#include "dmnls/dispersion.hpp"
#include "dmnls/grid.hpp"
#include "dmnls/nonlinearity.hpp"

namespace dmnls {

// Everything needed to evaluate the averaged nonlinearity: grid, scalar
// profile, quadrature discretization of the density psi, and the average
// dispersion.  Phase tables e^{-i r_i eta^2} are precomputed per node.
struct NonlocalContext {
  GridPtr grid;
  NonlinearitySpec spec;
  std::vector<double> nodes;
  std::vector<double> weights;
  double d_av = 0.0;
  bool dealias = false;
  std::vector<std::vector<cx>> node_phase;
};

NonlocalContext make_context(GridPtr grid, NonlinearitySpec spec,
                             const Quadrature& quad, double d_av,
                             bool dealias = false);

// e^{ir d^2/dx^2}: spectral multiplier e^{-i r eta^2}; unitary for all r.
Field free_propagate(const Field& f, double r);

// Q(f) = sum_i w_i T_{-r_i} P(T_{r_i} f).
Field apply_Q(const NonlocalContext& ctx, const Field& f);

// Same with every node shifted by s: T_{-s} Q(T_s f).  The shift composes
// exactly with the node phases, so the twisted right-hand side costs no
// extra transforms.
Field apply_Q_shifted(const NonlocalContext& ctx, const Field& f, double s);

// N(f) = sum_i w_i * integral of V(|T_{r_i} f|) dx.
double nonlocal_N(const NonlocalContext& ctx, const Field& f);

struct QBoundReport {
  int ensemble = 0;
  double growth_ratio_max = 0.0;     // ||Q(f)|| / (||f|| + ||f||^{p+1})
  double lipschitz_ratio_max = 0.0;  // ||Q(f)-Q(g)|| / ((1+||f||^p+||g||^p)||f-g||)
};

// Empirical boundedness/Lipschitz ratios over a seeded ensemble of random
// Gaussian-envelope fields.  Reports the observed maxima; stability under
// ensemble growth is the caller's check.
QBoundReport audit_q_bounds(const NonlocalContext& ctx, int ensemble_size,
                            uint64_t seed);

// Worker cap honoring the DMNLS_THREADS environment variable.
int worker_count(int n_jobs);

}  // namespace dmnls
