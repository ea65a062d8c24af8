#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmnls/evolution.hpp"
#include "dmnls/variational.hpp"

namespace dmnls {

enum class OrbitNorm { L2, H1 };
std::string orbit_norm_name(OrbitNorm n);

struct OrbitDistance {
  double distance = 0.0;
  double shift = 0.0;  // best y in (-L, L]
  double phase = 0.0;  // best theta
};

// min over y, theta of ||u - e^{i theta} f(. - y)||: one cross-correlation
// evaluates every grid shift at its optimal phase; the peak is then refined
// off-grid by quadratic interpolation and re-scored exactly.
OrbitDistance orbit_distance(const Field& u, const Field& f, OrbitNorm norm);

enum class PerturbationKind { random_smooth, mode_k, scaling };
PerturbationKind perturbation_from_name(const std::string& name);
std::string perturbation_name(PerturbationKind k);

struct StabilityOptions {
  double delta = 1e-3;
  PerturbationKind kind = PerturbationKind::random_smooth;
  int mode_k = 1;
  double t_end = 10.0;
  double dt = 1e-3;
  int stride = 100;       // distance sampling interval in steps
  double k_stab = 50.0;   // amplification cap for the verdict
  uint64_t seed = 7041;
};

struct StabilityReport {
  double delta = 0.0;
  double k_stab = 0.0;
  std::string norm;  // L2 or H1
  std::string kind;
  std::vector<double> times;
  std::vector<double> distance;
  double max_distance = 0.0;
  std::string verdict;      // stable-within-tolerance | excursion
  std::string termination;  // completed | blowup-threshold | nan
};

// Perturbs a converged minimizer by delta in the X norm (H1 when d_av > 0,
// else L2), renormalizes the mass back to lambda, evolves, and tracks the
// orbit distance to the unperturbed minimizer.
StabilityReport stability_experiment(const NonlocalContext& ctx,
                                     const GroundStateResult& ground,
                                     const StabilityOptions& opt);

// The perturbation directions used by stability_experiment, unit-normalized
// in the given norm.
Field make_perturbation(const Field& f_star, PerturbationKind kind, int mode_k,
                        uint64_t seed, OrbitNorm norm);

}  // namespace dmnls
