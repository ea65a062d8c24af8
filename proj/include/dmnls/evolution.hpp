#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmnls/nonlocal.hpp"

namespace dmnls {

enum class Integrator { interaction_rk4, strang };
Integrator integrator_from_name(const std::string& name);
std::string integrator_name(Integrator i);

struct EvolutionConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Integrator integrator = Integrator::interaction_rk4;
  int stride = 10;              // observable sampling interval in steps
  double blowup_threshold = 0;  // absolute H1 cap; 0 means 1e6 x initial H1
  std::optional<bool> dealias;  // overrides the context flag when set
  int snapshot_stride = 0;      // 0 = keep no intermediate fields
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> energy;
  std::vector<double> h1;
  std::vector<double> snapshot_times;
  std::vector<Field> snapshots;
  Field final_field;
  double final_time = 0.0;
  std::string termination;  // completed | blowup-threshold | nan
};

// Right-hand side for the phase-twisted variable v(t) = e^{-it d_av dx^2} u(t):
// i T^{lin}_{-t} Q(T^{lin}_t v), with T^{lin}_t = e^{it d_av dx^2}.
Field rhs_twisted(const NonlocalContext& ctx, double t, const Field& v);

// One step u(t) -> u(t+dt).
Field step(const NonlocalContext& ctx, const EvolutionConfig& config, double t,
           const Field& u);

Trajectory evolve(const NonlocalContext& ctx, const EvolutionConfig& config,
                  const Field& u0);

struct PicardResult {
  Field u;
  std::vector<double> update_l2;  // max-over-grid L2 update per sweep
  double contraction_ratio = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Fixed-point iteration of the integral (Duhamel) form on a uniform
// collocation grid over [0, t_target].  Throws when the iteration fails to
// contract; the remedy is a smaller t_target.
PicardResult picard_solve(const NonlocalContext& ctx, const Field& u0,
                          double t_target, int n_time_nodes, double tol,
                          int max_iter);

struct GronwallResult {
  std::vector<double> times;
  std::vector<double> ratio;  // ||u(t)-v(t)|| / ||u0-v0||
  double fitted_rate = 0.0;   // least-squares slope of log ratio vs t
  double fit_residual = 0.0;  // rms misfit of the linear model
  std::string termination;
};

// Evolves two nearby initial data and measures the divergence rate of the
// gap; log(ratio) growing at most linearly is the expected picture.
GronwallResult gronwall_divergence_test(const NonlocalContext& ctx,
                                        const EvolutionConfig& config,
                                        const Field& u0, const Field& v0);

}  // namespace dmnls
