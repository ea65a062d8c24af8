#include "dmnls/evolution.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dmnls/variational.hpp"

namespace dmnls {

Integrator integrator_from_name(const std::string& name) {
  if (name == "interaction-rk4") return Integrator::interaction_rk4;
  if (name == "strang") return Integrator::strang;
  throw std::invalid_argument(
      "integrator must be interaction-rk4 or strang");
}

std::string integrator_name(Integrator i) {
  return i == Integrator::interaction_rk4 ? "interaction-rk4" : "strang";
}

Field rhs_twisted(const NonlocalContext& ctx, double t, const Field& v) {
  Field q = apply_Q_shifted(ctx, v, ctx.d_av * t);
  q *= cx(0.0, 1.0);
  return q;
}

namespace {

bool finite_field(const Field& f) {
  for (const cx& v : f.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

Field rk4_twisted(const NonlocalContext& ctx, double t, double dt,
                  const Field& v) {
  const Field k1 = rhs_twisted(ctx, t, v);
  const Field k2 = rhs_twisted(ctx, t + 0.5 * dt, v + cx(0.5 * dt, 0.0) * k1);
  const Field k3 = rhs_twisted(ctx, t + 0.5 * dt, v + cx(0.5 * dt, 0.0) * k2);
  const Field k4 = rhs_twisted(ctx, t + dt, v + cx(dt, 0.0) * k3);
  Field out = v;
  axpy(cx(dt / 6.0, 0.0), k1, out);
  axpy(cx(dt / 3.0, 0.0), k2, out);
  axpy(cx(dt / 3.0, 0.0), k3, out);
  axpy(cx(dt / 6.0, 0.0), k4, out);
  return out;
}

Field strang_step(const NonlocalContext& ctx, double dt, const Field& u) {
  const Field u1 = free_propagate(u, 0.5 * ctx.d_av * dt);
  auto F = [&ctx](const Field& w) {
    Field q = apply_Q(ctx, w);
    q *= cx(0.0, 1.0);
    return q;
  };
  const Field k1 = F(u1);
  const Field k2 = F(u1 + cx(0.5 * dt, 0.0) * k1);
  const Field k3 = F(u1 + cx(0.5 * dt, 0.0) * k2);
  const Field k4 = F(u1 + cx(dt, 0.0) * k3);
  Field u2 = u1;
  axpy(cx(dt / 6.0, 0.0), k1, u2);
  axpy(cx(dt / 3.0, 0.0), k2, u2);
  axpy(cx(dt / 3.0, 0.0), k3, u2);
  axpy(cx(dt / 6.0, 0.0), k4, u2);
  return free_propagate(u2, 0.5 * ctx.d_av * dt);
}

// Applies the config's dealias override without copying the context when
// the flag already matches.
const NonlocalContext& effective_ctx(const NonlocalContext& ctx,
                                     const EvolutionConfig& config,
                                     std::optional<NonlocalContext>& storage) {
  if (!config.dealias || *config.dealias == ctx.dealias) return ctx;
  storage = ctx;
  storage->dealias = *config.dealias;
  return *storage;
}

void validate_evolution(const EvolutionConfig& config) {
  if (!(config.dt > 0.0)) throw std::invalid_argument("evolution: dt > 0");
  if (!(config.t_end > 0.0)) throw std::invalid_argument("evolution: t_end > 0");
  if (config.stride < 1) throw std::invalid_argument("evolution: stride >= 1");
  if (config.snapshot_stride < 0)
    throw std::invalid_argument("evolution: snapshot_stride >= 0");
}

}  // namespace

Field step(const NonlocalContext& ctx, const EvolutionConfig& config, double t,
           const Field& u) {
  validate_evolution(config);
  std::optional<NonlocalContext> storage;
  const NonlocalContext& c = effective_ctx(ctx, config, storage);
  if (config.integrator == Integrator::strang) return strang_step(c, config.dt, u);
  Field v = free_propagate(u, -c.d_av * t);
  v = rk4_twisted(c, t, config.dt, v);
  return free_propagate(v, c.d_av * (t + config.dt));
}

Trajectory evolve(const NonlocalContext& ctx, const EvolutionConfig& config,
                  const Field& u0) {
  validate_evolution(config);
  std::optional<NonlocalContext> storage;
  const NonlocalContext& c = effective_ctx(ctx, config, storage);

  const long n_steps = std::max(1L, std::lround(config.t_end / config.dt));
  const double h1_0 = norm_h1(u0);
  double threshold = config.blowup_threshold;
  if (threshold <= 0.0) threshold = 1e6 * std::max(h1_0, 1e-300);
  if (threshold <= h1_0)
    throw std::invalid_argument(
        "evolution: blowup_threshold must exceed the initial H1 norm");

  Trajectory traj;
  traj.termination = "completed";
  const bool twisted = (config.integrator == Integrator::interaction_rk4);

  auto record = [&](double t, const Field& u) {
    traj.times.push_back(t);
    const double m = norm_l2(u);
    traj.mass.push_back(m * m);
    traj.energy.push_back(energy(c, u));
    traj.h1.push_back(norm_h1(u));
  };

  record(0.0, u0);
  traj.final_field = u0;
  traj.final_time = 0.0;

  Field state = u0;  // twisted variable for interaction-rk4, u itself for strang
  for (long i = 1; i <= n_steps; ++i) {
    const double t_prev = (i - 1) * config.dt;
    const double t_now = i * config.dt;
    state = twisted ? rk4_twisted(c, t_prev, config.dt, state)
                    : strang_step(c, config.dt, state);
    if (!finite_field(state)) {
      traj.termination = "nan";
      return traj;
    }
    const double h1 = norm_h1(state);  // twisting preserves the H1 norm
    const bool blown = h1 > threshold;
    const bool sample = blown || (i % config.stride == 0) || i == n_steps;
    if (sample || (config.snapshot_stride > 0 &&
                   i % config.snapshot_stride == 0)) {
      Field u = twisted ? free_propagate(state, c.d_av * t_now) : state;
      if (sample) record(t_now, u);
      if (config.snapshot_stride > 0 && i % config.snapshot_stride == 0) {
        traj.snapshot_times.push_back(t_now);
        traj.snapshots.push_back(u);
      }
      traj.final_field = std::move(u);
      traj.final_time = t_now;
    }
    if (blown) {
      traj.termination = "blowup-threshold";
      return traj;
    }
  }
  if (traj.final_time != n_steps * config.dt) {
    traj.final_field =
        twisted ? free_propagate(state, c.d_av * n_steps * config.dt) : state;
    traj.final_time = n_steps * config.dt;
  }
  return traj;
}

PicardResult picard_solve(const NonlocalContext& ctx, const Field& u0,
                          double t_target, int n_time_nodes, double tol,
                          int max_iter) {
  if (!(t_target > 0.0)) throw std::invalid_argument("picard: t_target > 0");
  if (n_time_nodes < 4)
    throw std::invalid_argument("picard: need at least 4 time nodes");
  if (!(tol > 0.0) || max_iter < 1)
    throw std::invalid_argument("picard: bad tolerance or iteration cap");

  const int M = n_time_nodes;
  const double dt = t_target / (M - 1);

  // Iterate on the twisted variable w(t) = T^{lin}_{-t} u(t), for which the
  // integral form reads w(t) = u0 + i * integral of g, g(s) = T^{lin}_{-s}
  // Q(T^{lin}_s w(s)).
  std::vector<Field> w(M, u0);
  PicardResult res;

  const double scale = std::max(1.0, norm_l2(u0));
  for (int iter = 1; iter <= max_iter; ++iter) {
    std::vector<Field> g;
    g.reserve(M);
    for (int m = 0; m < M; ++m)
      g.push_back(apply_Q_shifted(ctx, w[m], ctx.d_av * (m * dt)));

    std::vector<Field> next(M, u0);
    Field G = zero_field(u0.grid);
    for (int m = 0; m + 1 < M; ++m) {
      // cumulative integral, cubic interpolatory weights on 4-point stencils
      int base;
      double c0, c1, c2, c3;
      if (m == 0) {
        base = 0;
        c0 = 9.0 / 24, c1 = 19.0 / 24, c2 = -5.0 / 24, c3 = 1.0 / 24;
      } else if (m + 2 < M) {
        base = m - 1;
        c0 = -1.0 / 24, c1 = 13.0 / 24, c2 = 13.0 / 24, c3 = -1.0 / 24;
      } else {
        base = M - 4;
        c0 = 1.0 / 24, c1 = -5.0 / 24, c2 = 19.0 / 24, c3 = 9.0 / 24;
      }
      axpy(cx(dt * c0, 0.0), g[base], G);
      axpy(cx(dt * c1, 0.0), g[base + 1], G);
      axpy(cx(dt * c2, 0.0), g[base + 2], G);
      axpy(cx(dt * c3, 0.0), g[base + 3], G);
      axpy(cx(0.0, 1.0), G, next[m + 1]);
    }

    double d = 0.0;
    for (int m = 0; m < M; ++m) d = std::max(d, norm_l2(next[m] - w[m]));
    w = std::move(next);
    res.update_l2.push_back(d);
    res.iterations = iter;

    if (!std::isfinite(d) || d > 1e3 * scale) {
      std::ostringstream os;
      os << "picard: iteration diverged (update " << d
         << "); retry with a smaller t_target";
      throw std::runtime_error(os.str());
    }
    if (d < tol) {
      res.converged = true;
      break;
    }
  }

  double worst_ratio = 0.0;
  for (size_t k = 1; k < res.update_l2.size(); ++k)
    if (res.update_l2[k - 1] > tol)
      worst_ratio = std::max(worst_ratio,
                             res.update_l2[k] / res.update_l2[k - 1]);
  res.contraction_ratio = worst_ratio;

  if (!res.converged) {
    std::ostringstream os;
    os << "picard: no contraction after " << max_iter
       << " sweeps (last update " << res.update_l2.back()
       << ", worst ratio " << worst_ratio
       << "); retry with a smaller t_target";
    throw std::runtime_error(os.str());
  }

  res.u = free_propagate(w[M - 1], ctx.d_av * t_target);
  return res;
}

GronwallResult gronwall_divergence_test(const NonlocalContext& ctx,
                                        const EvolutionConfig& config,
                                        const Field& u0, const Field& v0) {
  validate_evolution(config);
  std::optional<NonlocalContext> storage;
  const NonlocalContext& c = effective_ctx(ctx, config, storage);
  const double d0 = norm_l2(u0 - v0);
  if (!(d0 > 0.0))
    throw std::invalid_argument("gronwall test: initial data must differ");

  GronwallResult res;
  res.termination = "completed";
  res.times.push_back(0.0);
  res.ratio.push_back(1.0);

  // The twist is unitary, so the gap norm can be read off the twisted pair.
  Field wu = u0, wv = v0;
  const long n_steps = std::max(1L, std::lround(config.t_end / config.dt));
  for (long i = 1; i <= n_steps; ++i) {
    const double t_prev = (i - 1) * config.dt;
    wu = rk4_twisted(c, t_prev, config.dt, wu);
    wv = rk4_twisted(c, t_prev, config.dt, wv);
    if (!finite_field(wu) || !finite_field(wv)) {
      res.termination = "nan";
      break;
    }
    if (i % config.stride == 0 || i == n_steps) {
      res.times.push_back(i * config.dt);
      res.ratio.push_back(norm_l2(wu - wv) / d0);
    }
  }

  double stt = 0.0, stl = 0.0;
  int used = 0;
  for (size_t k = 0; k < res.times.size(); ++k) {
    if (res.times[k] <= 0.0 || res.ratio[k] <= 0.0) continue;
    stt += res.times[k] * res.times[k];
    stl += res.times[k] * std::log(res.ratio[k]);
    ++used;
  }
  res.fitted_rate = (stt > 0.0) ? stl / stt : 0.0;
  double ss = 0.0;
  for (size_t k = 0; k < res.times.size(); ++k) {
    if (res.times[k] <= 0.0 || res.ratio[k] <= 0.0) continue;
    const double e = std::log(res.ratio[k]) - res.fitted_rate * res.times[k];
    ss += e * e;
  }
  res.fit_residual = used > 0 ? std::sqrt(ss / used) : 0.0;
  return res;
}

}  // namespace dmnls
