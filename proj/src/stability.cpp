#include "dmnls/stability.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dmnls/random.hpp"

namespace dmnls {

std::string orbit_norm_name(OrbitNorm n) { return n == OrbitNorm::L2 ? "L2" : "H1"; }

OrbitDistance orbit_distance(const Field& u, const Field& f, OrbitNorm norm) {
  if (!same_grid(u, f)) throw std::invalid_argument("orbit_distance: grid mismatch");
  const Grid& g = *u.grid;
  const int n = g.n_points();
  const double dx = g.dx();

  std::vector<cx> uhat = to_spectrum(u);
  std::vector<cx> fhat = to_spectrum(f);
  double nu2 = 0.0, nf2 = 0.0;
  std::vector<cx> z(n);
  for (int k = 0; k < n; ++k) {
    const double eta = g.eta()[k];
    const double w = (norm == OrbitNorm::H1) ? 1.0 + eta * eta : 1.0;
    nu2 += w * std::norm(uhat[k]);
    nf2 += w * std::norm(fhat[k]);
    z[k] = w * std::conj(fhat[k]) * uhat[k];
  }
  nu2 *= dx;
  nf2 *= dx;

  // corr[m] = <f(. - m dx), u>_X for every circular shift at once
  std::vector<cx> corr(n);
  g.backward(z.data(), corr.data());
  const double corr_scale = dx * std::sqrt(static_cast<double>(n));

  int best = 0;
  double best_mag = -1.0;
  for (int m = 0; m < n; ++m) {
    const double mag = std::abs(corr[m]);
    if (mag > best_mag) {
      best_mag = mag;
      best = m;
    }
  }
  best_mag *= corr_scale;
  cx best_c = corr_scale * corr[best];
  const int signed_m = (best <= n / 2) ? best : best - n;
  double best_y = signed_m * dx;

  // quadratic peak refinement, re-scored by the exact off-grid correlation
  const double m_lo = corr_scale * std::abs(corr[(best + n - 1) % n]);
  const double m_hi = corr_scale * std::abs(corr[(best + 1) % n]);
  const double denom = m_lo - 2.0 * best_mag + m_hi;
  if (denom < 0.0) {
    double offset = 0.5 * (m_lo - m_hi) / denom;
    offset = std::clamp(offset, -0.5, 0.5);
    const double y = (signed_m + offset) * dx;
    cx c(0.0, 0.0);
    for (int k = 0; k < n; ++k)
      c += z[k] * std::polar(1.0, g.eta()[k] * y);
    c *= dx;
    if (std::abs(c) > best_mag) {
      best_mag = std::abs(c);
      best_c = c;
      best_y = y;
    }
  }

  OrbitDistance out;
  out.distance = std::sqrt(std::max(0.0, nu2 + nf2 - 2.0 * best_mag));
  out.shift = best_y;
  out.phase = std::arg(best_c);
  return out;
}

PerturbationKind perturbation_from_name(const std::string& name) {
  if (name == "random-smooth") return PerturbationKind::random_smooth;
  if (name == "mode-k") return PerturbationKind::mode_k;
  if (name == "scaling") return PerturbationKind::scaling;
  throw std::invalid_argument(
      "perturbation kind must be random-smooth, mode-k, or scaling");
}

std::string perturbation_name(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::random_smooth: return "random-smooth";
    case PerturbationKind::mode_k: return "mode-k";
    default: return "scaling";
  }
}

Field make_perturbation(const Field& f_star, PerturbationKind kind, int mode_k,
                        uint64_t seed, OrbitNorm norm) {
  const GridPtr& g = f_star.grid;
  Field pert = zero_field(g);
  switch (kind) {
    case PerturbationKind::random_smooth: {
      std::mt19937_64 rng(seed);
      pert = random_band_limited(g, rng, 8);
      break;
    }
    case PerturbationKind::mode_k: {
      if (std::abs(mode_k) >= g->n_points() / 2)
        throw std::invalid_argument("perturbation: mode_k outside the grid band");
      const double eta = M_PI * mode_k / g->half_width();
      pert = make_field(g, [eta](double x) { return std::polar(1.0, eta * x); });
      break;
    }
    case PerturbationKind::scaling: {
      // mass-preserving dilation generator f/2 + x f'
      Field fp = derivative(f_star);
      pert = 0.5 * f_star;
      for (int j = 0; j < g->n_points(); ++j)
        pert.values[j] += g->x()[j] * fp.values[j];
      break;
    }
  }
  const double nn = (norm == OrbitNorm::H1) ? norm_h1(pert) : norm_l2(pert);
  if (!(nn > 0.0)) throw std::invalid_argument("perturbation: zero direction");
  pert *= cx(1.0 / nn, 0.0);
  return pert;
}

StabilityReport stability_experiment(const NonlocalContext& ctx,
                                     const GroundStateResult& ground,
                                     const StabilityOptions& opt) {
  if (!ground.converged)
    throw std::invalid_argument(
        "stability_experiment: requires a converged minimizer");
  if (!(opt.delta > 0.0)) throw std::invalid_argument("stability: delta > 0");
  if (!(opt.t_end > 0.0) || !(opt.dt > 0.0) || opt.stride < 1)
    throw std::invalid_argument("stability: bad time-grid parameters");
  if (!(opt.k_stab > 0.0)) throw std::invalid_argument("stability: k_stab > 0");

  const OrbitNorm xnorm = (ctx.d_av > 0.0) ? OrbitNorm::H1 : OrbitNorm::L2;
  const Field& f_star = ground.f;

  Field pert = make_perturbation(f_star, opt.kind, opt.mode_k, opt.seed, xnorm);
  Field u0 = f_star;
  axpy(cx(opt.delta, 0.0), pert, u0);
  u0 *= cx(std::sqrt(ground.lambda) / norm_l2(u0), 0.0);

  StabilityReport rep;
  rep.delta = opt.delta;
  rep.k_stab = opt.k_stab;
  rep.norm = orbit_norm_name(xnorm);
  rep.kind = perturbation_name(opt.kind);
  rep.termination = "completed";

  const double h1_cap = 1e6 * std::max(norm_h1(u0), 1e-300);
  const long n_steps = std::max(1L, std::lround(opt.t_end / opt.dt));

  auto sample = [&](double t, const Field& u) {
    rep.times.push_back(t);
    rep.distance.push_back(orbit_distance(u, f_star, xnorm).distance);
  };
  sample(0.0, u0);

  Field v = u0;  // twisted variable
  for (long i = 1; i <= n_steps; ++i) {
    const double t_prev = (i - 1) * opt.dt;
    const Field k1 = rhs_twisted(ctx, t_prev, v);
    const Field k2 =
        rhs_twisted(ctx, t_prev + 0.5 * opt.dt, v + cx(0.5 * opt.dt, 0.0) * k1);
    const Field k3 =
        rhs_twisted(ctx, t_prev + 0.5 * opt.dt, v + cx(0.5 * opt.dt, 0.0) * k2);
    const Field k4 = rhs_twisted(ctx, t_prev + opt.dt, v + cx(opt.dt, 0.0) * k3);
    axpy(cx(opt.dt / 6.0, 0.0), k1, v);
    axpy(cx(opt.dt / 3.0, 0.0), k2, v);
    axpy(cx(opt.dt / 3.0, 0.0), k3, v);
    axpy(cx(opt.dt / 6.0, 0.0), k4, v);

    bool finite = true;
    for (const cx& c : v.values)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        finite = false;
        break;
      }
    if (!finite) {
      rep.termination = "nan";
      break;
    }
    const double t_now = i * opt.dt;
    const bool blown = norm_h1(v) > h1_cap;
    if (blown || i % opt.stride == 0 || i == n_steps)
      sample(t_now, free_propagate(v, ctx.d_av * t_now));
    if (blown) {
      rep.termination = "blowup-threshold";
      break;
    }
  }

  rep.max_distance = 0.0;
  for (double d : rep.distance) rep.max_distance = std::max(rep.max_distance, d);
  rep.verdict = (rep.termination == "completed" &&
                 rep.max_distance <= opt.k_stab * opt.delta)
                    ? "stable-within-tolerance"
                    : "excursion";
  return rep;
}

}  // namespace dmnls
