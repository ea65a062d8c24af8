#include "dmnls/nonlocal.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "dmnls/random.hpp"

namespace dmnls {

int worker_count(int n_jobs) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("DMNLS_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return std::max(1, std::min(cap, n_jobs));
}

namespace {

template <class Fn>
void for_each_node(int n, Fn&& fn) {
  const int workers = worker_count(n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& th : pool) th.join();
}

void truncate_two_thirds(std::vector<cx>& spectrum, int n) {
  for (int j = 0; j < n; ++j) {
    const int k = (j < n / 2) ? j : j - n;
    if (3 * std::abs(k) > n) spectrum[j] = cx(0.0, 0.0);
  }
}

void require_ctx_grid(const NonlocalContext& ctx, const Field& f,
                      const char* who) {
  const Grid* a = ctx.grid.get();
  const Grid* b = f.grid.get();
  if (a == b) return;
  if (!b || a->n_points() != b->n_points() ||
      a->half_width() != b->half_width())
    throw std::invalid_argument(std::string(who) +
                                ": field grid does not match context grid");
}

// sum_i w_i T_{-(r_i+s)} P(T_{r_i+s} f), accumulated spectrally in node
// order so the result is independent of the worker count.
Field averaged_apply(const NonlocalContext& ctx, const Field& f, double s) {
  require_ctx_grid(ctx, f, "averaged apply");
  const Grid& g = *ctx.grid;
  const int n = g.n_points();
  const int m = static_cast<int>(ctx.nodes.size());
  std::vector<cx> U(n);
  g.forward(f.values.data(), U.data());

  const bool shifted = (s != 0.0);
  std::vector<cx> lin;
  if (shifted) {
    lin.resize(n);
    for (int j = 0; j < n; ++j) {
      const double eta = g.eta()[j];
      lin[j] = std::polar(1.0, -s * eta * eta);
    }
  }

  std::vector<std::vector<cx>> contrib(m);
  for_each_node(m, [&](int i) {
    std::vector<cx> spec_buf(n), phys_buf(n);
    const std::vector<cx>& ph = ctx.node_phase[i];
    for (int j = 0; j < n; ++j) {
      const cx p = shifted ? ph[j] * lin[j] : ph[j];
      spec_buf[j] = U[j] * p;
    }
    g.backward(spec_buf.data(), phys_buf.data());
    for (int j = 0; j < n; ++j) {
      const double a = std::abs(phys_buf[j]);
      phys_buf[j] = (a > 0.0) ? ctx.spec.h(a) * phys_buf[j] : cx(0.0, 0.0);
    }
    g.forward(phys_buf.data(), spec_buf.data());
    contrib[i].resize(n);
    for (int j = 0; j < n; ++j) {
      const cx p = shifted ? ph[j] * lin[j] : ph[j];
      contrib[i][j] = ctx.weights[i] * spec_buf[j] * std::conj(p);
    }
  });

  std::vector<cx> acc(n, cx(0.0, 0.0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) acc[j] += contrib[i][j];
  if (ctx.dealias) truncate_two_thirds(acc, n);

  Field out = zero_field(f.grid);
  g.backward(acc.data(), out.values.data());
  return out;
}

}  // namespace

NonlocalContext make_context(GridPtr grid, NonlinearitySpec spec,
                             const Quadrature& quad, double d_av,
                             bool dealias) {
  if (quad.nodes.size() != quad.weights.size() || quad.nodes.empty())
    throw std::invalid_argument("context: malformed quadrature");
  double mass = 0.0;
  for (size_t i = 0; i < quad.nodes.size(); ++i) {
    if (!std::isfinite(quad.nodes[i]))
      throw std::invalid_argument("context: non-finite quadrature node");
    if (!(quad.weights[i] > 0.0))
      throw std::invalid_argument("context: quadrature weights must be positive");
    mass += quad.weights[i];
  }
  if (std::abs(mass - 1.0) > 1e-10)
    throw std::invalid_argument(
        "context: quadrature weights must sum to 1 (probability measure)");
  NonlocalContext ctx;
  ctx.grid = std::move(grid);
  ctx.spec = std::move(spec);
  ctx.nodes = quad.nodes;
  ctx.weights = quad.weights;
  ctx.d_av = d_av;
  ctx.dealias = dealias;
  const int n = ctx.grid->n_points();
  ctx.node_phase.resize(ctx.nodes.size());
  for (size_t i = 0; i < ctx.nodes.size(); ++i) {
    ctx.node_phase[i].resize(n);
    for (int j = 0; j < n; ++j) {
      const double eta = ctx.grid->eta()[j];
      ctx.node_phase[i][j] = std::polar(1.0, -ctx.nodes[i] * eta * eta);
    }
  }
  return ctx;
}

Field free_propagate(const Field& f, double r) {
  std::vector<cx> hat = to_spectrum(f);
  const std::vector<double>& eta = f.grid->eta();
  for (size_t j = 0; j < hat.size(); ++j)
    hat[j] *= std::polar(1.0, -r * eta[j] * eta[j]);
  return from_spectrum(f.grid, hat);
}

Field apply_Q(const NonlocalContext& ctx, const Field& f) {
  return averaged_apply(ctx, f, 0.0);
}

Field apply_Q_shifted(const NonlocalContext& ctx, const Field& f, double s) {
  return averaged_apply(ctx, f, s);
}

double nonlocal_N(const NonlocalContext& ctx, const Field& f) {
  require_ctx_grid(ctx, f, "nonlocal N");
  const Grid& g = *ctx.grid;
  const int n = g.n_points();
  const int m = static_cast<int>(ctx.nodes.size());
  std::vector<cx> U(n);
  g.forward(f.values.data(), U.data());
  std::vector<double> node_value(m, 0.0);
  for_each_node(m, [&](int i) {
    std::vector<cx> spec_buf(n), phys_buf(n);
    const std::vector<cx>& ph = ctx.node_phase[i];
    for (int j = 0; j < n; ++j) spec_buf[j] = U[j] * ph[j];
    g.backward(spec_buf.data(), phys_buf.data());
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += ctx.spec.V(std::abs(phys_buf[j]));
    node_value[i] = g.dx() * s;
  });
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += ctx.weights[i] * node_value[i];
  return total;
}

QBoundReport audit_q_bounds(const NonlocalContext& ctx, int ensemble_size,
                            uint64_t seed) {
  if (ensemble_size < 50)
    throw std::invalid_argument("audit_q_bounds: need ensemble_size >= 50");
  std::mt19937_64 rng(seed);
  QBoundReport rep;
  rep.ensemble = ensemble_size;
  const double p = ctx.spec.p;
  for (int e = 0; e < ensemble_size; ++e) {
    const Field f = random_gaussian_envelope(ctx.grid, rng);
    const Field g = random_gaussian_envelope(ctx.grid, rng);
    const Field qf = apply_Q(ctx, f);
    const Field qg = apply_Q(ctx, g);
    const double nf = norm_l2(f), ng = norm_l2(g);
    if (nf > 0.0)
      rep.growth_ratio_max = std::max(
          rep.growth_ratio_max, norm_l2(qf) / (nf + std::pow(nf, p + 1.0)));
    if (ng > 0.0)
      rep.growth_ratio_max = std::max(
          rep.growth_ratio_max, norm_l2(qg) / (ng + std::pow(ng, p + 1.0)));
    const double dfg = norm_l2(f - g);
    if (dfg > 1e-14 * (nf + ng)) {
      const double denom = (1.0 + std::pow(nf, p) + std::pow(ng, p)) * dfg;
      rep.lipschitz_ratio_max =
          std::max(rep.lipschitz_ratio_max, norm_l2(qf - qg) / denom);
    }
  }
  return rep;
}

}  // namespace dmnls
