#include "dmnls/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmnls {

DispersionProfile make_profile(double d_av,
                               const std::vector<DispersionSegment>& segments) {
  if (segments.empty())
    throw std::invalid_argument("profile: needs at least one segment");
  double period = 0.0, mean = 0.0, abs_mean = 0.0;
  for (const DispersionSegment& s : segments) {
    if (!(s.tau > 0.0))
      throw std::invalid_argument("profile: segment durations must be positive");
    if (s.slope == 0.0)
      throw std::invalid_argument("profile: segment slopes must be nonzero");
    period += s.tau;
    mean += s.tau * s.slope;
    abs_mean += s.tau * std::abs(s.slope);
  }
  if (std::abs(mean) > 1e-12 * abs_mean)
    throw std::invalid_argument(
        "profile: segments must be mean-zero (sum tau_j * d_j = 0)");
  return DispersionProfile{d_av, period, segments};
}

double cumulative_D(const DispersionProfile& profile, double t) {
  if (t < 0.0 || t > profile.period)
    throw std::invalid_argument("cumulative_D: t outside [0, period]");
  double acc = 0.0, t0 = 0.0;
  for (const DispersionSegment& s : profile.segments) {
    if (t <= t0 + s.tau) return acc + (t - t0) * s.slope;
    acc += s.tau * s.slope;
    t0 += s.tau;
  }
  return acc;
}

namespace {

// Decompose possibly-overlapping constant-density contributions on the
// sorted breakpoint grid, summing densities in contribution order, then
// merge adjacent runs of equal density.
PsiMeasure merge_contributions(const std::vector<PsiPiece>& contribs) {
  std::vector<double> bp;
  bp.reserve(2 * contribs.size());
  for (const PsiPiece& c : contribs) {
    bp.push_back(c.r_lo);
    bp.push_back(c.r_hi);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

  std::vector<PsiPiece> cells;
  for (size_t i = 0; i + 1 < bp.size(); ++i) {
    double density = 0.0;
    for (const PsiPiece& c : contribs)
      if (c.r_lo <= bp[i] && bp[i + 1] <= c.r_hi) density += c.density;
    if (density > 0.0) cells.push_back({bp[i], bp[i + 1], density});
  }

  PsiMeasure psi;
  for (const PsiPiece& cell : cells) {
    if (!psi.pieces.empty() && psi.pieces.back().r_hi == cell.r_lo &&
        psi.pieces.back().density == cell.density) {
      psi.pieces.back().r_hi = cell.r_hi;
    } else {
      psi.pieces.push_back(cell);
    }
  }
  for (const PsiPiece& p : psi.pieces)
    psi.total_mass += p.density * (p.r_hi - p.r_lo);
  return psi;
}

}  // namespace

PsiMeasure psi_from_profile(const DispersionProfile& profile) {
  std::vector<PsiPiece> contribs;
  double acc = 0.0;
  for (const DispersionSegment& s : profile.segments) {
    if (s.slope == 0.0)
      throw std::invalid_argument("psi_from_profile: zero slope segment");
    const double next = acc + s.tau * s.slope;
    const double lo = std::min(acc, next), hi = std::max(acc, next);
    contribs.push_back({lo, hi, 1.0 / (profile.period * std::abs(s.slope))});
    acc = next;
  }
  return merge_contributions(contribs);
}

PsiMeasure psi_from_pieces(const std::vector<PsiPiece>& pieces) {
  if (pieces.empty()) throw std::invalid_argument("psi: needs at least one piece");
  for (const PsiPiece& p : pieces) {
    if (!(p.r_hi > p.r_lo))
      throw std::invalid_argument("psi: pieces need r_hi > r_lo");
    if (!(p.density >= 0.0) || !std::isfinite(p.density))
      throw std::invalid_argument("psi: densities must be finite and >= 0");
  }
  PsiMeasure psi = merge_contributions(pieces);
  if (psi.pieces.empty())
    throw std::invalid_argument("psi: measure has no mass");
  return psi;
}

PsiMeasure psi_model() { return psi_from_pieces({{0.0, 1.0, 1.0}}); }

double psi_cdf(const PsiMeasure& psi, double r) {
  double acc = 0.0;
  for (const PsiPiece& p : psi.pieces) {
    if (r <= p.r_lo) break;
    acc += p.density * (std::min(r, p.r_hi) - p.r_lo);
  }
  return acc;
}

double lq_membership(const PsiMeasure& psi, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_membership: need q >= 1");
  double s = 0.0;
  for (const PsiPiece& p : psi.pieces)
    s += std::pow(p.density, q) * (p.r_hi - p.r_lo);
  return std::pow(s, 1.0 / q);
}

QuadratureRule quadrature_rule_from_name(const std::string& name) {
  if (name == "midpoint") return QuadratureRule::midpoint;
  if (name == "gauss-legendre") return QuadratureRule::gauss_legendre;
  throw std::invalid_argument("quadrature rule must be midpoint or gauss-legendre");
}

std::string quadrature_rule_name(QuadratureRule rule) {
  return rule == QuadratureRule::midpoint ? "midpoint" : "gauss-legendre";
}

void gauss_legendre_reference(int n, std::vector<double>& x,
                              std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pn = 0.0, dpn = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2 * k + 1) * t * p1 - k * p2) / (k + 1);
      }
      pn = p0;
      dpn = n * (t * p0 - p1) / (t * t - 1.0);
      const double dt = pn / dpn;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[n - 1 - i] = t;
    x[i] = -t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dpn * dpn);
  }
}

Quadrature quadrature(const PsiMeasure& psi, int n_nodes, QuadratureRule rule) {
  if (psi.pieces.empty())
    throw std::invalid_argument("quadrature: empty measure");
  if (n_nodes < 1) throw std::invalid_argument("quadrature: need n_nodes >= 1");
  Quadrature q;
  std::vector<double> gx, gw;
  if (rule == QuadratureRule::gauss_legendre)
    gauss_legendre_reference(n_nodes, gx, gw);
  for (const PsiPiece& p : psi.pieces) {
    const double len = p.r_hi - p.r_lo;
    for (int i = 0; i < n_nodes; ++i) {
      if (rule == QuadratureRule::midpoint) {
        q.nodes.push_back(p.r_lo + (i + 0.5) * len / n_nodes);
        q.weights.push_back(p.density * len / n_nodes);
      } else {
        q.nodes.push_back(p.r_lo + 0.5 * len * (1.0 + gx[i]));
        q.weights.push_back(p.density * 0.5 * len * gw[i]);
      }
    }
  }
  return q;
}

}  // namespace dmnls
