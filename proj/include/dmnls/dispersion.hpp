#pragma once

#include <string>
#include <vector>

namespace dmnls {

struct DispersionSegment {
  double tau;    // duration, > 0
  double slope;  // local dispersion value, != 0
};

// One period of a piecewise-constant local dispersion map: mean-zero part
// d0 with segments (tau_j, d_j), plus the separated average d_av.
struct DispersionProfile {
  double d_av = 0.0;
  double period = 0.0;  // sum of durations
  std::vector<DispersionSegment> segments;
};

DispersionProfile make_profile(double d_av,
                               const std::vector<DispersionSegment>& segments);

// D(t) = integral of d0 over [0, t]; piecewise linear with D(0) = D(period) = 0.
double cumulative_D(const DispersionProfile& profile, double t);

struct PsiPiece {
  double r_lo;
  double r_hi;
  double density;
};

// Piecewise-constant probability density over the retarded-dispersion
// variable r: pieces are sorted, disjoint, and strictly positive.
struct PsiMeasure {
  std::vector<PsiPiece> pieces;
  double total_mass = 0.0;
};

// Pushforward of the uniform time measure on one period under D: each
// segment where D has slope d_j spreads mass (tau_j / period) uniformly
// over the image interval, contributing density 1/(period |d_j|).
PsiMeasure psi_from_profile(const DispersionProfile& profile);

// Directly supplied density pieces; overlaps are resolved by summation on
// the sorted breakpoint decomposition, identical to the pushforward path.
PsiMeasure psi_from_pieces(const std::vector<PsiPiece>& pieces);

PsiMeasure psi_model();  // density 1 on [0, 1)

double psi_cdf(const PsiMeasure& psi, double r);
double lq_membership(const PsiMeasure& psi, double q);

enum class QuadratureRule { midpoint, gauss_legendre };
QuadratureRule quadrature_rule_from_name(const std::string& name);
std::string quadrature_rule_name(QuadratureRule rule);

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Per-piece rule with n_nodes nodes on every piece; weights carry the piece
// density, so the weight sum reproduces the total mass.
Quadrature quadrature(const PsiMeasure& psi, int n_nodes, QuadratureRule rule);

// Reference Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre_reference(int n, std::vector<double>& x,
                              std::vector<double>& w);

}  // namespace dmnls
