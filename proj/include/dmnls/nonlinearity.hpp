#pragma once

#include <functional>
#include <string>

#include "dmnls/grid.hpp"

namespace dmnls {

// Scalar nonlinearity P(z) = h(|z|) z together with the antiderivative
// V(a) = integral of h(s) s over [0, a].  h_prime is only consumed by the
// assumption auditors; the solvers call h alone, so profiles whose h'
// blows up at a = 0 are fine.
struct NonlinearitySpec {
  std::function<double(double)> h;
  std::function<double(double)> h_prime;
  std::function<double(double)> V;
  double p = 0.0;
  std::string class_tag = "custom";
};

NonlinearitySpec kerr_nonlinearity();
NonlinearitySpec power_nonlinearity(double p);
NonlinearitySpec saturating_nonlinearity();
NonlinearitySpec oscillating_nonlinearity(double delta, double kappa);
NonlinearitySpec zero_nonlinearity();  // h = 0: linear (free) equation

// V(a) = ∫₀^a h(s) s ds by adaptive quadrature, cached on a log-spaced
// grid over [1e-6, a_cache_max] with cubic Hermite interpolation using
// the exact slope V'(a) = h(a) a; beyond the cache it integrates fresh.
// Intended for profiles without a closed-form V.
std::function<double(double)> quadrature_antiderivative(
    std::function<double(double)> h, double a_cache_max = 16.0);

Field apply_P(const NonlinearitySpec& spec, const Field& f);
double eval_V_integral(const NonlinearitySpec& spec, const Field& f);

struct AssumptionReport {
  std::string id;
  bool pass = false;
  double worst_ratio = 0.0;
  double worst_point = 0.0;
  std::string samples;
  std::string detail;
};

struct AuditParams {
  double p0 = 0.0;                       // superquadraticity constant (> 2)
  std::function<double(double)> p_of_a;  // decreasing exponent profile, values > 2
};

// Sample-based certificate for one of the structural conditions A1..A6 on a
// log-uniform amplitude grid.  A certificate can refute or support the
// condition on the sampled range; it proves nothing beyond it.
//   A1: sup |h|/(1+a^p) and sup |h'|/(a^{-1}+a^{p-1}) finite.
//   A2: sup |h| and sup |h'|/(1+a^{-1}) finite (local bounds).
//   A3: running max of h_+/(1+a^p) grows slower than a^4 at the top decade.
//   A4: h(a) a^2 >= p0 * V(a) with user-supplied p0 > 2.
//   A5: h(a) a^2 >= p(a) * V(a) with user-supplied decreasing p(.) > 2.
//   A6: some sample with h(a) > 0.
AssumptionReport audit_assumption(const NonlinearitySpec& spec,
                                  const std::string& id, double a_min,
                                  double a_max, int n_samples,
                                  const AuditParams& params = {});

}  // namespace dmnls
