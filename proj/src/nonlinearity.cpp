#include "dmnls/nonlinearity.hpp"

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace dmnls {

namespace {

using boost::math::quadrature::gauss_kronrod;

double integrate_vs(const std::function<double(double)>& h, double lo,
                    double hi, int max_depth = 10) {
  auto integrand = [&h](double s) { return h(s) * s; };
  return gauss_kronrod<double, 15>::integrate(integrand, lo, hi, max_depth,
                                              1e-13);
}

}  // namespace

std::function<double(double)> quadrature_antiderivative(
    std::function<double(double)> h, double a_cache_max) {
  const double a_lo = 1e-6;
  const double a_hi = a_cache_max;
  const int n_knots = 1 << 16;
  std::vector<double> knots(n_knots), values(n_knots), slopes(n_knots);
  const double ratio = std::log(a_hi / a_lo) / (n_knots - 1);
  for (int i = 0; i < n_knots; ++i) knots[i] = a_lo * std::exp(ratio * i);
  knots.back() = a_hi;
  // Shallow depths: panels this narrow are already below the interpolation
  // error floor, and h may oscillate without limit near zero.
  values[0] = integrate_vs(h, 0.0, a_lo, 6);
  slopes[0] = h(knots[0]) * knots[0];
  for (int i = 1; i < n_knots; ++i) {
    values[i] = values[i - 1] + integrate_vs(h, knots[i - 1], knots[i], 0);
    slopes[i] = h(knots[i]) * knots[i];
  }
  const double v_hi = values.back();
  auto interp = std::make_shared<boost::math::interpolators::cubic_hermite<
      std::vector<double>>>(std::move(knots), std::move(values),
                            std::move(slopes));
  return [h = std::move(h), interp, a_lo, a_hi, v_hi](double a) -> double {
    if (a <= 0.0) return 0.0;
    if (a < a_lo) return integrate_vs(h, 0.0, a, 6);
    if (a <= a_hi) return (*interp)(a);
    return v_hi + integrate_vs(h, a_hi, a);
  };
}

NonlinearitySpec kerr_nonlinearity() {
  NonlinearitySpec s;
  s.h = [](double a) { return a * a; };
  s.h_prime = [](double a) { return 2.0 * a; };
  s.V = [](double a) {
    const double a2 = a * a;
    return 0.25 * a2 * a2;
  };
  s.p = 2.0;
  s.class_tag = "kerr";
  return s;
}

NonlinearitySpec power_nonlinearity(double p) {
  if (!(p > 0.0) || p > 4.0)
    throw std::invalid_argument("power nonlinearity: need 0 < p <= 4");
  NonlinearitySpec s;
  s.h = [p](double a) { return std::pow(a, p); };
  s.h_prime = [p](double a) { return p * std::pow(a, p - 1.0); };
  s.V = [p](double a) { return std::pow(a, p + 2.0) / (p + 2.0); };
  s.p = p;
  s.class_tag = "power";
  return s;
}

NonlinearitySpec saturating_nonlinearity() {
  NonlinearitySpec s;
  s.h = [](double a) {
    const double a2 = a * a;
    return a2 / (1.0 + a2);
  };
  s.h_prime = [](double a) {
    const double d = 1.0 + a * a;
    return 2.0 * a / (d * d);
  };
  s.V = [](double a) {
    const double a2 = a * a;
    return 0.5 * (a2 - std::log1p(a2));
  };
  s.p = 0.0;
  s.class_tag = "saturating";
  return s;
}

NonlinearitySpec oscillating_nonlinearity(double delta, double kappa) {
  if (!(kappa > 0.0) || !(delta > kappa))
    throw std::invalid_argument("oscillating nonlinearity: need 0 < kappa < delta");
  auto h = [delta, kappa](double a) -> double {
    if (a <= 0.0) return 0.0;
    return std::pow(a, delta) * std::sin(std::pow(a, -kappa));
  };
  NonlinearitySpec s;
  s.h = h;
  s.h_prime = [delta, kappa](double a) -> double {
    const double phase = std::pow(a, -kappa);
    return delta * std::pow(a, delta - 1.0) * std::sin(phase) -
           kappa * std::pow(a, delta - kappa - 1.0) * std::cos(phase);
  };
  s.V = quadrature_antiderivative(h);
  s.p = std::min(delta, 4.0);
  s.class_tag = "oscillating";
  return s;
}

NonlinearitySpec zero_nonlinearity() {
  NonlinearitySpec s;
  s.h = [](double) { return 0.0; };
  s.h_prime = [](double) { return 0.0; };
  s.V = [](double) { return 0.0; };
  s.p = 0.0;
  s.class_tag = "custom";
  return s;
}

Field apply_P(const NonlinearitySpec& spec, const Field& f) {
  Field out = zero_field(f.grid);
  for (size_t j = 0; j < f.values.size(); ++j) {
    const double a = std::abs(f.values[j]);
    if (a > 0.0) out.values[j] = spec.h(a) * f.values[j];
  }
  return out;
}

double eval_V_integral(const NonlinearitySpec& spec, const Field& f) {
  double s = 0.0;
  for (const cx& v : f.values) s += spec.V(std::abs(v));
  return f.grid->dx() * s;
}

namespace {

std::vector<double> log_uniform_samples(double a_min, double a_max, int n) {
  std::vector<double> a(n);
  const double step = std::log(a_max / a_min) / (n - 1);
  for (int i = 0; i < n; ++i) a[i] = a_min * std::exp(step * i);
  a.back() = a_max;
  return a;
}

struct WorstCase {
  double value = -std::numeric_limits<double>::infinity();
  double point = 0.0;
  void take_max(double v, double a) {
    if (v > value) {
      value = v;
      point = a;
    }
  }
};

}  // namespace

AssumptionReport audit_assumption(const NonlinearitySpec& spec,
                                  const std::string& id, double a_min,
                                  double a_max, int n_samples,
                                  const AuditParams& params) {
  if (!(a_min > 0.0) || !(a_max > a_min))
    throw std::invalid_argument("audit: need 0 < a_min < a_max");
  if (n_samples < 100)
    throw std::invalid_argument("audit: need at least 100 samples");
  const std::vector<double> a = log_uniform_samples(a_min, a_max, n_samples);

  AssumptionReport rep;
  rep.id = id;
  {
    std::ostringstream os;
    os << n_samples << " log-uniform samples on [" << a_min << ", " << a_max
       << "]";
    rep.samples = os.str();
  }

  std::ostringstream detail;
  if (id == "A1") {
    WorstCase wh, whp;
    for (double ai : a) {
      wh.take_max(std::abs(spec.h(ai)) / (1.0 + std::pow(ai, spec.p)), ai);
      whp.take_max(std::abs(spec.h_prime(ai)) /
                       (1.0 / ai + std::pow(ai, spec.p - 1.0)),
                   ai);
    }
    rep.pass = std::isfinite(wh.value) && std::isfinite(whp.value);
    const WorstCase& w = (wh.value >= whp.value) ? wh : whp;
    rep.worst_ratio = w.value;
    rep.worst_point = w.point;
    detail << "sup|h|/(1+a^p) = " << wh.value << " at a = " << wh.point
           << "; sup|h'|/(a^-1+a^(p-1)) = " << whp.value << " at a = "
           << whp.point << "; h'(a)a at a_min = "
           << spec.h_prime(a_min) * a_min;
  } else if (id == "A2") {
    WorstCase wh, whp;
    for (double ai : a) {
      wh.take_max(std::abs(spec.h(ai)), ai);
      whp.take_max(std::abs(spec.h_prime(ai)) / (1.0 + 1.0 / ai), ai);
    }
    rep.pass = std::isfinite(wh.value) && std::isfinite(whp.value);
    const WorstCase& w = (wh.value >= whp.value) ? wh : whp;
    rep.worst_ratio = w.value;
    rep.worst_point = w.point;
    detail << "sup|h| = " << wh.value << "; sup|h'|/(1+a^-1) = " << whp.value;
  } else if (id == "A3") {
    std::vector<double> envelope(a.size());
    double running = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      running = std::max(running, std::max(spec.h(a[i]), 0.0) /
                                      (1.0 + std::pow(a[i], spec.p)));
      envelope[i] = running;
    }
    double head = -1.0, tail = -1.0, head_a = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const double t = envelope[i] / std::pow(a[i], 4.0);
      if (a[i] >= a_max / 10.0 && head < 0.0) {
        head = t;
        head_a = a[i];
      }
      if (i + 1 == a.size()) tail = t;
    }
    rep.pass = std::isfinite(envelope.back()) && tail < head;
    rep.worst_ratio = tail;
    rep.worst_point = a_max;
    detail << "envelope max(h,0)/(1+a^p) over a'<=a: value " << envelope.back()
           << " at a_max; envelope/a^4 moves " << head << " (a = " << head_a
           << ") -> " << tail << " (a = " << a_max << "), decrease "
           << (rep.pass ? "observed" : "NOT observed");
  } else if (id == "A4" || id == "A5") {
    const bool fixed_p0 = (id == "A4");
    if (fixed_p0 && !(params.p0 > 2.0))
      throw std::invalid_argument("A4 audit: supply p0 > 2");
    if (!fixed_p0 && !params.p_of_a)
      throw std::invalid_argument("A5 audit: supply the exponent profile p(.)");
    double min_ratio = std::numeric_limits<double>::infinity();
    double min_point = a_min;
    double worst_margin = std::numeric_limits<double>::infinity();
    double prev_p = std::numeric_limits<double>::infinity();
    for (double ai : a) {
      const double p0 = fixed_p0 ? params.p0 : params.p_of_a(ai);
      if (!fixed_p0) {
        if (!(p0 > 2.0) || p0 > prev_p + 1e-12)
          throw std::invalid_argument(
              "A5 audit: p(.) must be decreasing with values > 2");
        prev_p = p0;
      }
      const double lhs = spec.h(ai) * (ai * ai);
      const double rhs = spec.V(ai);
      const double scale = std::max({std::abs(lhs), std::abs(p0 * rhs), 1e-300});
      worst_margin = std::min(worst_margin, (lhs - p0 * rhs) / scale);
      if (rhs > 0.0 && lhs / rhs < min_ratio) {
        min_ratio = lhs / rhs;
        min_point = ai;
      }
    }
    rep.pass = worst_margin >= -1e-12;
    rep.worst_ratio = min_ratio;
    rep.worst_point = min_point;
    detail << "min h(a)a^2 / V(a) = " << min_ratio << " at a = " << min_point
           << " (want >= " << (fixed_p0 ? "p0" : "p(a)") << "); worst relative margin "
           << worst_margin;
  } else if (id == "A6") {
    WorstCase w;
    for (double ai : a) w.take_max(spec.h(ai), ai);
    rep.pass = w.value > 0.0;
    rep.worst_ratio = w.value;
    rep.worst_point = w.point;
    detail << "max h(a) = " << w.value << " at a = " << w.point;
  } else {
    throw std::invalid_argument("audit: unknown assumption id " + id);
  }
  rep.detail = detail.str();
  return rep;
}

}  // namespace dmnls
