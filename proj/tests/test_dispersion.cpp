#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dmnls/dispersion.hpp"

using namespace dmnls;
using doctest::Approx;

TEST_CASE("model two-step profile pushes forward to the unit indicator") {
  auto profile = make_profile(1.0, {{1.0, 1.0}, {1.0, -1.0}});
  CHECK(profile.period == 2.0);
  PsiMeasure psi = psi_from_profile(profile);
  REQUIRE(psi.pieces.size() == 1);
  CHECK(psi.pieces[0].r_lo == 0.0);
  CHECK(psi.pieces[0].r_hi == 1.0);
  CHECK(psi.pieces[0].density == 1.0);
  CHECK(psi.total_mass == 1.0);

  PsiMeasure model = psi_model();
  REQUIRE(model.pieces.size() == 1);
  CHECK(model.pieces[0].r_lo == 0.0);
  CHECK(model.pieces[0].r_hi == 1.0);
  CHECK(model.pieces[0].density == 1.0);
}

TEST_CASE("faster symmetric profile halves the density over a doubled range") {
  PsiMeasure psi = psi_from_profile(make_profile(0.0, {{1.0, 2.0}, {1.0, -2.0}}));
  REQUIRE(psi.pieces.size() == 1);
  CHECK(psi.pieces[0].r_lo == Approx(0.0).scale(1.0));
  CHECK(psi.pieces[0].r_hi == Approx(2.0).epsilon(1e-15));
  CHECK(psi.pieces[0].density == Approx(0.5).epsilon(1e-15));
  CHECK(psi.total_mass == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("asymmetric profile sums densities on the shared image") {
  // D runs 0 -> 1.5 at slope 3 over [0, 0.5], then back at slope -1.
  PsiMeasure psi =
      psi_from_profile(make_profile(0.5, {{0.5, 3.0}, {1.5, -1.0}}));
  REQUIRE(psi.pieces.size() == 1);
  CHECK(psi.pieces[0].r_lo == Approx(0.0).scale(1.0));
  CHECK(psi.pieces[0].r_hi == Approx(1.5).epsilon(1e-15));
  // 1/(2*3) + 1/(2*1)
  CHECK(psi.pieces[0].density == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(psi.total_mass == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cumulative dispersion is piecewise linear and mean zero") {
  auto profile = make_profile(1.0, {{1.0, 1.0}, {1.0, -1.0}});
  CHECK(cumulative_D(profile, 0.0) == Approx(0.0).scale(1.0));
  CHECK(cumulative_D(profile, 0.5) == Approx(0.5).epsilon(1e-15));
  CHECK(cumulative_D(profile, 1.0) == Approx(1.0).epsilon(1e-15));
  CHECK(cumulative_D(profile, 1.5) == Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(cumulative_D(profile, 2.0)) < 1e-15);
  CHECK_THROWS_AS(cumulative_D(profile, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(cumulative_D(profile, 2.1), std::invalid_argument);
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(make_profile(1.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_profile(1.0, {{0.0, 1.0}, {1.0, -1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_profile(1.0, {{1.0, 0.0}, {1.0, 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_profile(1.0, {{1.0, 1.0}, {1.0, -0.5}}),
                  std::invalid_argument);
}

TEST_CASE("direct pieces are sorted, merged, and validated") {
  PsiMeasure psi = psi_from_pieces(
      {{0.5, 1.5, 0.5}, {0.0, 1.0, 0.5}});  // unsorted, overlapping
  REQUIRE(psi.pieces.size() == 3);
  CHECK(psi.pieces[0].r_lo == 0.0);
  CHECK(psi.pieces[0].r_hi == 0.5);
  CHECK(psi.pieces[0].density == 0.5);
  CHECK(psi.pieces[1].r_lo == 0.5);
  CHECK(psi.pieces[1].r_hi == 1.0);
  CHECK(psi.pieces[1].density == 1.0);
  CHECK(psi.pieces[2].r_hi == 1.5);
  CHECK(psi.pieces[2].density == 0.5);
  CHECK(psi.total_mass == Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(psi_from_pieces({{1.0, 0.5, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(psi_from_pieces({{0.0, 1.0, -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(psi_from_pieces({}), std::invalid_argument);
}

TEST_CASE("cdf of the model density") {
  PsiMeasure psi = psi_model();
  CHECK(psi_cdf(psi, -1.0) == 0.0);
  CHECK(psi_cdf(psi, 0.3) == Approx(0.3).epsilon(1e-15));
  CHECK(psi_cdf(psi, 1.0) == Approx(1.0).epsilon(1e-15));
  CHECK(psi_cdf(psi, 7.0) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lq membership values") {
  PsiMeasure model = psi_model();
  for (double q : {1.0, 2.0, 5.0})
    CHECK(lq_membership(model, q) == Approx(1.0).epsilon(1e-14));
  PsiMeasure half = psi_from_pieces({{0.0, 2.0, 0.5}});
  // (2 * 0.5^2)^{1/2}
  CHECK(lq_membership(half, 2.0) == Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK_THROWS_AS(lq_membership(model, 0.5), std::invalid_argument);
}

TEST_CASE("monte carlo pushforward agreement for random profiles") {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> tau_draw(0.2, 1.5);
  std::uniform_real_distribution<double> slope_draw(0.3, 2.5);
  std::uniform_real_distribution<double> sign_draw(0.0, 1.0);

  for (int trial = 0; trial < 2; ++trial) {
    std::vector<DispersionSegment> segments;
    double weighted = 0.0;
    for (int j = 0; j < 5; ++j) {
      const double tau = tau_draw(rng);
      const double slope =
          (sign_draw(rng) < 0.5 ? -1.0 : 1.0) * slope_draw(rng);
      segments.push_back({tau, slope});
      weighted += tau * slope;
    }
    // closing segment forces the mean-zero constraint
    segments.push_back({1.0, -weighted});
    auto profile = make_profile(1.0, segments);
    PsiMeasure psi = psi_from_profile(profile);
    CHECK(psi.total_mass == Approx(1.0).epsilon(1e-12));

    const int n_samples = 1000000;
    std::vector<double> draws(n_samples);
    std::uniform_real_distribution<double> t_draw(0.0, profile.period);
    for (double& d : draws) d = cumulative_D(profile, t_draw(rng));
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      const double cdf = psi_cdf(psi, draws[i]);
      ks = std::max(ks, std::abs(cdf - double(i) / n_samples));
      ks = std::max(ks, std::abs(cdf - double(i + 1) / n_samples));
    }
    CHECK(ks < 2.5e-3);  // ~1.36/sqrt(n) is the 5% point
  }
}

TEST_CASE("gauss-legendre reference rule integrates polynomials exactly") {
  std::vector<double> x, w;
  gauss_legendre_reference(4, x, w);
  REQUIRE(x.size() == 4);
  double mass = 0.0, m2 = 0.0, m6 = 0.0, m3 = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mass += w[i];
    m2 += w[i] * x[i] * x[i];
    m3 += w[i] * x[i] * x[i] * x[i];
    m6 += w[i] * std::pow(x[i], 6);
  }
  CHECK(mass == Approx(2.0).epsilon(1e-15));
  CHECK(m2 == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::abs(m3) < 1e-15);
  CHECK(m6 == Approx(2.0 / 7.0).epsilon(1e-14));  // degree 7 rule

  gauss_legendre_reference(32, x, w);
  double m10 = 0.0;
  for (size_t i = 0; i < x.size(); ++i) m10 += w[i] * std::pow(x[i], 10);
  CHECK(m10 == Approx(2.0 / 11.0).epsilon(1e-14));
}

TEST_CASE("psi quadrature reproduces moments of the model measure") {
  PsiMeasure psi = psi_model();
  for (auto rule : {QuadratureRule::gauss_legendre, QuadratureRule::midpoint}) {
    Quadrature q = quadrature(psi, 32, rule);
    REQUIRE(q.nodes.size() == 32);
    double mass = 0.0, m1 = 0.0, m2 = 0.0;
    for (size_t i = 0; i < q.nodes.size(); ++i) {
      mass += q.weights[i];
      m1 += q.weights[i] * q.nodes[i];
      m2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    }
    CHECK(mass == Approx(1.0).epsilon(1e-14));
    CHECK(m1 == Approx(0.5).epsilon(1e-6));
    // midpoint carries an h^2/24 moment error at 32 cells
    CHECK(m2 == Approx(1.0 / 3.0).epsilon(5e-4));
  }
  // gauss-legendre is exact on polynomials
  Quadrature gl = quadrature(psi, 3, QuadratureRule::gauss_legendre);
  double m3 = 0.0;
  for (size_t i = 0; i < gl.nodes.size(); ++i)
    m3 += gl.weights[i] * std::pow(gl.nodes[i], 3);
  CHECK(m3 == Approx(0.25).epsilon(1e-14));
}

TEST_CASE("midpoint nodes sit at cell centers") {
  Quadrature q = quadrature(psi_model(), 4, QuadratureRule::midpoint);
  REQUIRE(q.nodes.size() == 4);
  CHECK(q.nodes[0] == Approx(0.125).epsilon(1e-15));
  CHECK(q.nodes[1] == Approx(0.375).epsilon(1e-15));
  CHECK(q.nodes[2] == Approx(0.625).epsilon(1e-15));
  CHECK(q.nodes[3] == Approx(0.875).epsilon(1e-15));
  for (double w : q.weights) CHECK(w == Approx(0.25).epsilon(1e-15));
}

TEST_CASE("quadrature weights carry the density of multi-piece measures") {
  PsiMeasure psi = psi_from_pieces({{0.0, 0.5, 1.2}, {1.0, 1.5, 0.8}});
  Quadrature q = quadrature(psi, 8, QuadratureRule::gauss_legendre);
  REQUIRE(q.nodes.size() == 16);
  double mass = 0.0;
  for (double w : q.weights) mass += w;
  CHECK(mass == Approx(psi.total_mass).epsilon(1e-14));
  CHECK(std::is_sorted(q.nodes.begin(), q.nodes.end()));
  CHECK(q.nodes.front() > 0.0);
  CHECK(q.nodes.back() < 1.5);
}

TEST_CASE("rule names round trip") {
  CHECK(quadrature_rule_from_name("midpoint") == QuadratureRule::midpoint);
  CHECK(quadrature_rule_from_name("gauss-legendre") ==
        QuadratureRule::gauss_legendre);
  CHECK(quadrature_rule_name(QuadratureRule::midpoint) == "midpoint");
  CHECK(quadrature_rule_name(QuadratureRule::gauss_legendre) ==
        "gauss-legendre");
  CHECK_THROWS_AS(quadrature_rule_from_name("simpson"), std::invalid_argument);
}
