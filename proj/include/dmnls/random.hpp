#pragma once

#include <cmath>
#include <random>

#include "dmnls/grid.hpp"

namespace dmnls {

// Band-limited complex noise: modes |k| <= k_max with independent complex
// Gaussian coefficients.  Draw order is fixed, so a seeded generator gives
// reproducible fields.
inline Field random_band_limited(const GridPtr& g, std::mt19937_64& rng,
                                 int k_max = 8) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field f = zero_field(g);
  const double scale = 1.0 / std::sqrt(2.0 * (2 * k_max + 1));
  for (int k = -k_max; k <= k_max; ++k) {
    const cx c(gauss(rng) * scale, gauss(rng) * scale);
    const double eta = M_PI * k / g->half_width();
    for (int j = 0; j < g->n_points(); ++j)
      f.values[j] += c * std::polar(1.0, eta * g->x()[j]);
  }
  return f;
}

// Localized test field: random band-limited modulation under a Gaussian
// envelope of random amplitude and width.
inline Field random_gaussian_envelope(const GridPtr& g, std::mt19937_64& rng,
                                      int k_max = 8) {
  std::uniform_real_distribution<double> amp(0.2, 2.0);
  std::uniform_real_distribution<double> width(0.6, 2.5);
  const double a = amp(rng);
  const double sigma = width(rng);
  Field f = random_band_limited(g, rng, k_max);
  for (int j = 0; j < g->n_points(); ++j) {
    const double x = g->x()[j];
    f.values[j] *= a * std::exp(-x * x / (2.0 * sigma * sigma));
  }
  return f;
}

inline Field gaussian_field(const GridPtr& g, double amplitude, double width,
                            double center = 0.0, double chirp = 0.0) {
  return make_field(g, [=](double x) {
    const double s = (x - center) / width;
    return amplitude * std::exp(-0.5 * s * s) *
           std::polar(1.0, chirp * (x - center) * (x - center));
  });
}

}  // namespace dmnls
