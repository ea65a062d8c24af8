#include "dmnls/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace dmnls {

namespace {

// FFTW's planner is not thread-safe; executing existing plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Grid::Grid(double half_width, int n_points)
    : half_width_(half_width),
      dx_(2.0 * half_width / n_points),
      n_(n_points),
      x_(n_points),
      eta_(n_points) {
  for (int j = 0; j < n_; ++j) x_[j] = -half_width_ + j * dx_;
  const double deta = M_PI / half_width_;
  for (int j = 0; j < n_; ++j) {
    const int k = (j < n_ / 2) ? j : j - n_;
    eta_[j] = deta * k;
  }
  std::vector<cx> a(n_), b(n_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_fwd_ = fftw_plan_dft_1d(n_, as_fftw(a.data()), as_fftw(b.data()),
                               FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_bwd_ = fftw_plan_dft_1d(n_, as_fftw(a.data()), as_fftw(b.data()),
                               FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("fftw plan creation failed");
}

Grid::~Grid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

GridPtr Grid::make(double half_width, int n_points) {
  if (!(half_width > 0.0))
    throw std::invalid_argument("grid: half_width must be positive");
  if (n_points < 8 || n_points % 2 != 0)
    throw std::invalid_argument("grid: n_points must be even and at least 8");
  return GridPtr(new Grid(half_width, n_points));
}

GridPtr make_grid(double half_width, int n_points) {
  return Grid::make(half_width, n_points);
}

void Grid::forward(const cx* in, cx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_),
                   as_fftw(const_cast<cx*>(in)), as_fftw(out));
  const double s = 1.0 / std::sqrt(static_cast<double>(n_));
  for (int j = 0; j < n_; ++j) out[j] *= s;
}

void Grid::backward(const cx* in, cx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_),
                   as_fftw(const_cast<cx*>(in)), as_fftw(out));
  const double s = 1.0 / std::sqrt(static_cast<double>(n_));
  for (int j = 0; j < n_; ++j) out[j] *= s;
}

Field make_field(const GridPtr& g, const std::function<cx(double)>& f) {
  Field out{g, std::vector<cx>(g->n_points())};
  for (int j = 0; j < g->n_points(); ++j) out.values[j] = f(g->x()[j]);
  return out;
}

Field zero_field(const GridPtr& g) {
  return Field{g, std::vector<cx>(g->n_points(), cx(0.0, 0.0))};
}

bool same_grid(const Field& a, const Field& b) {
  return a.grid->n_points() == b.grid->n_points() &&
         a.grid->half_width() == b.grid->half_width();
}

std::vector<cx> to_spectrum(const Field& f) {
  std::vector<cx> out(f.values.size());
  f.grid->forward(f.values.data(), out.data());
  return out;
}

Field from_spectrum(const GridPtr& g, std::span<const cx> spectrum) {
  if (static_cast<int>(spectrum.size()) != g->n_points())
    throw std::invalid_argument("from_spectrum: size mismatch");
  Field out{g, std::vector<cx>(g->n_points())};
  g->backward(spectrum.data(), out.values.data());
  return out;
}

double norm_l2(const Field& f) {
  double s = 0.0;
  for (const cx& v : f.values) s += std::norm(v);
  return std::sqrt(f.grid->dx() * s);
}

double norm_l2_spectrum(std::span<const cx> spectrum, double dx) {
  double s = 0.0;
  for (const cx& v : spectrum) s += std::norm(v);
  return std::sqrt(dx * s);
}

double norm_h1(const Field& f) {
  std::vector<cx> hat = to_spectrum(f);
  const std::vector<double>& eta = f.grid->eta();
  double s = 0.0;
  for (size_t j = 0; j < hat.size(); ++j)
    s += (1.0 + eta[j] * eta[j]) * std::norm(hat[j]);
  return std::sqrt(f.grid->dx() * s);
}

cx inner(const Field& f, const Field& g) {
  if (!same_grid(f, g)) throw std::invalid_argument("inner: grid mismatch");
  cx s(0.0, 0.0);
  for (size_t j = 0; j < f.values.size(); ++j)
    s += std::conj(f.values[j]) * g.values[j];
  return f.grid->dx() * s;
}

Field derivative(const Field& f) {
  std::vector<cx> hat = to_spectrum(f);
  const std::vector<double>& eta = f.grid->eta();
  for (size_t j = 0; j < hat.size(); ++j) hat[j] *= cx(0.0, eta[j]);
  return from_spectrum(f.grid, hat);
}

Field second_derivative(const Field& f) {
  std::vector<cx> hat = to_spectrum(f);
  const std::vector<double>& eta = f.grid->eta();
  for (size_t j = 0; j < hat.size(); ++j) hat[j] *= -eta[j] * eta[j];
  return from_spectrum(f.grid, hat);
}

Field& operator+=(Field& a, const Field& b) {
  for (size_t j = 0; j < a.values.size(); ++j) a.values[j] += b.values[j];
  return a;
}

Field& operator-=(Field& a, const Field& b) {
  for (size_t j = 0; j < a.values.size(); ++j) a.values[j] -= b.values[j];
  return a;
}

Field& operator*=(Field& a, cx s) {
  for (cx& v : a.values) v *= s;
  return a;
}

Field operator+(Field a, const Field& b) {
  a += b;
  return a;
}

Field operator-(Field a, const Field& b) {
  a -= b;
  return a;
}

Field operator*(cx s, Field a) {
  a *= s;
  return a;
}

Field operator*(double s, Field a) {
  a *= cx(s, 0.0);
  return a;
}

void axpy(cx a, const Field& x, Field& y) {
  for (size_t j = 0; j < x.values.size(); ++j) y.values[j] += a * x.values[j];
}

}  // namespace dmnls
