#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace dmnls {

using cx = std::complex<double>;

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

// Uniform periodic grid on [-L, L) with n equispaced samples and the
// matching discrete Fourier basis e^{i eta_k x}, eta_k = pi k / L for
// k in {-n/2, ..., n/2 - 1} (stored in standard DFT order).  Holds the
// FFTW plans so transforms after construction are allocation-free.
class Grid {
 public:
  static GridPtr make(double half_width, int n_points);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  double half_width() const { return half_width_; }
  int n_points() const { return n_; }
  double dx() const { return dx_; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& eta() const { return eta_; }

  // Unitary transforms: both directions carry 1/sqrt(n), so composing
  // them is the identity and plain ell^2 sums are preserved.
  void forward(const cx* in, cx* out) const;
  void backward(const cx* in, cx* out) const;

 private:
  Grid(double half_width, int n_points);

  double half_width_;
  double dx_;
  int n_;
  std::vector<double> x_;
  std::vector<double> eta_;
  void* plan_fwd_;
  void* plan_bwd_;
};

GridPtr make_grid(double half_width, int n_points);

struct Field {
  GridPtr grid;
  std::vector<cx> values;
};

Field make_field(const GridPtr& g, const std::function<cx(double)>& f);
Field zero_field(const GridPtr& g);

bool same_grid(const Field& a, const Field& b);

std::vector<cx> to_spectrum(const Field& f);
Field from_spectrum(const GridPtr& g, std::span<const cx> spectrum);

// Quadrature-weighted norms and pairing: sums carry the cell width dx,
// so they approximate the continuum integrals on [-L, L).
double norm_l2(const Field& f);
double norm_h1(const Field& f);
cx inner(const Field& f, const Field& g);

double norm_l2_spectrum(std::span<const cx> spectrum, double dx);

Field derivative(const Field& f);
Field second_derivative(const Field& f);

Field& operator+=(Field& a, const Field& b);
Field& operator-=(Field& a, const Field& b);
Field& operator*=(Field& a, cx s);
Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cx s, Field a);
Field operator*(double s, Field a);

// y += a * x
void axpy(cx a, const Field& x, Field& y);

}  // namespace dmnls
