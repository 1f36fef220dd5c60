#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "doilab/sphere.hpp"

namespace doilab {

using Complex = std::complex<double>;

// Gaussian interaction kernel k(x) = (a/pi)^{d/2} exp(-a |x|^2) with Fourier
// transform khat(xi) = exp(-pi^2 |xi|^2 / a).
struct KernelSpec {
  double a = 1.0;
  int d = 1;
  double mu = 0.5;  // int |x|^2 k(x) dx = d / (2a)
  double c0 = 0.0;  // constant in c0 |xi|^2 khat^2 <= 1 - khat

  // Throws ConfigError unless 0 < a < pi and d is 1 or 2.
  static KernelSpec gaussian(double a, int d, double margin = 0.01);
};

double khat(const KernelSpec& spec, double xi_sq);
double khat(const KernelSpec& spec, std::span<const double> xi);

// h(xi) = xi sqrt((1 - khat(xi)) / |xi|^2), h(0) = 0.
std::vector<double> h_multiplier(const KernelSpec& spec, std::span<const double> xi);

// Periodic grid [0, X)^d with n nodes per axis. Site index is row-major
// (last axis fastest).
class TorusGrid {
 public:
  TorusGrid(int d, double length, int n);

  int dim() const noexcept { return d_; }
  double length() const noexcept { return length_; }
  int n() const noexcept { return n_; }
  int size() const noexcept { return size_; }
  double spacing() const noexcept { return length_ / n_; }
  double cell_volume() const noexcept { return cell_; }

  // Integer wavenumber of FFT bin j along one axis, in [-n/2, n/2).
  int wavenumber(int j) const { return j < n_ / 2 ? j : j - n_; }
  // Frequency vector xi = k / X of the mode at flat index.
  std::array<double, 2> frequency(int idx) const;
  double frequency_sq(int idx) const;
  // Node coordinates.
  std::array<double, 2> position(int idx) const;
  // Neighbour of site idx shifted by +1 (or -1) along axis.
  int shift(int idx, int axis, int step) const;

  bool operator==(const TorusGrid& o) const {
    return d_ == o.d_ && n_ == o.n_ && length_ == o.length_;
  }

 private:
  int d_;
  double length_;
  int n_;
  int size_;
  double cell_;
};

// Unnormalized forward DFT and its normalized inverse on the torus.
std::vector<Complex> fft_forward(const TorusGrid& grid, std::span<const Complex> in);
std::vector<Complex> fft_backward(const TorusGrid& grid, std::span<const Complex> in);
std::vector<Complex> fft_forward(const TorusGrid& grid, std::span<const double> in);

// Mode-wise multiplier tables on the frequency lattice.
std::vector<double> mollifier_table(const TorusGrid& grid, const KernelSpec& spec, double eps);
std::vector<double> l_eps_table(const TorusGrid& grid, const KernelSpec& spec, double eps);

// Apply a real, even multiplier table to a real field.
std::vector<double> apply_multiplier(const TorusGrid& grid, std::span<const double> table,
                                     std::span<const double> u);

// One symmetric tensor per site.
struct QTensorField {
  TorusGrid grid;
  std::vector<QTensor> q;

  explicit QTensorField(const TorusGrid& g) : grid(g), q(g.size(), QTensor::Zero()) {}
};

// Largest deviation from trace zero and from the entry bound 2/3 over all sites.
double max_trace(const QTensorField& Q);
bool entries_bounded(const QTensorField& Q, double slack = 1e-12);

// u * k_eps, multiplier khat(sqrt(eps) xi).
std::vector<double> convolve_keps(const TorusGrid& grid, const KernelSpec& spec,
                                  std::span<const double> u, double eps);
QTensorField convolve_keps(const QTensorField& Q, const KernelSpec& spec, double eps);

// L_eps u = (u - u * k_eps) / eps.
std::vector<double> apply_L_eps(const TorusGrid& grid, const KernelSpec& spec,
                                std::span<const double> u, double eps);
QTensorField apply_L_eps(const QTensorField& Q, const KernelSpec& spec, double eps);

// T_eps u, multiplier h(sqrt(eps) xi) / sqrt(eps); one complex field per axis.
std::vector<std::vector<Complex>> apply_T_eps(const TorusGrid& grid, const KernelSpec& spec,
                                              std::span<const double> u, double eps);

// (alpha/4) sum_x sum_y |Q(x) - Q(y)|^2 k_eps(x - y) h^{2d} in its spectral
// form (alpha eps / 2) sum_x Q : L_eps Q h^d.
double doubled_energy_form(const QTensorField& Q, const KernelSpec& spec, double eps, double alpha);

// Largest c with c |xi|^2 khat(sqrt(eps) xi)^2 <= 1 - khat(sqrt(eps) xi) at
// every nonzero lattice frequency, scaled by sqrt(eps).
double certify_c0(const TorusGrid& grid, const KernelSpec& spec, double eps);

}  // namespace doilab
