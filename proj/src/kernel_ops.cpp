#include "doilab/kernel_ops.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include <fftw3.h>

#include "doilab/errors.hpp"

namespace doilab {

namespace {

constexpr double kPi = std::numbers::pi;

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Plans are created once per (d, n) and executed with the new-array interface,
// which is safe to call concurrently.
const PlanPair& plans_for(int d, int n) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({d, n});
  if (it != cache.end()) return it->second;
  const int total = d == 1 ? n : n * n;
  std::vector<Complex> a(total), b(total);
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = reinterpret_cast<fftw_complex*>(b.data());
  int dims[2] = {n, n};
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft(d, dims, in, out, FFTW_FORWARD, flags);
  p.backward = fftw_plan_dft(d, dims, in, out, FFTW_BACKWARD, flags);
  return cache.emplace(std::make_pair(d, n), p).first->second;
}

std::vector<Complex> run(const TorusGrid& grid, std::span<const Complex> in, bool forward) {
  const auto& p = plans_for(grid.dim(), grid.n());
  std::vector<Complex> src(in.begin(), in.end());
  std::vector<Complex> out(grid.size());
  fftw_execute_dft(forward ? p.forward : p.backward, reinterpret_cast<fftw_complex*>(src.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  if (!forward) {
    const double scale = 1.0 / grid.size();
    for (auto& z : out) z *= scale;
  }
  return out;
}

// Apply a table to each of the six independent entries of a tensor field.
QTensorField apply_table(const QTensorField& Q, std::span<const double> table) {
  QTensorField out(Q.grid);
  std::vector<double> comp(Q.grid.size());
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      for (int s = 0; s < Q.grid.size(); ++s) comp[s] = Q.q[s](i, j);
      auto r = apply_multiplier(Q.grid, table, comp);
      for (int s = 0; s < Q.grid.size(); ++s) out.q[s](i, j) = out.q[s](j, i) = r[s];
    }
  }
  return out;
}

void check_eps(double eps) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
}

}  // namespace

KernelSpec KernelSpec::gaussian(double a, int d, double margin) {
  if (!(a > 0.0 && a < kPi)) throw ConfigError("kernel parameter a must lie in (0, pi)");
  if (d != 1 && d != 2) throw ConfigError("spatial dimension must be 1 or 2");
  KernelSpec s;
  s.a = a;
  s.d = d;
  s.mu = d / (2.0 * a);
  s.c0 = kPi * kPi / a * (1.0 - margin);
  return s;
}

double khat(const KernelSpec& spec, double xi_sq) { return std::exp(-kPi * kPi * xi_sq / spec.a); }

double khat(const KernelSpec& spec, std::span<const double> xi) {
  double r2 = 0.0;
  for (double x : xi) r2 += x * x;
  return khat(spec, r2);
}

std::vector<double> h_multiplier(const KernelSpec& spec, std::span<const double> xi) {
  double r2 = 0.0;
  for (double x : xi) r2 += x * x;
  std::vector<double> h(xi.size(), 0.0);
  if (r2 == 0.0) return h;
  // 1 - khat = -expm1(-c r2), accurate for small r2.
  const double scale = std::sqrt(-std::expm1(-kPi * kPi * r2 / spec.a) / r2);
  for (std::size_t i = 0; i < xi.size(); ++i) h[i] = xi[i] * scale;
  return h;
}

TorusGrid::TorusGrid(int d, double length, int n) : d_(d), length_(length), n_(n) {
  if (d != 1 && d != 2) throw ConfigError("torus dimension must be 1 or 2");
  if (!(length > 0.0)) throw ConfigError("torus length must be positive");
  if (n < 2 || (n & (n - 1)) != 0) throw ConfigError("torus node count must be a power of two");
  size_ = d == 1 ? n : n * n;
  cell_ = std::pow(length / n, d);
}

std::array<double, 2> TorusGrid::frequency(int idx) const {
  if (d_ == 1) return {wavenumber(idx) / length_, 0.0};
  return {wavenumber(idx / n_) / length_, wavenumber(idx % n_) / length_};
}

double TorusGrid::frequency_sq(int idx) const {
  const auto xi = frequency(idx);
  return xi[0] * xi[0] + xi[1] * xi[1];
}

std::array<double, 2> TorusGrid::position(int idx) const {
  const double h = spacing();
  if (d_ == 1) return {idx * h, 0.0};
  return {(idx / n_) * h, (idx % n_) * h};
}

int TorusGrid::shift(int idx, int axis, int step) const {
  if (d_ == 1) return ((idx + step) % n_ + n_) % n_;
  int i = idx / n_, j = idx % n_;
  if (axis == 0)
    i = ((i + step) % n_ + n_) % n_;
  else
    j = ((j + step) % n_ + n_) % n_;
  return i * n_ + j;
}

std::vector<Complex> fft_forward(const TorusGrid& grid, std::span<const Complex> in) {
  return run(grid, in, true);
}

std::vector<Complex> fft_backward(const TorusGrid& grid, std::span<const Complex> in) {
  return run(grid, in, false);
}

std::vector<Complex> fft_forward(const TorusGrid& grid, std::span<const double> in) {
  std::vector<Complex> c(in.begin(), in.end());
  return run(grid, c, true);
}

std::vector<double> mollifier_table(const TorusGrid& grid, const KernelSpec& spec, double eps) {
  check_eps(eps);
  std::vector<double> t(grid.size());
  for (int s = 0; s < grid.size(); ++s) t[s] = khat(spec, eps * grid.frequency_sq(s));
  return t;
}

std::vector<double> l_eps_table(const TorusGrid& grid, const KernelSpec& spec, double eps) {
  check_eps(eps);
  std::vector<double> t(grid.size());
  for (int s = 0; s < grid.size(); ++s)
    t[s] = -std::expm1(-kPi * kPi * eps * grid.frequency_sq(s) / spec.a) / eps;
  return t;
}

std::vector<double> apply_multiplier(const TorusGrid& grid, std::span<const double> table,
                                     std::span<const double> u) {
  auto uh = fft_forward(grid, u);
  for (int s = 0; s < grid.size(); ++s) uh[s] *= table[s];
  auto back = fft_backward(grid, uh);
  std::vector<double> out(grid.size());
  for (int s = 0; s < grid.size(); ++s) out[s] = back[s].real();
  return out;
}

double max_trace(const QTensorField& Q) {
  double m = 0.0;
  for (const auto& q : Q.q) m = std::max(m, std::abs(q.trace()));
  return m;
}

bool entries_bounded(const QTensorField& Q, double slack) {
  for (const auto& q : Q.q)
    if (q.cwiseAbs().maxCoeff() > 2.0 / 3.0 + slack) return false;
  return true;
}

std::vector<double> convolve_keps(const TorusGrid& grid, const KernelSpec& spec,
                                  std::span<const double> u, double eps) {
  return apply_multiplier(grid, mollifier_table(grid, spec, eps), u);
}

QTensorField convolve_keps(const QTensorField& Q, const KernelSpec& spec, double eps) {
  return apply_table(Q, mollifier_table(Q.grid, spec, eps));
}

std::vector<double> apply_L_eps(const TorusGrid& grid, const KernelSpec& spec,
                                std::span<const double> u, double eps) {
  return apply_multiplier(grid, l_eps_table(grid, spec, eps), u);
}

QTensorField apply_L_eps(const QTensorField& Q, const KernelSpec& spec, double eps) {
  return apply_table(Q, l_eps_table(Q.grid, spec, eps));
}

std::vector<std::vector<Complex>> apply_T_eps(const TorusGrid& grid, const KernelSpec& spec,
                                              std::span<const double> u, double eps) {
  check_eps(eps);
  const auto uh = fft_forward(grid, u);
  const double root = std::sqrt(eps);
  std::vector<std::vector<Complex>> out(grid.dim());
  std::vector<std::vector<Complex>> spectra(grid.dim(), std::vector<Complex>(grid.size()));
  for (int s = 0; s < grid.size(); ++s) {
    const auto xi = grid.frequency(s);
    const double scaled[2] = {root * xi[0], root * xi[1]};
    const auto h = h_multiplier(spec, std::span<const double>(scaled, grid.dim()));
    for (int k = 0; k < grid.dim(); ++k) spectra[k][s] = uh[s] * (h[k] / root);
  }
  for (int k = 0; k < grid.dim(); ++k) out[k] = fft_backward(grid, spectra[k]);
  return out;
}

double doubled_energy_form(const QTensorField& Q, const KernelSpec& spec, double eps, double alpha) {
  const auto LQ = apply_L_eps(Q, spec, eps);
  double sum = 0.0;
  for (int s = 0; s < Q.grid.size(); ++s) sum += (Q.q[s].array() * LQ.q[s].array()).sum();
  return 0.5 * alpha * eps * sum * Q.grid.cell_volume();
}

double certify_c0(const TorusGrid& grid, const KernelSpec& spec, double eps) {
  check_eps(eps);
  double c = kPi * kPi / spec.a;
  for (int s = 0; s < grid.size(); ++s) {
    const double r2 = eps * grid.frequency_sq(s);
    if (r2 == 0.0) continue;
    const double k = khat(spec, r2);
    c = std::min(c, -std::expm1(-kPi * kPi * r2 / spec.a) / (r2 * k * k));
  }
  return c;
}

}  // namespace doilab
