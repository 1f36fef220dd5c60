#include "doilab/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "doilab/errors.hpp"

namespace doilab {

namespace {

constexpr double kPi = std::numbers::pi;

// Orthonormal associated Legendre values at x for all 0 <= m <= l <= lmax,
// stored at l(l+1)/2 + m, with the factor sqrt(2) for m > 0 included.
void fill_legendre(double x, int lmax, double* p) {
  auto tri = [](int l, int m) { return l * (l + 1) / 2 + m; };
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    p[tri(m, m)] = pmm;
    if (m + 1 <= lmax) p[tri(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
      const double b =
          std::sqrt((static_cast<double>(l - 1) * (l - 1) - m * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
      p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
    }
  }
  for (int l = 1; l <= lmax; ++l)
    for (int m = 1; m <= l; ++m) p[tri(l, m)] *= std::sqrt(2.0);
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

std::vector<double> real_harmonics(int L, const Vec3& m) {
  std::vector<double> p((L + 1) * (L + 2) / 2);
  fill_legendre(std::clamp(m.z(), -1.0, 1.0), L, p.data());
  const double phi = std::atan2(m.y(), m.x());
  std::vector<double> y(num_coeffs(L));
  for (int l = 0; l <= L; ++l) {
    const int base = l * l + l;
    const double* pl = &p[l * (l + 1) / 2];
    y[base] = pl[0];
    for (int k = 1; k <= l; ++k) {
      y[base + k] = pl[k] * std::cos(k * phi);
      y[base - k] = pl[k] * std::sin(k * phi);
    }
  }
  return y;
}

int harmonic_degree(int idx) {
  int l = static_cast<int>(std::sqrt(static_cast<double>(idx)));
  while (l * l > idx) --l;
  while ((l + 1) * (l + 1) <= idx) ++l;
  return l;
}

// ---------------------------------------------------------------- S4Tensor

int S4Tensor::exponent_slot(int p, int q) {
  // Order by p descending, then q descending.
  static const std::array<std::array<int, 5>, 5> table = [] {
    std::array<std::array<int, 5>, 5> t{};
    int s = 0;
    for (int pp = 4; pp >= 0; --pp)
      for (int qq = 4 - pp; qq >= 0; --qq) t[pp][qq] = s++;
    return t;
  }();
  return table[p][q];
}

int S4Tensor::slot(int i, int j, int k, int l) {
  int c[3] = {0, 0, 0};
  ++c[i];
  ++c[j];
  ++c[k];
  ++c[l];
  return exponent_slot(c[0], c[1]);
}

Mat3 S4Tensor::contract(const Mat3& A) const {
  Mat3 out = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s += (*this)(i, j, k, l) * A(k, l);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

Mat3 S4Tensor::trace_pair() const {
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = (*this)(i, j, 0, 0) + (*this)(i, j, 1, 1) + (*this)(i, j, 2, 2);
  return out;
}

S4Tensor isotropic_fourth_moment() {
  S4Tensor t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          t.at(i, j, k, l) = ((i == j) * (k == l) + (i == k) * (j == l) + (i == l) * (j == k)) / 15.0;
  return t;
}

// -------------------------------------------------------------- SphereGrid

SphereGrid::SphereGrid(int lmax) : lmax_(lmax) {
  if (lmax < 2) throw ConfigError("sphere grid needs lmax >= 2");
  ntheta_ = lmax + 1;
  nphi_ = 2 * lmax + 2;
  tri_ = (lmax + 1) * (lmax + 2) / 2;
  gauss_legendre(ntheta_, x_, wx_);
  theta_.resize(ntheta_);
  for (int j = 0; j < ntheta_; ++j) theta_[j] = std::acos(x_[j]);

  const double dphi = 2.0 * kPi / nphi_;
  cos_.resize(static_cast<std::size_t>(nphi_) * (lmax + 1));
  sin_.resize(cos_.size());
  for (int k = 0; k < nphi_; ++k)
    for (int m = 0; m <= lmax; ++m) {
      cos_[k * (lmax + 1) + m] = std::cos(m * k * dphi);
      sin_[k * (lmax + 1) + m] = std::sin(m * k * dphi);
    }

  w_.resize(size());
  nodes_.resize(size());
  for (int j = 0; j < ntheta_; ++j) {
    const double s = std::sqrt(std::max(0.0, 1.0 - x_[j] * x_[j]));
    for (int k = 0; k < nphi_; ++k) {
      const int i = j * nphi_ + k;
      w_[i] = wx_[j] * dphi;
      nodes_[i] = Vec3(s * std::cos(k * dphi), s * std::sin(k * dphi), x_[j]);
    }
  }

  plm_.assign(static_cast<std::size_t>(ntheta_) * tri_, 0.0);
  for (int j = 0; j < ntheta_; ++j) fill_legendre(x_[j], lmax, &plm_[j * tri_]);
}

double SphereGrid::phi(int k) const { return 2.0 * kPi * k / nphi_; }

double SphereGrid::integrate(std::span<const double> values) const {
  if (static_cast<int>(values.size()) != size()) throw ConfigError("field size does not match sphere grid");
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += w_[i] * values[i];
  return s;
}

void SphereGrid::analyze(const double* values, int L, double* coeffs) const {
  const int nc = num_coeffs(L);
  for (int a = 0; a < nc; ++a) coeffs[a] = 0.0;
  const double dphi = 2.0 * kPi / nphi_;
  std::vector<double> c(L + 1), s(L + 1);
  for (int j = 0; j < ntheta_; ++j) {
    const double* row = values + static_cast<std::size_t>(j) * nphi_;
    for (int m = 0; m <= L; ++m) c[m] = s[m] = 0.0;
    for (int k = 0; k < nphi_; ++k) {
      const double v = row[k];
      const double* ck = &cos_[k * (lmax_ + 1)];
      const double* sk = &sin_[k * (lmax_ + 1)];
      for (int m = 0; m <= L; ++m) {
        c[m] += v * ck[m];
        s[m] += v * sk[m];
      }
    }
    const double wj = wx_[j] * dphi;
    const double* p = &plm_[j * tri_];
    for (int l = 0; l <= L; ++l) {
      const int base = l * l + l;
      coeffs[base] += wj * p[tri_index(l, 0)] * c[0];
      for (int m = 1; m <= l; ++m) {
        const double pw = wj * p[tri_index(l, m)];
        coeffs[base + m] += pw * c[m];
        coeffs[base - m] += pw * s[m];
      }
    }
  }
}

std::vector<double> SphereGrid::analyze(std::span<const double> values, int L) const {
  if (static_cast<int>(values.size()) != size()) throw ConfigError("field size does not match sphere grid");
  if (L > lmax_) throw ConfigError("analysis degree exceeds grid band limit");
  std::vector<double> out(num_coeffs(L));
  analyze(values.data(), L, out.data());
  return out;
}

void SphereGrid::synthesize(const double* coeffs, int L, double* values) const {
  std::vector<double> c(L + 1), s(L + 1);
  for (int j = 0; j < ntheta_; ++j) {
    const double* p = &plm_[j * tri_];
    for (int m = 0; m <= L; ++m) c[m] = s[m] = 0.0;
    for (int l = 0; l <= L; ++l) {
      const int base = l * l + l;
      c[0] += coeffs[base] * p[tri_index(l, 0)];
      for (int m = 1; m <= l; ++m) {
        const double pl = p[tri_index(l, m)];
        c[m] += coeffs[base + m] * pl;
        s[m] += coeffs[base - m] * pl;
      }
    }
    double* row = values + static_cast<std::size_t>(j) * nphi_;
    for (int k = 0; k < nphi_; ++k) {
      const double* ck = &cos_[k * (lmax_ + 1)];
      const double* sk = &sin_[k * (lmax_ + 1)];
      double v = c[0];
      for (int m = 1; m <= L; ++m) v += c[m] * ck[m] + s[m] * sk[m];
      row[k] = v;
    }
  }
}

std::vector<double> SphereGrid::synthesize(std::span<const double> coeffs, int L) const {
  if (static_cast<int>(coeffs.size()) != num_coeffs(L)) throw ConfigError("coefficient count mismatch");
  if (L > lmax_) throw ConfigError("synthesis degree exceeds grid band limit");
  std::vector<double> out(size());
  synthesize(coeffs.data(), L, out.data());
  return out;
}

Eigen::MatrixXd SphereGrid::basis_matrix(int L) const {
  if (L > lmax_) throw ConfigError("basis degree exceeds grid band limit");
  Eigen::MatrixXd Y(size(), num_coeffs(L));
  for (int j = 0; j < ntheta_; ++j) {
    const double* p = &plm_[j * tri_];
    for (int k = 0; k < nphi_; ++k) {
      const int i = j * nphi_ + k;
      const double* ck = &cos_[k * (lmax_ + 1)];
      const double* sk = &sin_[k * (lmax_ + 1)];
      for (int l = 0; l <= L; ++l) {
        const int base = l * l + l;
        Y(i, base) = p[tri_index(l, 0)];
        for (int m = 1; m <= l; ++m) {
          Y(i, base + m) = p[tri_index(l, m)] * ck[m];
          Y(i, base - m) = p[tri_index(l, m)] * sk[m];
        }
      }
    }
  }
  return Y;
}

// ------------------------------------------------------ RotationGenerators

RotationGenerators::RotationGenerators(int L) : L_(L) {
  using cd = std::complex<double>;
  const cd I(0.0, 1.0);
  for (auto& b : blocks_) b.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    const int n = 2 * l + 1;
    // Complex harmonics Y_l^m (Condon-Shortley), index m + l.
    Eigen::MatrixXcd Lp = Eigen::MatrixXcd::Zero(n, n), Lm = Lp, Lz = Lp;
    for (int m = -l; m <= l; ++m) {
      Lz(m + l, m + l) = static_cast<double>(m);
      if (m < l) Lp(m + 1 + l, m + l) = std::sqrt(static_cast<double>(l - m) * (l + m + 1));
      if (m > -l) Lm(m - 1 + l, m + l) = std::sqrt(static_cast<double>(l + m) * (l - m + 1));
    }
    // R = i L with L the angular momentum operator.
    const Eigen::MatrixXcd C[3] = {I * (Lp + Lm) * 0.5, (Lp - Lm) * 0.5, I * Lz};
    // Real harmonic mu as a combination of complex ones: Yr_mu = sum_m U(mu, m) Y^m.
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(n, n);
    const double r2 = 1.0 / std::sqrt(2.0);
    for (int mu = -l; mu <= l; ++mu) {
      const double sgn = (std::abs(mu) % 2 == 0) ? 1.0 : -1.0;
      if (mu == 0) {
        U(l, l) = 1.0;
      } else if (mu > 0) {
        U(mu + l, -mu + l) = r2;
        U(mu + l, mu + l) = sgn * r2;
      } else {
        U(mu + l, mu + l) = I * r2;
        U(mu + l, -mu + l) = -sgn * I * r2;
      }
    }
    for (int i = 0; i < 3; ++i) {
      const Eigen::MatrixXcd Rr = U.conjugate() * C[i] * U.transpose();
      blocks_[i][l] = Rr.real();
    }
  }
}

void RotationGenerators::apply(int i, const double* in, double* out) const {
  for (int a = 0; a < num_coeffs(L_); ++a) out[a] = 0.0;
  apply_add(i, in, out);
}

void RotationGenerators::apply_add(int i, const double* in, double* out) const {
  for (int l = 1; l <= L_; ++l) {
    const int n = 2 * l + 1;
    const int off = l * l;
    Eigen::Map<const Eigen::VectorXd> x(in + off, n);
    Eigen::Map<Eigen::VectorXd> y(out + off, n);
    y.noalias() += blocks_[i][l] * x;
  }
}

const RotationGenerators& RotationGenerators::get(int L) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<RotationGenerators>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[L];
  if (!slot) slot = std::make_unique<RotationGenerators>(L);
  return *slot;
}

// -------------------------------------------------------- field operators

std::array<std::vector<double>, 3> rot_grad(const SphereGrid& g, std::span<const double> f) {
  const int L = g.lmax();
  const auto a = g.analyze(f, L);
  const auto& R = RotationGenerators::get(L);
  std::array<std::vector<double>, 3> out;
  std::vector<double> b(a.size());
  for (int i = 0; i < 3; ++i) {
    R.apply(i, a.data(), b.data());
    out[i] = g.synthesize(b, L);
  }
  return out;
}

std::vector<double> div_rot(const SphereGrid& g, const std::array<std::vector<double>, 3>& v) {
  const int L = g.lmax();
  const auto& R = RotationGenerators::get(L);
  std::vector<double> acc(num_coeffs(L), 0.0);
  for (int i = 0; i < 3; ++i) {
    const auto a = g.analyze(v[i], L);
    R.apply_add(i, a.data(), acc.data());
  }
  return g.synthesize(acc, L);
}

std::vector<double> laplace_beltrami(const SphereGrid& g, std::span<const double> f) {
  const int L = g.lmax();
  auto a = g.analyze(f, L);
  for (int idx = 0; idx < num_coeffs(L); ++idx) a[idx] *= laplace_eigenvalue(harmonic_degree(idx));
  return g.synthesize(a, L);
}

Mat3 raw_second_moment(const SphereGrid& g, std::span<const double> f) {
  if (static_cast<int>(f.size()) != g.size()) throw ConfigError("field size does not match sphere grid");
  Mat3 M = Mat3::Zero();
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& m = g.node(i);
    const double wf = g.weights()[i] * f[i];
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) M(a, b) += wf * m[a] * m[b];
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < a; ++b) M(a, b) = M(b, a);
  return M;
}

QTensor second_moment(const SphereGrid& g, std::span<const double> f) {
  Mat3 M = raw_second_moment(g, f);
  // The trace of the raw moment equals the mass since |m| = 1.
  M -= (M.trace() / 3.0) * Mat3::Identity();
  return M;
}

S4Tensor fourth_moment(const SphereGrid& g, std::span<const double> f) {
  if (static_cast<int>(f.size()) != g.size()) throw ConfigError("field size does not match sphere grid");
  S4Tensor t;
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& m = g.node(i);
    const double wf = g.weights()[i] * f[i];
    double pw[3][5];
    for (int a = 0; a < 3; ++a) {
      pw[a][0] = 1.0;
      for (int e = 1; e < 5; ++e) pw[a][e] = pw[a][e - 1] * m[a];
    }
    for (int p = 0; p <= 4; ++p)
      for (int q = 0; q <= 4 - p; ++q) t.component(p, q) += wf * pw[0][p] * pw[1][q] * pw[2][4 - p - q];
  }
  return t;
}

}  // namespace doilab
