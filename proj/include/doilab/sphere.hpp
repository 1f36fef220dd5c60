#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace doilab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Symmetric traceless 3x3 tensor. Stored as a full matrix for arithmetic.
using QTensor = Mat3;

// Number of real harmonic coefficients of degree <= L.
constexpr int num_coeffs(int L) { return (L + 1) * (L + 1); }

// Position of the real harmonic (l, m), -l <= m <= l. Negative m are the sine
// harmonics.
constexpr int harmonic_index(int l, int m) { return l * l + l + m; }

// Gauss-Legendre nodes on [-1, 1] in descending order and their weights.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Degree of the harmonic stored at position idx.
int harmonic_degree(int idx);

// Fully symmetric rank-4 tensor on R^3, stored by the exponents (p, q, r)
// of m1^p m2^q m3^r with p + q + r = 4.
class S4Tensor {
 public:
  S4Tensor() { data_.fill(0.0); }

  double operator()(int i, int j, int k, int l) const { return data_[slot(i, j, k, l)]; }
  double& at(int i, int j, int k, int l) { return data_[slot(i, j, k, l)]; }
  double& component(int p, int q) { return data_[exponent_slot(p, q)]; }
  double component(int p, int q) const { return data_[exponent_slot(p, q)]; }

  // (A : T)_{ij} = sum_kl T_{ijkl} A_{kl}
  Mat3 contract(const Mat3& A) const;
  // T_{ijkk}
  Mat3 trace_pair() const;

  // Exponent slot for p = power of m1, q = power of m2 (power of m3 is 4-p-q).
  static int exponent_slot(int p, int q);
  static constexpr int kSize = 15;

 private:
  static int slot(int i, int j, int k, int l);
  std::array<double, kSize> data_{};
};

// Gauss-Legendre in cos(theta) times a uniform azimuthal grid, together with
// the real spherical-harmonic transform up to degree lmax.
//
// Real harmonics: Y_l0 = N_l0 P_l(cos t), Y_lm = sqrt(2) N_lm P_l^m cos(m p),
// Y_l,-m = sqrt(2) N_lm P_l^m sin(m p), orthonormal on the unit sphere, with
// associated Legendre functions taken without the Condon-Shortley phase.
class SphereGrid {
 public:
  explicit SphereGrid(int lmax);

  int lmax() const noexcept { return lmax_; }
  int ntheta() const noexcept { return ntheta_; }
  int nphi() const noexcept { return nphi_; }
  int size() const noexcept { return ntheta_ * nphi_; }

  // Node index = ring * nphi + k.
  const std::vector<double>& cos_theta() const noexcept { return x_; }
  const std::vector<double>& theta() const noexcept { return theta_; }
  const std::vector<double>& theta_weights() const noexcept { return wx_; }
  const std::vector<double>& weights() const noexcept { return w_; }
  const Vec3& node(int i) const { return nodes_[i]; }
  double phi(int k) const;

  double integrate(std::span<const double> values) const;

  // Harmonic coefficients of degree <= L (L <= lmax). Exact for fields whose
  // degree plus L does not exceed 2 lmax + 1.
  void analyze(const double* values, int L, double* coeffs) const;
  std::vector<double> analyze(std::span<const double> values, int L) const;

  void synthesize(const double* coeffs, int L, double* values) const;
  std::vector<double> synthesize(std::span<const double> coeffs, int L) const;

  // Normalized Legendre factor of Y_lm at ring j for m >= 0 (includes sqrt(2) for m > 0).
  double legendre(int ring, int l, int m) const { return plm_[ring * tri_ + tri_index(l, m)]; }

  // Values of every real harmonic of degree <= L at every node (size x num_coeffs(L)).
  Eigen::MatrixXd basis_matrix(int L) const;

 private:
  static int tri_index(int l, int m) { return l * (l + 1) / 2 + m; }

  int lmax_;
  int ntheta_;
  int nphi_;
  int tri_;
  std::vector<double> x_, theta_, wx_, w_;
  std::vector<Vec3> nodes_;
  std::vector<double> plm_;
  std::vector<double> cos_, sin_;  // [k * (lmax+1) + m]
};

// Values of every real harmonic of degree <= L at the unit vector m.
std::vector<double> real_harmonics(int L, const Vec3& m);

// Action of R = m ^ grad on real harmonic coefficients. R preserves the degree,
// so each component is block diagonal with one antisymmetric block per degree.
class RotationGenerators {
 public:
  explicit RotationGenerators(int L);
  int L() const noexcept { return L_; }

  // Block of component i (0..2) at degree l: out_a = sum_b block(a, b) in_b
  // over the 2l+1 harmonics of that degree.
  const Eigen::MatrixXd& block(int i, int l) const { return blocks_[i][l]; }

  // out = R_i applied to coefficients of degree <= L.
  void apply(int i, const double* in, double* out) const;
  void apply_add(int i, const double* in, double* out) const;

  // Shared instance for degree L (thread safe, lazily built).
  static const RotationGenerators& get(int L);

 private:
  int L_;
  std::array<std::vector<Eigen::MatrixXd>, 3> blocks_;
};

// Pointwise field operations on one grid. All of them transform to
// coefficients of degree <= grid.lmax() and back.
std::array<std::vector<double>, 3> rot_grad(const SphereGrid& g, std::span<const double> f);
std::vector<double> div_rot(const SphereGrid& g, const std::array<std::vector<double>, 3>& v);
std::vector<double> laplace_beltrami(const SphereGrid& g, std::span<const double> f);

// Q = integral of (m m - I/3) f.
QTensor second_moment(const SphereGrid& g, std::span<const double> f);
// Integral of m m m m f.
S4Tensor fourth_moment(const SphereGrid& g, std::span<const double> f);
// Integral of m m f (not traceless).
Mat3 raw_second_moment(const SphereGrid& g, std::span<const double> f);

// Isotropic fourth moment of the uniform probability density.
S4Tensor isotropic_fourth_moment();

// Degree-l Laplace-Beltrami eigenvalue -l(l+1).
inline double laplace_eigenvalue(int l) { return -static_cast<double>(l) * (l + 1); }

}  // namespace doilab
