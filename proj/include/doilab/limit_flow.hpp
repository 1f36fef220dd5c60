#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "doilab/kernel_ops.hpp"
#include "doilab/maier_saupe.hpp"
#include "doilab/sphere.hpp"

namespace doilab {

// Mean-field potential of the uniaxial equilibrium with director e3 as a
// function of the polar angle: u0 = alpha (2/3 + S2/3 - S2 cos^2 t).
struct U0Profile {
  double alpha = 0.0;
  double S2 = 0.0;

  double value(double theta) const;
  double derivative(double theta) const;  // 2 alpha S2 cos t sin t
};

U0Profile u0_profile(const EquilibriumParams& params);

// Solution of
//   (1/sin t) (sin t g')' - g / sin^2 t - u0' g' = -u0'
// with g = 0 at both poles, expanded in order-one associated Legendre
// functions of cos t (each vanishes at the poles).
class G0Profile {
 public:
  G0Profile(U0Profile u0, std::vector<double> coeffs);

  int modes() const noexcept { return static_cast<int>(coeffs_.size()); }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  const U0Profile& u0() const noexcept { return u0_; }

  double value(double theta) const;
  double derivative(double theta) const;
  double second_derivative(double theta) const;
  // Pointwise residual of the ODE from the three derivatives above.
  double residual(double theta) const;

 private:
  // g, g', g'' at theta.
  std::array<double, 3> evaluate(double theta) const;

  U0Profile u0_;
  std::vector<double> coeffs_;  // coefficient of the normalized basis function of degree l at l - 1
};

// Galerkin solve with `modes` basis functions. Throws NumericalError if the
// linear solve fails.
G0Profile solve_g0(const EquilibriumParams& params, int modes = 256);

// gamma = -pi int_0^pi (d f0 / dt) g0 sin t dt, where f0 = exp(eta cos^2 t) / Z.
// The sign makes gamma the positive constant of the bilinear form
// int (u.R f0) A^{-1} (v.R f0) dm = gamma (u.v - (u.n)(v.n)).
// Throws NumericalError when the result is not positive.
double gamma_constant(const EquilibriumParams& params, const G0Profile& g0);
double gamma_constant(const EquilibriumParams& params);

struct LimitCoefficients {
  double alpha = 0.0;
  double eta = 0.0;
  double S2 = 0.0;
  double Z = 0.0;
  double E0 = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double Lambda = 0.0;  // 2 alpha mu S2^2 / (gamma d)
};

LimitCoefficients lambda_coefficient(const EquilibriumParams& params, const KernelSpec& spec);
// Same, reusing a computed gamma.
LimitCoefficients lambda_coefficient(const EquilibriumParams& params, const KernelSpec& spec, double gamma);

// Operators linearized at the uniaxial equilibrium f0 with director n, in a
// real harmonic basis of degree <= L:
//   A f0 acts on potentials:  A phi = -R.(f0 R phi),  a_ij = int f0 R Y_i . R Y_j.
//   H f0 acts on densities g = f0 sum c_j Y_j:  H g = g / f0 + U0[g], which is
//   again band limited. h_op maps c to the harmonic coefficients of H g.
//   h_form_ij = <f0 Y_i, H f0 Y_j> and gram_ij = <f0 Y_i, f0 Y_j>.
struct LinearizedOperators {
  int L = 0;
  Vec3 director;
  Eigen::MatrixXd a_form;
  Eigen::MatrixXd h_op;
  Eigen::MatrixXd h_form;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd f0_mass;  // int f0 Y_i Y_j

  // Weak form of G g = -A H g tested against Y_i, for g = f0 sum c_j Y_j.
  Eigen::VectorXd apply_g(const Eigen::VectorXd& c) const;
};

LinearizedOperators assemble_linearized(const EquilibriumParams& params, const Vec3& director, int L = 12);

struct KernelAnalysis {
  int kernel_dim = 0;
  Eigen::VectorXd eigenvalues;     // generalized, h_form c = lambda gram c, ascending
  Eigen::MatrixXd kernel_basis;    // gram-orthonormal columns
  double spectral_gap = 0.0;       // smallest eigenvalue above the kernel
  double largest = 0.0;
};

// Kernel detected as eigenvalues below threshold * largest in magnitude.
KernelAnalysis analyze_h_kernel(const LinearizedOperators& ops, double threshold = 1e-8);

// Largest principal angle between span(basis) and span(reference) in the
// inner product given by gram.
double subspace_angle(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& reference, const Eigen::MatrixXd& gram);

// Weighted-basis coefficients of f0 * (m . a)(m . b) symmetrized, used for the
// reference kernel span{m1 m3 f0, m2 m3 f0}.
Eigen::VectorXd weighted_quadratic(int L, const Mat3& B);

// int (u.R f0) psi_v dm where A psi_v = v.R f0 is solved in the harmonic basis
// of degree <= L on the zero-mean subspace.
double bilinear_form(const EquilibriumParams& params, const Vec3& director, const Vec3& u, const Vec3& v, int L = 16);
// All nine pairs of coordinate vectors at once.
Mat3 bilinear_matrix(const EquilibriumParams& params, const Vec3& director, int L = 16);

struct DirectorField {
  TorusGrid torus;
  std::vector<Vec3> n;
  double t = 0.0;

  explicit DirectorField(const TorusGrid& g) : torus(g), n(g.size(), Vec3::UnitZ()) {}
  // Largest deviation of |n| from one.
  double unit_defect() const;
};

// Explicit projection step: n + dt Lambda (Lap n - (n . Lap n) n), then
// normalized per site. The Laplacian is the standard 2d + 1 point stencil.
// Throws SingularityError if a site collapses to the zero vector and
// ConfigError for dt <= 0.
void hmhf_step(DirectorField& f, double dt, double Lambda);

// Largest dt for which the explicit step is stable: h^2 / (2 d Lambda).
double hmhf_stable_dt(const TorusGrid& g, double Lambda);

// sum over sites and axes of |forward difference of n|^2 h^d.
double dirichlet_energy(const DirectorField& f);

// Weak form of the director equation along a stored trajectory at uniform
// time step:
//   left  = int int (d_t n ^ n) . Theta phi dx dt
//   right = Lambda int int phi d_j Theta . (n ^ d_j n) dx dt
// with forward differences in space and time. The time derivative on
// [t_k, t_k+1] is paired with phi at the midpoint; the right side uses the
// trapezoidal rule over the samples.
struct WeakResidual {
  double left = 0.0;
  double right = 0.0;
  double residual = 0.0;
};

using TestField = std::function<Vec3(const std::array<double, 2>&)>;
using TestProfile = std::function<double(double)>;

WeakResidual weak_residual(std::span<const DirectorField> trajectory, const TestField& theta,
                           const TestProfile& phi, double Lambda);

// "DOQS1" container with tag byte 'n': magic, tag, int32 d, n, float64 t,
// then three float64 per site.
void write_director_snapshot(const std::filesystem::path& path, const DirectorField& f);
DirectorField read_director_snapshot(const std::filesystem::path& path, double length);

// alpha,eta,S2,Z,E0,gamma,mu,Lambda with 17 significant digits.
void write_coefficients_csv(const std::filesystem::path& path, std::span<const LimitCoefficients> rows);

}  // namespace doilab
