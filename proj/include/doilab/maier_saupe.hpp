#pragma once

#include <memory>
#include <span>
#include <vector>

#include "doilab/sphere.hpp"

namespace doilab {

// Order parameter of the density exp(eta x^2) on [-1, 1]:
// s2(eta) = int (3x^2 - 1) e^{eta x^2} / (2 int e^{eta x^2}).
double s2(double eta);
double s2_derivative(double eta);

// Z(eta) = integral over the sphere of exp(eta (m.nu)^2); independent of nu.
double partition_function(double eta);

// All solutions of eta = alpha s2(eta) on the scan window [-20, 40], sorted.
// Zero is always included; tangential (double) roots are reported once.
std::vector<double> solve_eta(double alpha);

// Smallest intensity for which a nonzero solution exists:
// min over eta >= 0 of int e^{eta x^2} / int x^2 (1 - x^2) e^{eta x^2}.
double alpha_star();
// Location of the minimum above.
double eta_star();

struct EquilibriumParams {
  double alpha = 0.0;
  double eta = 0.0;  // largest root of eta = alpha s2(eta)
  double S2 = 0.0;   // s2(eta)
  double Z = 0.0;    // partition_function(eta)
  double E0 = 0.0;   // bulk energy of the equilibrium density
};

EquilibriumParams equilibrium_params(double alpha);

// h(m) = exp(eta (m.nu)^2) / Z sampled at the grid nodes.
std::vector<double> equilibrium_density(const Vec3& nu, double eta, const SphereGrid& g);

// E0[f] = int f log f + alpha/3 - alpha/2 |Q[f]|^2. Throws DomainError for f <= 0.
double bulk_energy(const SphereGrid& g, std::span<const double> f, double alpha);
double bulk_energy_from(double entropy, const QTensor& Q, double alpha);

// U0[f](m) = alpha int |m ^ m'|^2 f(m') dm' = alpha (mass - m.(int m'm' f) m).
std::vector<double> u0_potential(const SphereGrid& g, std::span<const double> f, double alpha);

// Potential alpha (2/3 - m.A m) at the grid nodes for a given tensor A.
std::vector<double> quadratic_potential(const SphereGrid& g, const QTensor& A, double alpha);

// Bingham closure: the traceless B with Q[exp(B:mm)/Z_B] = Q.
struct BinghamResult {
  QTensor B;
  QTensor Q;        // second moment reached
  S4Tensor fourth;  // fourth moment of the Bingham density
  int iterations = 0;
};

class BinghamSolver {
 public:
  explicit BinghamSolver(int quadrature_lmax = 48, double tol = 1e-12, int max_iter = 50);

  // Newton iteration on the five-dimensional traceless space starting at guess
  // (zero by default). Throws InfeasibleMoment if Q is outside the open feasible
  // set and ConvergenceError if the iteration stalls.
  BinghamResult solve(const QTensor& Q, const QTensor& guess = QTensor::Zero()) const;

  const SphereGrid& grid() const noexcept { return *grid_; }

 private:
  std::shared_ptr<const SphereGrid> grid_;
  double tol_;
  int max_iter_;
};

QTensor bingham_map(const QTensor& Q);

// True when the eigenvalues of Q lie strictly inside (-1/3, 2/3) with the given margin.
bool is_feasible_moment(const QTensor& Q, double margin = 0.0);

// Orthonormal basis (Frobenius) of the symmetric traceless 3x3 matrices.
const std::array<Mat3, 5>& traceless_basis();

}  // namespace doilab
