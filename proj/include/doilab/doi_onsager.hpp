#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "doilab/kernel_ops.hpp"
#include "doilab/maier_saupe.hpp"
#include "doilab/sphere.hpp"

namespace doilab {

// Orientation density on torus x sphere. Each site holds the real harmonic
// coefficients of degree <= lmax, so the sphere part is band limited by
// construction and the l = 0 coefficient carries the mass.
struct DensityField {
  TorusGrid torus;
  int lmax = 8;
  std::vector<double> coeffs;  // site-major, num_coeffs(lmax) per site
  double t = 0.0;
  double eps = 1.0;

  DensityField(const TorusGrid& g, int L)
      : torus(g), lmax(L), coeffs(static_cast<std::size_t>(g.size()) * num_coeffs(L), 0.0) {}

  int stride() const { return num_coeffs(lmax); }
  std::span<double> site(int s) { return {coeffs.data() + static_cast<std::size_t>(s) * stride(), static_cast<std::size_t>(stride())}; }
  std::span<const double> site(int s) const {
    return {coeffs.data() + static_cast<std::size_t>(s) * stride(), static_cast<std::size_t>(stride())};
  }
};

struct EnergyReport {
  double t = 0.0;
  double bulk_excess = 0.0;    // sum_x (E0[f(x)] - E0) h^d
  double doubled_term = 0.0;   // (alpha/4) double sum of |Q(x) - Q(y)|^2 k_eps
  double modulated_total = 0.0;
  double dissipation = 0.0;    // (1/eps^2) sum_x int f |R mu|^2 h^d
  double cumulative_dissipation = 0.0;
};

enum class DriftScheme {
  // Drift R.(f R mu) with mu = P_L(log f) + U; the discrete energy identity
  // holds exactly in semi-discrete time.
  EnergyConsistent,
  // Drift R.(f R U) with the Laplacian taken on the band-limited density.
  Direct,
};

struct SolverOptions {
  int lmax = 8;
  // The sphere quadrature grid resolves degree quadrature_factor * lmax.
  int quadrature_factor = 4;
  double cfl = 0.25;
  int max_halvings = 20;
  DriftScheme scheme = DriftScheme::EnergyConsistent;
};

class KineticSolver {
 public:
  KineticSolver(const TorusGrid& torus, const KernelSpec& kernel, double alpha, SolverOptions opt = {});

  const TorusGrid& torus() const noexcept { return torus_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const SphereGrid& sphere() const noexcept { return *sphere_; }
  const SolverOptions& options() const noexcept { return opt_; }
  double alpha() const noexcept { return alpha_; }
  int lmax() const noexcept { return opt_.lmax; }

  // Band-limited stationary state of the homogeneous problem with director e3
  // (zonal coefficients only) and its discrete bulk energy, the infimum used
  // by the energy report.
  const std::vector<double>& equilibrium_profile() const;
  double equilibrium_energy() const;
  // Order parameter of the discrete equilibrium.
  double equilibrium_order() const;

  // The discrete equilibrium rotated to director n at every site.
  DensityField aligned_field(std::span<const Vec3> directors, double eps) const;
  // Coefficients of the discrete equilibrium rotated to director n.
  std::vector<double> aligned_coeffs(const Vec3& n) const;

  // Project nodal values on the quadrature grid to a band-limited density.
  void set_site_values(DensityField& f, int site, std::span<const double> values) const;
  std::vector<double> site_values(const DensityField& f, int site) const;

  QTensorField q_field(const DensityField& f) const;

  // U_eps = alpha (2/3 - m.(Q * k_eps) m), per site on the quadrature grid.
  std::vector<std::vector<double>> mean_field_potential(const DensityField& f) const;
  // mu_eps = log f + U_eps per site on the quadrature grid. Throws DomainError
  // when f is not positive at a node.
  std::vector<std::vector<double>> chemical_potential(const DensityField& f) const;

  // Time derivative of the coefficients under the selected scheme, with the
  // Laplacian included.
  std::vector<double> rhs(const DensityField& f) const;

  // dt = cfl eps / (1 + 2 alpha max|Q * k_eps| lmax).
  double stable_dt(const DensityField& f) const;

  // Advance by dt. On a positivity failure the step is redone as two half
  // steps, recursively, up to max_halvings levels; StabilityError beyond.
  // Returns the number of substeps taken and adds the dissipation integral
  // over the step (left-endpoint rule per substep) to *dissipated.
  int step(DensityField& f, double dt, double* dissipated = nullptr) const;

  EnergyReport energy_report(const DensityField& f) const;

  // -6 Q + 2 alpha M_f(Q * k_eps), the second moment of eps times the kinetic
  // right-hand side, with M_f(A) = 2/3 A + Q A + A Q - 2 A : int mmmm f.
  QTensorField q_moment_rhs(const DensityField& f) const;

  // Explicit Euler step of the closed moment system, with the fourth moment
  // taken from the Bingham density of each site. Throws InfeasibleMoment with
  // the site index when a site leaves the feasible set.
  QTensorField q_closure_step(const QTensorField& Q, double dt, double eps) const;
  static QTensorField closure_rhs(const QTensorField& Q, const QTensorField& Qk, double alpha,
                                  const BinghamSolver& solver);

  // Minimum nodal value over all sites.
  double min_value(const DensityField& f) const;
  // Largest deviation of the per-site mass from one.
  double mass_drift(const DensityField& f) const;

 private:
  void build_equilibrium();
  // One forward step without positivity handling. Returns false when the
  // result has a nonpositive node.
  bool try_step(DensityField& f, double dt, double* dissipation) const;
  QTensorField convolved_q(const DensityField& f) const;
  void site_drift(std::span<const double> a, const QTensor& Qk, double* drift, double* dissipation) const;

  TorusGrid torus_;
  KernelSpec kernel_;
  double alpha_;
  SolverOptions opt_;
  std::shared_ptr<const SphereGrid> sphere_;
  std::vector<double> eq_coeffs_;
  double eq_energy_ = 0.0;
  std::shared_ptr<const BinghamSolver> bingham_;
};

// Second moment from the l <= 2 coefficients of a density.
QTensor q_from_coeffs(std::span<const double> a);

// "DOQS1" container: magic, int32 d, n, lmax, nphi, float64 t, eps, then the
// nodal values of each site on the (lmax + 1) x (2 lmax + 2) sphere grid.
void write_snapshot(const std::filesystem::path& path, const DensityField& f);
DensityField read_snapshot(const std::filesystem::path& path, double length);

// Appends energy reports as CSV rows, writing the header on open.
class EnergyCsv {
 public:
  explicit EnergyCsv(const std::filesystem::path& path);
  void append(const EnergyReport& r);

 private:
  std::ofstream out_;
};

}  // namespace doilab
