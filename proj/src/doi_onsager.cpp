#include "doilab/doi_onsager.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>

#include "doilab/errors.hpp"
#include "doilab/parallel.hpp"

namespace doilab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr char kMagic[5] = {'D', 'O', 'Q', 'S', '1'};

// Degree-2 coefficients of m_i m_j, indexed [i][j][m + 2].
const std::array<std::array<std::array<double, 5>, 3>, 3>& quadratic_coefficients() {
  static const auto table = [] {
    std::array<std::array<std::array<double, 5>, 3>, 3> t{};
    SphereGrid g(4);
    std::vector<double> v(g.size());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        for (int q = 0; q < g.size(); ++q) v[q] = g.node(q)[i] * g.node(q)[j];
        auto c = g.analyze(v, 2);
        for (int m = -2; m <= 2; ++m) t[i][j][m + 2] = c[harmonic_index(2, m)];
      }
    return t;
  }();
  return table;
}

Mat3 apply_moment_map(const QTensor& Q, const S4Tensor& fourth, const Mat3& A) {
  return 2.0 / 3.0 * A + Q * A + A * Q - 2.0 * fourth.contract(A);
}

double degree_factor(int idx) {
  const int l = harmonic_degree(idx);
  return static_cast<double>(l) * (l + 1);
}

}  // namespace

QTensor q_from_coeffs(std::span<const double> a) {
  const auto& t = quadratic_coefficients();
  QTensor Q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int m = -2; m <= 2; ++m) s += t[i][j][m + 2] * a[harmonic_index(2, m)];
      Q(i, j) = s;
    }
  return Q;
}

KineticSolver::KineticSolver(const TorusGrid& torus, const KernelSpec& kernel, double alpha, SolverOptions opt)
    : torus_(torus), kernel_(kernel), alpha_(alpha), opt_(opt) {
  if (opt_.lmax < 4) throw ConfigError("sphere band limit must be at least 4");
  if (opt_.quadrature_factor < 2) throw ConfigError("quadrature factor must be at least 2");
  if (!(opt_.cfl > 0.0)) throw ConfigError("cfl must be positive");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  sphere_ = std::make_shared<SphereGrid>(opt_.quadrature_factor * opt_.lmax);
  bingham_ = std::make_shared<BinghamSolver>();
  build_equilibrium();
}

void KineticSolver::build_equilibrium() {
  const int L = opt_.lmax;
  const auto& G = *sphere_;
  const int nc = num_coeffs(L);
  const auto params = equilibrium_params(alpha_);
  auto h = equilibrium_density(Vec3::UnitZ(), params.eta, G);
  std::vector<double> a = G.analyze(h, L);
  for (int i = 0; i < nc; ++i) {
    const int l = harmonic_degree(i);
    if (i != harmonic_index(l, 0)) a[i] = 0.0;
  }
  a[0] = 1.0 / std::sqrt(4.0 * kPi);

  // Newton on the zonal coefficients l >= 1 for P_L(log f) + U = const.
  std::vector<double> f(G.size()), lg(G.size()), coeff(nc);
  auto residual = [&](const std::vector<double>& c) {
    G.synthesize(c.data(), L, f.data());
    for (int q = 0; q < G.size(); ++q) {
      if (!(f[q] > 0.0)) throw DomainError("discrete equilibrium lost positivity");
      lg[q] = std::log(f[q]);
    }
    auto U = quadratic_potential(G, q_from_coeffs(c), alpha_);
    for (int q = 0; q < G.size(); ++q) lg[q] += U[q];
    G.analyze(lg.data(), L, coeff.data());
    Eigen::VectorXd r(L);
    for (int l = 1; l <= L; ++l) r[l - 1] = coeff[harmonic_index(l, 0)];
    return r;
  };
  Eigen::VectorXd r = residual(a);
  for (int it = 0; it < 50 && r.cwiseAbs().maxCoeff() > 1e-14; ++it) {
    Eigen::MatrixXd J(L, L);
    for (int k = 1; k <= L; ++k) {
      auto ap = a;
      const double h_step = 1e-7;
      ap[harmonic_index(k, 0)] += h_step;
      J.col(k - 1) = (residual(ap) - r) / h_step;
    }
    const Eigen::VectorXd delta = J.colPivHouseholderQr().solve(r);
    for (int k = 1; k <= L; ++k) a[harmonic_index(k, 0)] -= delta[k - 1];
    r = residual(a);
  }
  if (r.cwiseAbs().maxCoeff() > 1e-11) throw ConvergenceError("discrete equilibrium did not converge");
  eq_coeffs_ = a;

  G.synthesize(a.data(), L, f.data());
  double entropy = 0.0;
  for (int q = 0; q < G.size(); ++q) entropy += G.weights()[q] * f[q] * std::log(f[q]);
  eq_energy_ = bulk_energy_from(entropy, q_from_coeffs(a), alpha_);
}

const std::vector<double>& KineticSolver::equilibrium_profile() const { return eq_coeffs_; }
double KineticSolver::equilibrium_energy() const { return eq_energy_; }
double KineticSolver::equilibrium_order() const { return 1.5 * q_from_coeffs(eq_coeffs_)(2, 2); }

std::vector<double> KineticSolver::aligned_coeffs(const Vec3& n) const {
  if (std::abs(n.norm() - 1.0) > 1e-12) throw ConfigError("director must be a unit vector");
  const int L = opt_.lmax;
  const auto y = real_harmonics(L, n);
  std::vector<double> a(num_coeffs(L));
  for (int l = 0; l <= L; ++l) {
    const double scale = eq_coeffs_[harmonic_index(l, 0)] * std::sqrt(4.0 * kPi / (2 * l + 1));
    for (int m = -l; m <= l; ++m) a[harmonic_index(l, m)] = scale * y[harmonic_index(l, m)];
  }
  return a;
}

DensityField KineticSolver::aligned_field(std::span<const Vec3> directors, double eps) const {
  if (static_cast<int>(directors.size()) != torus_.size()) throw ConfigError("director count does not match torus");
  DensityField f(torus_, opt_.lmax);
  f.eps = eps;
  for (int s = 0; s < torus_.size(); ++s) {
    const auto a = aligned_coeffs(directors[s]);
    std::copy(a.begin(), a.end(), f.site(s).begin());
  }
  return f;
}

void KineticSolver::set_site_values(DensityField& f, int site, std::span<const double> values) const {
  sphere_->analyze(values.data(), opt_.lmax, f.site(site).data());
}

std::vector<double> KineticSolver::site_values(const DensityField& f, int site) const {
  std::vector<double> v(sphere_->size());
  sphere_->synthesize(f.site(site).data(), f.lmax, v.data());
  return v;
}

QTensorField KineticSolver::q_field(const DensityField& f) const {
  QTensorField Q(torus_);
  for (int s = 0; s < torus_.size(); ++s) Q.q[s] = q_from_coeffs(f.site(s));
  return Q;
}

QTensorField KineticSolver::convolved_q(const DensityField& f) const {
  return convolve_keps(q_field(f), kernel_, f.eps);
}

std::vector<std::vector<double>> KineticSolver::mean_field_potential(const DensityField& f) const {
  const auto Qk = convolved_q(f);
  std::vector<std::vector<double>> out(torus_.size());
  parallel_for(torus_.size(), [&](std::size_t s) { out[s] = quadratic_potential(*sphere_, Qk.q[s], alpha_); });
  return out;
}

std::vector<std::vector<double>> KineticSolver::chemical_potential(const DensityField& f) const {
  auto U = mean_field_potential(f);
  parallel_for(torus_.size(), [&](std::size_t s) {
    const auto v = site_values(f, static_cast<int>(s));
    for (std::size_t q = 0; q < v.size(); ++q) {
      if (!(v[q] > 0.0)) throw DomainError("density is not positive");
      U[s][q] += std::log(v[q]);
    }
  });
  return U;
}

// Drift of one site: drift = sum_i R_i P_L(f (R_i mu)_i), where mu is
// P_L(log f) + U for the energy-consistent scheme and U for the direct one;
// the Laplacian of the direct scheme is added by the caller. dissipation is
// sum_i int f (R_i mu_h)^2 with mu_h = P_L(log f) + U in either case.
void KineticSolver::site_drift(std::span<const double> a, const QTensor& Qk, double* drift,
                               double* dissipation) const {
  const auto& G = *sphere_;
  const int L = opt_.lmax;
  const int nc = num_coeffs(L);
  const auto& R = RotationGenerators::get(L);
  std::vector<double> f(G.size()), work(G.size()), mu(nc), U(nc), Ri(nc), prod(nc);
  G.synthesize(a.data(), L, f.data());
  for (int q = 0; q < G.size(); ++q) {
    if (!(f[q] > 0.0)) throw DomainError("density is not positive");
    work[q] = std::log(f[q]);
  }
  G.analyze(work.data(), L, mu.data());
  const auto Unodal = quadratic_potential(G, Qk, alpha_);
  G.analyze(Unodal.data(), L, U.data());
  for (int c = 0; c < nc; ++c) mu[c] += U[c];
  const std::vector<double>& transported = opt_.scheme == DriftScheme::EnergyConsistent ? mu : U;

  std::fill(drift, drift + nc, 0.0);
  double diss = 0.0;
  std::vector<double> grad(G.size());
  for (int i = 0; i < 3; ++i) {
    R.apply(i, transported.data(), Ri.data());
    G.synthesize(Ri.data(), L, work.data());
    if (dissipation) {
      if (&transported != &mu) {
        R.apply(i, mu.data(), prod.data());
        G.synthesize(prod.data(), L, grad.data());
      } else {
        grad = work;
      }
      for (int q = 0; q < G.size(); ++q) diss += G.weights()[q] * f[q] * grad[q] * grad[q];
    }
    for (int q = 0; q < G.size(); ++q) work[q] *= f[q];
    G.analyze(work.data(), L, prod.data());
    R.apply_add(i, prod.data(), drift);
  }
  if (dissipation) *dissipation = diss;
}

std::vector<double> KineticSolver::rhs(const DensityField& f) const {
  const auto Qk = convolved_q(f);
  const int nc = f.stride();
  std::vector<double> out(f.coeffs.size());
  parallel_for(torus_.size(), [&](std::size_t s) {
    double* d = out.data() + s * nc;
    site_drift(f.site(static_cast<int>(s)), Qk.q[s], d, nullptr);
    if (opt_.scheme == DriftScheme::Direct) {
      const auto a = f.site(static_cast<int>(s));
      for (int c = 0; c < nc; ++c) d[c] -= degree_factor(c) * a[c];
    }
    for (int c = 0; c < nc; ++c) d[c] /= f.eps;
  });
  return out;
}

double KineticSolver::stable_dt(const DensityField& f) const {
  const auto Qk = convolved_q(f);
  double qmax = 0.0;
  for (const auto& q : Qk.q) qmax = std::max(qmax, q.norm());
  return opt_.cfl * f.eps / (1.0 + 2.0 * alpha_ * qmax * opt_.lmax);
}

bool KineticSolver::try_step(DensityField& f, double dt, double* dissipation) const {
  const auto Qk = convolved_q(f);
  const int nc = f.stride();
  const double tau = dt / f.eps;
  std::vector<double> site_diss(torus_.size(), 0.0);
  std::atomic<bool> ok{true};
  DensityField next = f;
  parallel_for(torus_.size(), [&](std::size_t s) {
    const int site = static_cast<int>(s);
    std::vector<double> drift(nc);
    site_drift(f.site(site), Qk.q[s], drift.data(), &site_diss[s]);
    auto a = f.site(site);
    auto out = next.site(site);
    for (int c = 0; c < nc; ++c) {
      const double lam = degree_factor(c);
      // Laplacian implicit; for the energy-consistent drift the explicit
      // Laplacian contained in the drift is removed.
      const double explicit_part =
          opt_.scheme == DriftScheme::EnergyConsistent ? drift[c] + lam * a[c] : drift[c];
      out[c] = (a[c] + tau * explicit_part) / (1.0 + tau * lam);
    }
    out[0] = a[0];
    const auto v = site_values(next, site);
    if (*std::min_element(v.begin(), v.end()) <= 0.0) ok = false;
  });
  if (!ok) return false;
  if (dissipation) {
    double total = 0.0;
    for (double d : site_diss) total += d;
    *dissipation = total * torus_.cell_volume() / (f.eps * f.eps);
  }
  next.t = f.t + dt;
  f = std::move(next);
  return true;
}

int KineticSolver::step(DensityField& f, double dt, double* dissipated) const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  struct Advance {
    const KineticSolver& self;
    double* dissipated;
    int substeps = 0;
    void run(DensityField& g, double h, int level) {
      if (level > self.opt_.max_halvings) throw StabilityError("positivity lost after repeated step halving");
      double d = 0.0;
      DensityField trial = g;
      if (self.try_step(trial, h, &d)) {
        g = std::move(trial);
        if (dissipated) *dissipated += d * h;
        ++substeps;
        return;
      }
      run(g, 0.5 * h, level + 1);
      run(g, 0.5 * h, level + 1);
    }
  } adv{*this, dissipated};
  adv.run(f, dt, 0);
  return adv.substeps;
}

EnergyReport KineticSolver::energy_report(const DensityField& f) const {
  const auto& G = *sphere_;
  const auto Q = q_field(f);
  const auto Qk = convolve_keps(Q, kernel_, f.eps);
  std::vector<double> bulk(torus_.size()), diss(torus_.size());
  const int nc = f.stride();
  parallel_for(torus_.size(), [&](std::size_t s) {
    const int site = static_cast<int>(s);
    auto v = site_values(f, site);
    double entropy = 0.0;
    for (int q = 0; q < G.size(); ++q) entropy += G.weights()[q] * v[q] * std::log(std::max(v[q], 1e-14));
    bulk[s] = bulk_energy_from(entropy, Q.q[s], alpha_) - eq_energy_;
    if (*std::min_element(v.begin(), v.end()) > 0.0) {
      std::vector<double> drift(nc);
      site_drift(f.site(site), Qk.q[s], drift.data(), &diss[s]);
    } else {
      diss[s] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  EnergyReport r;
  r.t = f.t;
  for (int s = 0; s < torus_.size(); ++s) {
    r.bulk_excess += bulk[s];
    r.dissipation += diss[s];
  }
  r.bulk_excess *= torus_.cell_volume();
  r.dissipation *= torus_.cell_volume() / (f.eps * f.eps);
  r.doubled_term = doubled_energy_form(Q, kernel_, f.eps, alpha_);
  r.modulated_total = r.bulk_excess + r.doubled_term;
  return r;
}

QTensorField KineticSolver::q_moment_rhs(const DensityField& f) const {
  const auto Q = q_field(f);
  const auto Qk = convolve_keps(Q, kernel_, f.eps);
  QTensorField out(torus_);
  parallel_for(torus_.size(), [&](std::size_t s) {
    const auto v = site_values(f, static_cast<int>(s));
    const S4Tensor fourth = fourth_moment(*sphere_, v);
    out.q[s] = -6.0 * Q.q[s] + 2.0 * alpha_ * apply_moment_map(Q.q[s], fourth, Qk.q[s]);
  });
  return out;
}

QTensorField KineticSolver::closure_rhs(const QTensorField& Q, const QTensorField& Qk, double alpha,
                                        const BinghamSolver& solver) {
  QTensorField out(Q.grid);
  parallel_for(Q.grid.size(), [&](std::size_t s) {
    BinghamResult b;
    try {
      b = solver.solve(Q.q[s]);
    } catch (const InfeasibleMoment&) {
      throw InfeasibleMoment("closure site outside the feasible moment set", static_cast<long>(s));
    }
    Mat3 r = -6.0 * Q.q[s] + 2.0 * alpha * apply_moment_map(Q.q[s], b.fourth, Qk.q[s]);
    r = 0.5 * (r + r.transpose());
    r -= r.trace() / 3.0 * Mat3::Identity();
    out.q[s] = r;
  });
  return out;
}

QTensorField KineticSolver::q_closure_step(const QTensorField& Q, double dt, double eps) const {
  const auto Qk = convolve_keps(Q, kernel_, eps);
  const auto r = closure_rhs(Q, Qk, alpha_, *bingham_);
  QTensorField out(Q.grid);
  for (int s = 0; s < Q.grid.size(); ++s) out.q[s] = Q.q[s] + dt / eps * r.q[s];
  return out;
}

double KineticSolver::min_value(const DensityField& f) const {
  std::vector<double> mins(torus_.size());
  parallel_for(torus_.size(), [&](std::size_t s) {
    const auto v = site_values(f, static_cast<int>(s));
    mins[s] = *std::min_element(v.begin(), v.end());
  });
  return *std::min_element(mins.begin(), mins.end());
}

double KineticSolver::mass_drift(const DensityField& f) const {
  double m = 0.0;
  const double target = 1.0 / std::sqrt(4.0 * kPi);
  for (int s = 0; s < torus_.size(); ++s)
    m = std::max(m, std::abs(f.site(s)[0] - target) * std::sqrt(4.0 * kPi));
  return m;
}

// ------------------------------------------------------------ snapshots

namespace {

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("truncated snapshot");
  return v;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const DensityField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open snapshot for writing: " + path.string());
  const SphereGrid g(f.lmax);
  out.write(kMagic, 5);
  put<std::int32_t>(out, f.torus.dim());
  put<std::int32_t>(out, f.torus.n());
  put<std::int32_t>(out, f.lmax);
  put<std::int32_t>(out, g.nphi());
  put<double>(out, f.t);
  put<double>(out, f.eps);
  std::vector<double> v(g.size());
  for (int s = 0; s < f.torus.size(); ++s) {
    g.synthesize(f.site(s).data(), f.lmax, v.data());
    for (double x : v) put<double>(out, x);
  }
  if (!out) throw ConfigError("failed writing snapshot: " + path.string());
}

DensityField read_snapshot(const std::filesystem::path& path, double length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot: " + path.string());
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kMagic, 5) != 0) throw ConfigError("not a DOQS1 snapshot");
  const int d = get<std::int32_t>(in);
  const int n = get<std::int32_t>(in);
  const int lmax = get<std::int32_t>(in);
  const int nphi = get<std::int32_t>(in);
  if (lmax < 2 || nphi != 2 * lmax + 2) throw ConfigError("snapshot is not a density snapshot");
  DensityField f(TorusGrid(d, length, n), lmax);
  f.t = get<double>(in);
  f.eps = get<double>(in);
  const SphereGrid g(lmax);
  std::vector<double> v(g.size());
  for (int s = 0; s < f.torus.size(); ++s) {
    for (auto& x : v) x = get<double>(in);
    g.analyze(v.data(), lmax, f.site(s).data());
  }
  return f;
}

EnergyCsv::EnergyCsv(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw ConfigError("cannot open energy csv: " + path.string());
  out_ << "t,bulk_excess,doubled_term,modulated_total,dissipation,cumulative_dissipation\n";
  out_.precision(17);
}

void EnergyCsv::append(const EnergyReport& r) {
  out_ << r.t << ',' << r.bulk_excess << ',' << r.doubled_term << ',' << r.modulated_total << ','
       << r.dissipation << ',' << r.cumulative_dissipation << '\n';
  out_.flush();
}

}  // namespace doilab
