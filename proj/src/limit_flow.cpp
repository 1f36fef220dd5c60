#include "doilab/limit_flow.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doilab/errors.hpp"
#include "doilab/parallel.hpp"

namespace doilab {

namespace {

constexpr double kPi = std::numbers::pi;

// Associated Legendre functions P_l^m(cos t), no Condon-Shortley phase, for
// orders 0..3 and degrees 0..N. Row m, column l.
Eigen::Matrix<double, 4, Eigen::Dynamic> legendre_orders(int N, double theta) {
  const double x = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix<double, 4, Eigen::Dynamic> p = Eigen::Matrix<double, 4, Eigen::Dynamic>::Zero(4, N + 1);
  double diag = 1.0;
  for (int m = 0; m <= 3; ++m) {
    if (m > 0) diag *= (2 * m - 1) * s;
    if (m > N) break;
    p(m, m) = diag;
    if (m + 1 <= N) p(m, m + 1) = x * (2 * m + 1) * diag;
    for (int l = m + 2; l <= N; ++l)
      p(m, l) = ((2 * l - 1) * x * p(m, l - 1) - (l + m - 1) * p(m, l - 2)) / (l - m);
  }
  return p;
}

double basis_norm(int l) { return std::sqrt(2.0 * l * (l + 1) / (2.0 * l + 1)); }

// Dense matrices of the rotation generators on coefficients of degree <= L.
std::array<Eigen::MatrixXd, 3> generator_matrices(int L) {
  const auto& R = RotationGenerators::get(L);
  const int n = num_coeffs(L);
  std::array<Eigen::MatrixXd, 3> out;
  for (int i = 0; i < 3; ++i) {
    out[i] = Eigen::MatrixXd::Zero(n, n);
    for (int l = 0; l <= L; ++l) out[i].block(l * l, l * l, 2 * l + 1, 2 * l + 1) = R.block(i, l);
  }
  return out;
}

// Quadrature grid fine enough for f0 times products of degree-L harmonics.
int linearized_grid_degree(const EquilibriumParams& p, int L) {
  return 2 * L + 32 + static_cast<int>(std::ceil(2.0 * std::abs(p.eta)));
}

Eigen::MatrixXd weighted_mass(const SphereGrid& g, const Eigen::MatrixXd& Y, std::span<const double> weight) {
  Eigen::MatrixXd scaled = Y;
  for (int q = 0; q < g.size(); ++q) scaled.row(q) *= g.weights()[q] * weight[q];
  Eigen::MatrixXd M = Y.transpose() * scaled;
  return 0.5 * (M + M.transpose());
}

Eigen::MatrixXd stiffness(const Eigen::MatrixXd& mass, int L) {
  const auto R = generator_matrices(L);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(mass.rows(), mass.cols());
  for (int i = 0; i < 3; ++i) a.noalias() += R[i].transpose() * mass * R[i];
  return 0.5 * (a + a.transpose());
}

void check_unit(const Vec3& n) {
  if (std::abs(n.norm() - 1.0) > 1e-12) throw ConfigError("director must be a unit vector");
}

int site_count_check(const DirectorField& f) {
  if (static_cast<int>(f.n.size()) != f.torus.size()) throw ConfigError("director field size does not match its grid");
  return f.torus.size();
}

std::vector<Vec3> laplacian(const DirectorField& f) {
  const auto& g = f.torus;
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<Vec3> out(g.size(), Vec3::Zero());
  for (int s = 0; s < g.size(); ++s)
    for (int axis = 0; axis < g.dim(); ++axis)
      out[s] += (f.n[g.shift(s, axis, 1)] - 2.0 * f.n[s] + f.n[g.shift(s, axis, -1)]) * inv_h2;
  return out;
}

}  // namespace

double U0Profile::value(double theta) const {
  const double c = std::cos(theta);
  return alpha * (2.0 / 3.0 + S2 / 3.0 - S2 * c * c);
}

double U0Profile::derivative(double theta) const {
  return 2.0 * alpha * S2 * std::cos(theta) * std::sin(theta);
}

U0Profile u0_profile(const EquilibriumParams& params) { return {params.alpha, params.S2}; }

G0Profile::G0Profile(U0Profile u0, std::vector<double> coeffs) : u0_(u0), coeffs_(std::move(coeffs)) {}

std::array<double, 3> G0Profile::evaluate(double theta) const {
  const int N = modes();
  const auto p = legendre_orders(N, theta);
  std::array<double, 3> r{0.0, 0.0, 0.0};
  for (int l = 1; l <= N; ++l) {
    const double c = coeffs_[l - 1] / basis_norm(l);
    const double ll = static_cast<double>(l) * (l + 1);
    // d/dt P^0 = -P^1, d/dt P^1 = (l(l+1) P^0 - P^2) / 2, d/dt P^2 = ((l+2)(l-1) P^1 - P^3) / 2.
    const double d1 = 0.5 * (ll * p(0, l) - p(2, l));
    const double dp2 = 0.5 * ((l + 2.0) * (l - 1.0) * p(1, l) - p(3, l));
    const double d2 = 0.5 * (-ll * p(1, l) - dp2);
    r[0] += c * p(1, l);
    r[1] += c * d1;
    r[2] += c * d2;
  }
  return r;
}

double G0Profile::value(double theta) const { return evaluate(theta)[0]; }
double G0Profile::derivative(double theta) const { return evaluate(theta)[1]; }
double G0Profile::second_derivative(double theta) const { return evaluate(theta)[2]; }

double G0Profile::residual(double theta) const {
  const auto [g, d1, d2] = evaluate(theta);
  const double s = std::sin(theta), c = std::cos(theta);
  const double du = u0_.derivative(theta);
  return d2 + c / s * d1 - g / (s * s) - du * d1 + du;
}

G0Profile solve_g0(const EquilibriumParams& params, int modes) {
  if (modes < 1) throw ConfigError("g0 needs at least one mode");
  const U0Profile u0 = u0_profile(params);
  const int N = modes;
  std::vector<double> x, w;
  gauss_legendre(N + 8, x, w);
  const int M = static_cast<int>(x.size());
  Eigen::MatrixXd phi(M, N), dphi(M, N);
  Eigen::VectorXd drift(M);
  for (int q = 0; q < M; ++q) {
    const double theta = std::acos(x[q]);
    const auto p = legendre_orders(N, theta);
    for (int l = 1; l <= N; ++l) {
      const double nrm = basis_norm(l);
      phi(q, l - 1) = p(1, l) / nrm;
      dphi(q, l - 1) = 0.5 * (l * (l + 1.0) * p(0, l) - p(2, l)) / nrm;
    }
    drift(q) = w[q] * u0.derivative(theta);
  }
  // Galerkin form in L^2(-1, 1): (-l(l+1) delta - <phi_i, u0' phi_j'>) c = -<phi_i, u0'>.
  Eigen::MatrixXd K = -(phi.transpose() * drift.asDiagonal() * dphi);
  for (int l = 1; l <= N; ++l) K(l - 1, l - 1) -= l * (l + 1.0);
  const Eigen::VectorXd rhs = -(phi.transpose() * drift);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::VectorXd c = lu.solve(rhs);
  if (!c.allFinite() || (K * c - rhs).norm() > 1e-8 * (1.0 + rhs.norm()))
    throw NumericalError("g0 linear solve failed");
  return G0Profile(u0, std::vector<double>(c.data(), c.data() + c.size()));
}

double gamma_constant(const EquilibriumParams& params, const G0Profile& g0) {
  // d f0/dt = -2 eta cos t sin t f0, and sin t dt = dx.
  std::vector<double> x, w;
  gauss_legendre(std::max(g0.modes() + 8, 200), x, w);
  double sum = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    const double theta = std::acos(x[q]);
    const double f0 = std::exp(params.eta * x[q] * x[q]) / params.Z;
    sum += w[q] * 2.0 * params.eta * x[q] * std::sin(theta) * f0 * g0.value(theta);
  }
  const double gamma = kPi * sum;
  if (!(gamma > 0.0)) throw NumericalError("mobility constant is not positive");
  return gamma;
}

double gamma_constant(const EquilibriumParams& params) { return gamma_constant(params, solve_g0(params)); }

LimitCoefficients lambda_coefficient(const EquilibriumParams& params, const KernelSpec& spec, double gamma) {
  LimitCoefficients c;
  c.alpha = params.alpha;
  c.eta = params.eta;
  c.S2 = params.S2;
  c.Z = params.Z;
  c.E0 = params.E0;
  c.gamma = gamma;
  c.mu = spec.mu;
  c.Lambda = 2.0 * params.alpha * spec.mu * params.S2 * params.S2 / (gamma * spec.d);
  return c;
}

LimitCoefficients lambda_coefficient(const EquilibriumParams& params, const KernelSpec& spec) {
  return lambda_coefficient(params, spec, gamma_constant(params));
}

Eigen::VectorXd LinearizedOperators::apply_g(const Eigen::VectorXd& c) const { return -(a_form * (h_op * c)); }

LinearizedOperators assemble_linearized(const EquilibriumParams& params, const Vec3& director, int L) {
  if (L < 2) throw ConfigError("linearized operators need L >= 2");
  check_unit(director);
  const SphereGrid g(linearized_grid_degree(params, L));
  const Eigen::MatrixXd Y = g.basis_matrix(L);
  const auto f0 = equilibrium_density(director, params.eta, g);
  std::vector<double> f0sq(f0.size());
  for (std::size_t q = 0; q < f0.size(); ++q) f0sq[q] = f0[q] * f0[q];
  const int n = num_coeffs(L);

  LinearizedOperators ops;
  ops.L = L;
  ops.director = director;
  ops.f0_mass = weighted_mass(g, Y, f0);
  ops.gram = weighted_mass(g, Y, f0sq);
  ops.a_form = stiffness(ops.f0_mass, L);

  // U0[g](m) = alpha (int g - m.M_g m) with M_g = int m m g, a polynomial of
  // degree two whose coefficients come from a small exact grid.
  const SphereGrid small(4);
  std::array<Eigen::VectorXd, 6> moment;  // int m_a m_b f0 Y_j for a <= b
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  {
    Eigen::MatrixXd mm(g.size(), 6);
    Eigen::VectorXd wf(g.size());
    for (int q = 0; q < g.size(); ++q) {
      const Vec3& m = g.node(q);
      wf(q) = g.weights()[q] * f0[q];
      int k = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) mm(q, k++) = m[a] * m[b];
    }
    mass = Y.transpose() * wf;
    const Eigen::MatrixXd mom = Y.transpose() * (wf.asDiagonal() * mm);
    for (int k = 0; k < 6; ++k) moment[k] = mom.col(k);
  }
  ops.h_op = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> values(small.size());
  for (int j = 0; j < n; ++j) {
    Mat3 Mj;
    int k = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) Mj(a, b) = Mj(b, a) = moment[k++](j);
    for (int q = 0; q < small.size(); ++q) {
      const Vec3& m = small.node(q);
      values[q] = params.alpha * (mass(j) - m.dot(Mj * m));
    }
    const auto u = small.analyze(values, 2);
    for (int i = 0; i < num_coeffs(2); ++i) ops.h_op(i, j) += u[i];
  }
  const Eigen::MatrixXd hf = ops.f0_mass * ops.h_op;
  ops.h_form = 0.5 * (hf + hf.transpose());
  return ops;
}

KernelAnalysis analyze_h_kernel(const LinearizedOperators& ops, double threshold) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ops.h_form, ops.gram);
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigenproblem failed");
  KernelAnalysis k;
  k.eigenvalues = es.eigenvalues();
  k.largest = k.eigenvalues.cwiseAbs().maxCoeff();
  std::vector<int> kernel;
  for (int i = 0; i < k.eigenvalues.size(); ++i) {
    if (std::abs(k.eigenvalues(i)) < threshold * k.largest)
      kernel.push_back(i);
    else if (k.spectral_gap == 0.0 || k.eigenvalues(i) < k.spectral_gap)
      k.spectral_gap = k.eigenvalues(i);
  }
  k.kernel_dim = static_cast<int>(kernel.size());
  k.kernel_basis.resize(ops.gram.rows(), k.kernel_dim);
  for (int i = 0; i < k.kernel_dim; ++i) k.kernel_basis.col(i) = es.eigenvectors().col(kernel[i]);
  return k;
}

double subspace_angle(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& reference, const Eigen::MatrixXd& gram) {
  auto orthonormal = [&](const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd G = B.transpose() * gram * B;
    const Eigen::LLT<Eigen::MatrixXd> llt(G);
    // B L^{-T} has identity Gram matrix.
    return Eigen::MatrixXd(llt.matrixU().solve<Eigen::OnTheRight>(B));
  };
  const Eigen::MatrixXd A = orthonormal(basis);
  const Eigen::MatrixXd B = orthonormal(reference);
  const Eigen::MatrixXd residual = A - B * (B.transpose() * gram * A);
  const Eigen::MatrixXd G = residual.transpose() * gram * residual;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()), Eigen::EigenvaluesOnly);
  const double s = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  return std::asin(std::min(1.0, s));
}

Eigen::VectorXd weighted_quadratic(int L, const Mat3& B) {
  if (L < 2) throw ConfigError("quadratic weights need L >= 2");
  const SphereGrid small(4);
  const Mat3 S = 0.5 * (B + B.transpose());
  std::vector<double> v(small.size());
  for (int q = 0; q < small.size(); ++q) v[q] = small.node(q).dot(S * small.node(q));
  const auto c = small.analyze(v, 2);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_coeffs(L));
  for (int i = 0; i < num_coeffs(2); ++i) out(i) = c[i];
  return out;
}

Mat3 bilinear_matrix(const EquilibriumParams& params, const Vec3& director, int L) {
  check_unit(director);
  const SphereGrid g(linearized_grid_degree(params, L));
  const Eigen::MatrixXd Y = g.basis_matrix(L);
  const auto f0 = equilibrium_density(director, params.eta, g);
  const Eigen::MatrixXd a = stiffness(weighted_mass(g, Y, f0), L);
  // R f0 = 2 eta (m.n)(m ^ n) f0, tested against each harmonic.
  Eigen::MatrixXd rf(g.size(), 3);
  for (int q = 0; q < g.size(); ++q) {
    const Vec3& m = g.node(q);
    rf.row(q) = (2.0 * params.eta * m.dot(director) * f0[q] * g.weights()[q]) * m.cross(director).transpose();
  }
  const Eigen::MatrixXd b = Y.transpose() * rf;
  const int n = num_coeffs(L);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a.bottomRightCorner(n - 1, n - 1));
  if (ldlt.info() != Eigen::Success) throw NumericalError("mobility operator is not positive definite");
  const Eigen::MatrixXd psi = ldlt.solve(b.bottomRows(n - 1));
  const Eigen::MatrixXd form = b.bottomRows(n - 1).transpose() * psi;
  return 0.5 * (form + form.transpose());
}

double bilinear_form(const EquilibriumParams& params, const Vec3& director, const Vec3& u, const Vec3& v, int L) {
  return u.dot(bilinear_matrix(params, director, L) * v);
}

double DirectorField::unit_defect() const {
  double d = 0.0;
  for (const auto& v : n) d = std::max(d, std::abs(v.norm() - 1.0));
  return d;
}

double hmhf_stable_dt(const TorusGrid& g, double Lambda) {
  return g.spacing() * g.spacing() / (2.0 * g.dim() * Lambda);
}

void hmhf_step(DirectorField& f, double dt, double Lambda) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const int sites = site_count_check(f);
  const auto lap = laplacian(f);
  std::vector<Vec3> next(sites);
  parallel_for(sites, [&](std::size_t s) {
    const Vec3& n = f.n[s];
    const Vec3 tangential = lap[s] - n.dot(lap[s]) * n;
    const Vec3 v = n + dt * Lambda * tangential;
    const double len = v.norm();
    if (!(len > 1e-300)) throw SingularityError("director collapsed to zero at site " + std::to_string(s));
    next[s] = v / len;
  });
  f.n = std::move(next);
  f.t += dt;
}

double dirichlet_energy(const DirectorField& f) {
  const auto& g = f.torus;
  site_count_check(f);
  const double h = g.spacing();
  double sum = 0.0;
  for (int s = 0; s < g.size(); ++s)
    for (int axis = 0; axis < g.dim(); ++axis) sum += ((f.n[g.shift(s, axis, 1)] - f.n[s]) / h).squaredNorm();
  return sum * g.cell_volume();
}

WeakResidual weak_residual(std::span<const DirectorField> trajectory, const TestField& theta,
                           const TestProfile& phi, double Lambda) {
  WeakResidual r;
  if (trajectory.size() < 2) return r;
  const auto& g = trajectory.front().torus;
  const double h = g.spacing();
  const double dt = trajectory[1].t - trajectory[0].t;
  if (!(dt > 0.0)) throw ConfigError("trajectory must advance in time");
  std::vector<Vec3> test(g.size());
  for (int s = 0; s < g.size(); ++s) test[s] = theta(g.position(s));

  // Spatial form sum_x D+Theta . (n ^ D+n) h^d at one time level.
  auto spatial = [&](const DirectorField& f) {
    double sum = 0.0;
    for (int s = 0; s < g.size(); ++s)
      for (int axis = 0; axis < g.dim(); ++axis) {
        const int e = g.shift(s, axis, 1);
        sum += ((test[e] - test[s]) / h).dot(f.n[s].cross((f.n[e] - f.n[s]) / h));
      }
    return sum * g.cell_volume();
  };

  const std::size_t K = trajectory.size() - 1;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& a = trajectory[k];
    const auto& b = trajectory[k + 1];
    if (std::abs((b.t - a.t) - dt) > 1e-9 * dt) throw ConfigError("trajectory must be stored at uniform dt");
    double sum = 0.0;
    for (int s = 0; s < g.size(); ++s) sum += (b.n[s] - a.n[s]).cross(a.n[s]).dot(test[s]);
    r.left += phi(a.t + 0.5 * dt) * sum * g.cell_volume();
  }
  for (std::size_t k = 0; k <= K; ++k) {
    const double weight = (k == 0 || k == K) ? 0.5 * dt : dt;
    r.right += weight * phi(trajectory[k].t) * spatial(trajectory[k]);
  }
  r.right *= Lambda;
  r.residual = std::abs(r.left - r.right);
  return r;
}

void write_director_snapshot(const std::filesystem::path& path, const DirectorField& f) {
  site_count_check(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open snapshot for writing: " + path.string());
  out.write("DOQS1", 5);
  out.put('n');
  const std::int32_t header[2] = {f.torus.dim(), f.torus.n()};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(&f.t), sizeof f.t);
  for (const auto& v : f.n) {
    const double xyz[3] = {v[0], v[1], v[2]};
    out.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
  }
  if (!out) throw ConfigError("failed writing snapshot: " + path.string());
}

DirectorField read_director_snapshot(const std::filesystem::path& path, double length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot: " + path.string());
  char magic[6] = {};
  in.read(magic, 6);
  if (!in || std::string(magic, 5) != "DOQS1" || magic[5] != 'n') throw ConfigError("not a director snapshot: " + path.string());
  std::int32_t header[2];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in) throw ConfigError("truncated snapshot: " + path.string());
  DirectorField f(TorusGrid(header[0], length, header[1]));
  in.read(reinterpret_cast<char*>(&f.t), sizeof f.t);
  for (auto& v : f.n) {
    double xyz[3];
    in.read(reinterpret_cast<char*>(xyz), sizeof xyz);
    v = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  if (!in) throw ConfigError("truncated snapshot: " + path.string());
  return f;
}

void write_coefficients_csv(const std::filesystem::path& path, std::span<const LimitCoefficients> rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open coefficient csv: " + path.string());
  out.precision(17);
  out << "alpha,eta,S2,Z,E0,gamma,mu,Lambda\n";
  for (const auto& c : rows)
    out << c.alpha << ',' << c.eta << ',' << c.S2 << ',' << c.Z << ',' << c.E0 << ',' << c.gamma << ',' << c.mu
        << ',' << c.Lambda << '\n';
}

}  // namespace doilab
