#include "doilab/maier_saupe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "doilab/errors.hpp"

namespace doilab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Moments {
  double i0, i2, i4;  // int_0^1 x^k e^{eta (x^2 - shift)} dx
  double centered;    // int_0^1 (x^2 - 1/3) e^{eta (x^2 - shift)} dx, without cancellation
  double shift;
};

Moments moments(double eta) {
  using Rule = boost::math::quadrature::gauss<double, 30>;
  // Factor out e^{eta} for eta > 0 so the integrand stays below one.
  const double shift = eta > 0.0 ? eta : 0.0;
  constexpr int kPanels = 8;
  Moments m{0.0, 0.0, 0.0, 0.0, shift};
  const double floor = std::exp(-shift);
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  auto add = [&](double t, double wt) {
    const double t2 = t * t;
    const double e = wt * std::exp(eta * t2 - shift);
    m.i0 += e;
    m.i2 += e * t2;
    m.i4 += e * t2 * t2;
    // (x^2 - 1/3) integrates to zero, so subtracting e^{-shift} removes the O(1) part.
    m.centered += wt * (t2 - 1.0 / 3.0) * floor * std::expm1(eta * t2);
  };
  const double half = 0.5 / kPanels;
  for (int p = 0; p < kPanels; ++p) {
    const double mid = (2 * p + 1) * half;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] == 0.0) {
        add(mid, w[j] * half);
      } else {
        add(mid + half * x[j], w[j] * half);
        add(mid - half * x[j], w[j] * half);
      }
    }
  }
  return m;
}

// G(eta) = alpha s2(eta)/eta - 1, continuous through eta = 0.
double s2_over_eta(double eta) {
  if (std::abs(eta) < 1e-8) return 2.0 / 15.0 + 4.0 / 315.0 * eta;
  return s2(eta) / eta;
}

}  // namespace

double s2(double eta) {
  const Moments m = moments(eta);
  return 1.5 * m.centered / m.i0;
}

double s2_derivative(double eta) {
  const Moments m = moments(eta);
  const double x2 = m.i2 / m.i0;
  return 1.5 * (m.i4 / m.i0 - x2 * x2);
}

double partition_function(double eta) {
  const Moments m = moments(eta);
  return 4.0 * kPi * m.i0 * std::exp(m.shift);
}

std::vector<double> solve_eta(double alpha) {
  auto G = [alpha](double eta) { return alpha * s2_over_eta(eta) - 1.0; };
  auto F = [alpha](double eta) { return alpha * s2(eta) - eta; };
  auto dF = [alpha](double eta) { return alpha * s2_derivative(eta) - 1.0; };

  constexpr int kSteps = 1200;
  constexpr double kLo = -20.0, kStep = 0.05;
  std::vector<double> eta(kSteps + 1), g(kSteps + 1);
  for (int i = 0; i <= kSteps; ++i) {
    eta[i] = kLo + kStep * i;
    if (std::abs(eta[i]) < 1e-12) eta[i] = 0.0;
    g[i] = G(eta[i]);
  }

  std::vector<double> roots{0.0};
  auto add_root = [&](double r) {
    for (double x : roots)
      if (std::abs(x - r) < 1e-7) return;
    roots.push_back(r);
  };
  auto polish = [&](double r) {
    for (int it = 0; it < 8 && r != 0.0; ++it) {
      const double d = dF(r);
      if (d == 0.0) break;
      const double step = F(r) / d;
      r -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(r))) break;
    }
    return r;
  };

  for (int i = 0; i < kSteps; ++i) {
    if (g[i] == 0.0) {
      add_root(eta[i]);
      continue;
    }
    if (g[i] * g[i + 1] < 0.0) {
      std::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      const auto br = boost::math::tools::toms748_solve(G, eta[i], eta[i + 1], g[i], g[i + 1], tol, iters);
      add_root(polish(0.5 * (br.first + br.second)));
    }
  }
  // Tangential roots: a local extremum of G that touches zero.
  for (int i = 1; i < kSteps; ++i) {
    const bool peak = g[i] >= g[i - 1] && g[i] >= g[i + 1] && g[i] <= 0.0;
    const bool dip = g[i] <= g[i - 1] && g[i] <= g[i + 1] && g[i] >= 0.0;
    if (!peak && !dip) continue;
    const double sign = peak ? -1.0 : 1.0;
    auto obj = [&](double e) { return sign * G(e); };
    const auto m = boost::math::tools::brent_find_minima(obj, eta[i - 1], eta[i + 1], 50);
    if (std::abs(G(m.first)) < 1e-10) add_root(m.first);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

namespace {
double ratio(double eta) {
  const Moments m = moments(eta);
  return m.i0 / (m.i2 - m.i4);
}
}  // namespace

double eta_star() {
  return boost::math::tools::brent_find_minima(ratio, 0.0, 20.0, 52).first;
}

double alpha_star() { return ratio(eta_star()); }

EquilibriumParams equilibrium_params(double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  EquilibriumParams p;
  p.alpha = alpha;
  const auto roots = solve_eta(alpha);
  p.eta = roots.back();
  p.S2 = s2(p.eta);
  p.Z = partition_function(p.eta);
  // int h log h = eta <(m.nu)^2> - log Z, <(m.nu)^2> = (2 S2 + 1)/3, |Q|^2 = 2 S2^2 / 3.
  p.E0 = p.eta * (2.0 * p.S2 + 1.0) / 3.0 - std::log(p.Z) + alpha / 3.0 - alpha * p.S2 * p.S2 / 3.0;
  return p;
}

std::vector<double> equilibrium_density(const Vec3& nu, double eta, const SphereGrid& g) {
  const double n = nu.norm();
  if (std::abs(n - 1.0) > 1e-12) throw ConfigError("director must be a unit vector");
  const double Z = partition_function(eta);
  std::vector<double> h(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double c = g.node(i).dot(nu);
    h[i] = std::exp(eta * c * c) / Z;
  }
  return h;
}

double bulk_energy_from(double entropy, const QTensor& Q, double alpha) {
  return entropy + alpha / 3.0 - 0.5 * alpha * Q.squaredNorm();
}

double bulk_energy(const SphereGrid& g, std::span<const double> f, double alpha) {
  if (static_cast<int>(f.size()) != g.size()) throw ConfigError("field size does not match sphere grid");
  double ent = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    if (!(f[i] > 0.0)) throw DomainError("bulk energy needs a positive density");
    ent += g.weights()[i] * f[i] * std::log(f[i]);
  }
  return bulk_energy_from(ent, second_moment(g, f), alpha);
}

std::vector<double> u0_potential(const SphereGrid& g, std::span<const double> f, double alpha) {
  const Mat3 M = raw_second_moment(g, f);
  const double mass = M.trace();
  std::vector<double> u(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& m = g.node(i);
    u[i] = alpha * (mass - m.dot(M * m));
  }
  return u;
}

std::vector<double> quadratic_potential(const SphereGrid& g, const QTensor& A, double alpha) {
  std::vector<double> u(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& m = g.node(i);
    u[i] = alpha * (2.0 / 3.0 - m.dot(A * m));
  }
  return u;
}

// ------------------------------------------------------------------ Bingham

const std::array<Mat3, 5>& traceless_basis() {
  static const std::array<Mat3, 5> basis = [] {
    std::array<Mat3, 5> e;
    for (auto& x : e) x.setZero();
    e[0](0, 0) = 1.0 / std::sqrt(2.0);
    e[0](1, 1) = -1.0 / std::sqrt(2.0);
    e[1](0, 0) = e[1](1, 1) = 1.0 / std::sqrt(6.0);
    e[1](2, 2) = -2.0 / std::sqrt(6.0);
    const double r = 1.0 / std::sqrt(2.0);
    e[2](0, 1) = e[2](1, 0) = r;
    e[3](0, 2) = e[3](2, 0) = r;
    e[4](1, 2) = e[4](2, 1) = r;
    return e;
  }();
  return basis;
}

bool is_feasible_moment(const QTensor& Q, double margin) {
  if (!Q.allFinite()) return false;
  if (std::abs(Q.trace()) > 1e-9 || (Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(Q, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > -1.0 / 3.0 + margin && es.eigenvalues().maxCoeff() < 2.0 / 3.0 - margin;
}

BinghamSolver::BinghamSolver(int quadrature_lmax, double tol, int max_iter)
    : grid_(std::make_shared<SphereGrid>(quadrature_lmax)), tol_(tol), max_iter_(max_iter) {}

namespace {

struct BinghamEval {
  double log_z;
  Eigen::Matrix<double, 5, 1> mean;
  Eigen::Matrix<double, 5, 5> cov;
};

BinghamEval evaluate(const SphereGrid& g, const Mat3& B, bool with_cov) {
  const auto& E = traceless_basis();
  double shift = -std::numeric_limits<double>::infinity();
  std::vector<double> ex(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& m = g.node(i);
    ex[i] = m.dot(B * m);
    shift = std::max(shift, ex[i]);
  }
  double z = 0.0;
  Eigen::Matrix<double, 5, 1> s1 = Eigen::Matrix<double, 5, 1>::Zero();
  Eigen::Matrix<double, 5, 5> s2m = Eigen::Matrix<double, 5, 5>::Zero();
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& m = g.node(i);
    const double w = g.weights()[i] * std::exp(ex[i] - shift);
    Eigen::Matrix<double, 5, 1> y;
    for (int a = 0; a < 5; ++a) y[a] = m.dot(E[a] * m);
    z += w;
    s1 += w * y;
    if (with_cov) s2m.noalias() += w * y * y.transpose();
  }
  BinghamEval out;
  out.log_z = std::log(z) + shift;
  out.mean = s1 / z;
  if (with_cov) out.cov = s2m / z - out.mean * out.mean.transpose();
  return out;
}

Mat3 from_coords(const Eigen::Matrix<double, 5, 1>& b) {
  const auto& E = traceless_basis();
  Mat3 B = Mat3::Zero();
  for (int a = 0; a < 5; ++a) B += b[a] * E[a];
  return B;
}

}  // namespace

BinghamResult BinghamSolver::solve(const QTensor& Q, const QTensor& guess) const {
  if (!is_feasible_moment(Q)) throw InfeasibleMoment("second moment outside the feasible set");
  const auto& E = traceless_basis();
  Eigen::Matrix<double, 5, 1> q, b;
  for (int a = 0; a < 5; ++a) {
    q[a] = (E[a].array() * Q.array()).sum();
    b[a] = (E[a].array() * guess.array()).sum();
  }
  // Newton on the convex dual objective log Z(B) - B:Q, whose gradient is
  // Q[f_B] - Q and whose Hessian is the covariance of the features m.E_a m.
  BinghamResult res;
  auto ev = evaluate(*grid_, from_coords(b), true);
  int it = 0;
  for (;; ++it) {
    const Eigen::Matrix<double, 5, 1> grad = ev.mean - q;
    if (grad.cwiseAbs().maxCoeff() < tol_) break;
    if (it >= max_iter_) throw ConvergenceError("Bingham Newton iteration did not converge");
    const Eigen::Matrix<double, 5, 1> step = ev.cov.ldlt().solve(grad);
    const double phi0 = ev.log_z - b.dot(q);
    const double slope = grad.dot(step);
    double t = 1.0;
    Eigen::Matrix<double, 5, 1> trial;
    for (;;) {
      trial = b - t * step;
      const auto et = evaluate(*grid_, from_coords(trial), false);
      // Near the solution the objective decrease drops below roundoff, so a
      // smaller gradient also accepts the step.
      const bool armijo = et.log_z - trial.dot(q) <= phi0 - 1e-4 * t * slope;
      if (armijo || (et.mean - q).norm() < 0.5 * grad.norm() || t < 1e-12) break;
      t *= 0.5;
    }
    b = trial;
    ev = evaluate(*grid_, from_coords(b), true);
  }
  res.B = from_coords(b);
  res.iterations = it;
  std::vector<double> f(grid_->size());
  double z = 0.0;
  for (int i = 0; i < grid_->size(); ++i) {
    const Vec3& m = grid_->node(i);
    f[i] = std::exp(m.dot(res.B * m) - ev.log_z);
    z += grid_->weights()[i] * f[i];
  }
  for (auto& x : f) x /= z;
  res.Q = second_moment(*grid_, f);
  res.fourth = fourth_moment(*grid_, f);
  return res;
}

QTensor bingham_map(const QTensor& Q) {
  static const BinghamSolver solver;
  return solver.solve(Q).B;
}

}  // namespace doilab
