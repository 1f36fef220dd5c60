#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "doilab/errors.hpp"
#include "doilab/sphere.hpp"
#include "test_util.hpp"

using namespace doilab;
using testutil::max_abs;
using testutil::max_abs_diff;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample(const SphereGrid& g, auto fn) {
  std::vector<double> v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = fn(g.node(i));
  return v;
}

double levi_civita(int i, int j, int k) {
  return static_cast<double>((i - j) * (j - k) * (k - i)) / 2.0;
}

}  // namespace

TEST_CASE("grid sizes and weights") {
  SphereGrid g2(2);
  CHECK(g2.ntheta() == 3);
  CHECK(g2.nphi() == 6);
  double s = 0.0;
  for (double w : g2.weights()) s += w;
  CHECK(s == doctest::Approx(4 * kPi).epsilon(1e-13));
  CHECK_THROWS_AS(SphereGrid(1), ConfigError);

  SphereGrid g(8);
  const auto one = sample(g, [](const Vec3&) { return 1.0; });
  CHECK(std::abs(g.integrate(one) - 4 * kPi) < 1e-12);
  const auto z2 = sample(g, [](const Vec3& m) { return m[2] * m[2]; });
  CHECK(std::abs(g.integrate(z2) - 4 * kPi / 3) < 1e-12);
  const auto xy = sample(g, [](const Vec3& m) { return m[0] * m[1]; });
  CHECK(std::abs(g.integrate(xy)) < 1e-12);
  const auto uni = sample(g, [](const Vec3&) { return 1.0 / (4 * kPi); });
  CHECK(std::abs(g.integrate(uni) - 1.0) < 1e-13);
}

TEST_CASE("harmonic basis is orthonormal under the quadrature") {
  for (int lmax : {4, 8, 17}) {
    SphereGrid g(lmax);
    const Eigen::MatrixXd Y = g.basis_matrix(lmax);
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(g.weights().data(), g.size());
    const Eigen::MatrixXd G = Y.transpose() * w.asDiagonal() * Y;
    CHECK((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("known low-degree harmonics") {
  SphereGrid g(6);
  const double c1 = std::sqrt(3.0 / (4 * kPi));
  const Eigen::MatrixXd Y = g.basis_matrix(1);
  for (int i = 0; i < g.size(); ++i) {
    const Vec3& m = g.node(i);
    CHECK(Y(i, harmonic_index(0, 0)) == doctest::Approx(1 / std::sqrt(4 * kPi)));
    CHECK(Y(i, harmonic_index(1, 1)) == doctest::Approx(c1 * m[0]));
    CHECK(Y(i, harmonic_index(1, -1)) == doctest::Approx(c1 * m[1]));
    CHECK(Y(i, harmonic_index(1, 0)) == doctest::Approx(c1 * m[2]));
  }
}

TEST_CASE("analysis inverts synthesis") {
  std::mt19937_64 rng(11);
  SphereGrid g(12);
  for (int L : {3, 12}) {
    const auto a = testutil::random_coeffs(L, rng);
    const auto v = g.synthesize(a, L);
    CHECK(max_abs_diff(g.analyze(v, L), a) < 1e-13);
  }
}

TEST_CASE("R acting on linear functions") {
  SphereGrid g(8);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec3 u = testutil::random_unit(rng) * 1.7;
    const auto f = sample(g, [&](const Vec3& m) { return m.dot(u); });
    const auto r = rot_grad(g, f);
    for (int i = 0; i < g.size(); ++i) {
      const Vec3 expect = g.node(i).cross(u);
      for (int c = 0; c < 3; ++c) CHECK(std::abs(r[c][i] - expect[c]) < 1e-12);
    }
    // R.(m ^ u) = -2 m.u
    std::array<std::vector<double>, 3> v;
    for (int c = 0; c < 3; ++c) v[c] = sample(g, [&](const Vec3& m) { return m.cross(u)[c]; });
    const auto d = div_rot(g, v);
    for (int i = 0; i < g.size(); ++i) CHECK(std::abs(d[i] + 2 * g.node(i).dot(u)) < 1e-12);
  }
  for (int j = 0; j < 3; ++j) {
    const auto f = sample(g, [&](const Vec3& m) { return m[j]; });
    const auto r = rot_grad(g, f);
    for (int i = 0; i < 3; ++i)
      for (int n = 0; n < g.size(); ++n) {
        double expect = 0.0;
        for (int k = 0; k < 3; ++k) expect -= levi_civita(i, j, k) * g.node(n)[k];
        CHECK(std::abs(r[i][n] - expect) < 1e-12);
      }
  }
  const auto c = sample(g, [](const Vec3&) { return 2.5; });
  for (const auto& comp : rot_grad(g, c)) CHECK(max_abs(comp) < 1e-13);
}

TEST_CASE("R applied to quadratic forms") {
  SphereGrid g(8);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Mat3 B;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) B(a, b) = n(rng);
    B = 0.5 * (B + B.transpose()).eval();
    const auto f = sample(g, [&](const Vec3& m) { return m.dot(B * m); });
    const auto r = rot_grad(g, f);
    for (int i = 0; i < g.size(); ++i) {
      const Vec3 expect = 2.0 * g.node(i).cross(B * g.node(i));
      for (int c = 0; c < 3; ++c) CHECK(std::abs(r[c][i] - expect[c]) < 1e-10);
    }
  }
}

TEST_CASE("Laplace-Beltrami of second-degree monomials") {
  SphereGrid g(8);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const auto f = sample(g, [&](const Vec3& m) { return m[i] * m[j]; });
      const auto lf = laplace_beltrami(g, f);
      for (int n = 0; n < g.size(); ++n) {
        const Vec3& m = g.node(n);
        CHECK(std::abs(lf[n] + 6.0 * (m[i] * m[j] - (i == j) / 3.0)) < 1e-12);
      }
    }
  std::mt19937_64 rng(9);
  for (int l = 0; l <= 8; ++l) {
    std::vector<double> a(num_coeffs(8), 0.0);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int m = -l; m <= l; ++m) a[harmonic_index(l, m)] = u(rng);
    const auto f = g.synthesize(a, 8);
    const auto lf = laplace_beltrami(g, f);
    for (int n = 0; n < g.size(); ++n) CHECK(std::abs(lf[n] + l * (l + 1) * f[n]) < 1e-11);
  }
}

TEST_CASE("R identities on random band-limited fields") {
  SphereGrid g(8);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = g.synthesize(testutil::random_coeffs(8, rng), 8);
    const auto h = g.synthesize(testutil::random_coeffs(8, rng), 8);
    // div_rot(rot_grad f) = Laplace-Beltrami f
    const auto lf = laplace_beltrami(g, f);
    const auto dd = div_rot(g, rot_grad(g, f));
    CHECK(max_abs_diff(lf, dd) < 1e-10);
    // Integration by parts, componentwise.
    const auto rf = rot_grad(g, f);
    const auto rh = rot_grad(g, h);
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int n = 0; n < g.size(); ++n) s += g.weights()[n] * (rf[c][n] * h[n] + f[n] * rh[c][n]);
      CHECK(std::abs(s) < 1e-10);
    }
    // m . R f = 0 (R f is tangent).
    for (int n = 0; n < g.size(); ++n) {
      const Vec3& m = g.node(n);
      CHECK(std::abs(m[0] * rf[0][n] + m[1] * rf[1][n] + m[2] * rf[2][n]) < 1e-10);
    }
  }
}

TEST_CASE("R agrees with the tangential gradient computed by finite differences") {
  SphereGrid g(6);
  std::mt19937_64 rng(4);
  const auto a = testutil::random_coeffs(6, rng);
  const auto f = g.synthesize(a, 6);
  const auto rf = rot_grad(g, f);
  // Evaluate the band-limited field at an arbitrary point via a finer grid basis.
  auto eval = [&](const Vec3& p) {
    const Vec3 m = p.normalized();
    const double x = m[2];
    const double theta = std::acos(std::clamp(x, -1.0, 1.0));
    const double phi = std::atan2(m[1], m[0]);
    // Direct sum using the orthonormal recurrence.
    double v = 0.0;
    for (int l = 0; l <= 6; ++l)
      for (int mm = 0; mm <= l; ++mm) {
        double pmm = 1.0 / std::sqrt(4 * kPi);
        for (int k = 1; k <= mm; ++k) pmm *= std::sqrt((2.0 * k + 1) / (2.0 * k)) * std::sin(theta);
        double p0 = pmm, p1 = (mm + 1 <= l) ? std::sqrt(2.0 * mm + 3) * x * pmm : 0.0;
        double plm = (l == mm) ? p0 : p1;
        for (int ll = mm + 2; ll <= l; ++ll) {
          const double aa = std::sqrt((4.0 * ll * ll - 1) / (ll * ll - mm * mm));
          const double bb = std::sqrt(((ll - 1.0) * (ll - 1) - mm * mm) / (4.0 * (ll - 1) * (ll - 1) - 1));
          const double p2 = aa * (x * p1 - bb * p0);
          p0 = p1;
          p1 = p2;
          plm = p2;
        }
        if (mm == 0) {
          v += a[harmonic_index(l, 0)] * plm;
        } else {
          v += std::sqrt(2.0) * plm *
               (a[harmonic_index(l, mm)] * std::cos(mm * phi) + a[harmonic_index(l, -mm)] * std::sin(mm * phi));
        }
      }
    return v;
  };
  const double h = 1e-5;
  for (int n = 0; n < g.size(); n += 7) {
    const Vec3& m = g.node(n);
    Vec3 grad;
    for (int c = 0; c < 3; ++c) {
      Vec3 e = Vec3::Zero();
      e[c] = h;
      grad[c] = (eval(m + e) - eval(m - e)) / (2 * h);  // gradient of the 0-homogeneous extension
    }
    const Vec3 expect = m.cross(grad);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(rf[c][n] - expect[c]) < 1e-7);
  }
}

TEST_CASE("moments") {
  SphereGrid g(8);
  const auto uni = sample(g, [](const Vec3&) { return 1.0 / (4 * kPi); });
  CHECK(second_moment(g, uni).cwiseAbs().maxCoeff() < 1e-14);
  const S4Tensor t = fourth_moment(g, uni);
  const S4Tensor iso = isotropic_fourth_moment();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) CHECK(std::abs(t(i, j, k, l) - iso(i, j, k, l)) < 1e-14);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Positive density: squared band-limited field plus a floor, normalized.
    auto a = testutil::random_coeffs(3, rng);
    SphereGrid gq(8);
    auto f = gq.synthesize(a, 3);
    for (auto& x : f) x = x * x + 0.01 * u(rng);
    const double mass = gq.integrate(f);
    for (auto& x : f) x /= mass;
    const QTensor Q = second_moment(gq, f);
    CHECK(std::abs(Q.trace()) < 1e-12);
    CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat3> es(Q);
    CHECK(es.eigenvalues().minCoeff() > -1.0 / 3.0);
    CHECK(es.eigenvalues().maxCoeff() < 2.0 / 3.0);
    const S4Tensor f4 = fourth_moment(gq, f);
    const Mat3 m2 = raw_second_moment(gq, f);
    CHECK((f4.trace_pair() - m2).cwiseAbs().maxCoeff() < 1e-13);
    // Full permutation symmetry is structural; spot check the accessor.
    CHECK(f4(0, 1, 2, 2) == f4(2, 1, 2, 0));
  }
}

TEST_CASE("point evaluation of harmonics matches the grid basis") {
  SphereGrid g(9);
  const auto Y = g.basis_matrix(9);
  for (int i = 0; i < g.size(); i += 3) {
    auto y = real_harmonics(9, g.node(i));
    for (int a = 0; a < num_coeffs(9); ++a) CHECK(std::abs(y[a] - Y(i, a)) < 1e-13);
  }
  // Addition theorem: sum over m of Y_lm(u) Y_lm(v) = (2l+1)/(4 pi) P_l(u.v).
  std::mt19937_64 rng(21);
  Vec3 u = testutil::random_unit(rng), v = testutil::random_unit(rng);
  auto yu = real_harmonics(6, u), yv = real_harmonics(6, v);
  const double c = u.dot(v);
  double p0 = 1.0, p1 = c;
  for (int l = 0; l <= 6; ++l) {
    double pl = l == 0 ? 1.0 : p1;
    if (l >= 2) {
      pl = ((2.0 * l - 1) * c * p1 - (l - 1.0) * p0) / l;
      p0 = p1;
      p1 = pl;
    }
    double sum = 0.0;
    for (int m = -l; m <= l; ++m) sum += yu[harmonic_index(l, m)] * yv[harmonic_index(l, m)];
    CHECK(sum == doctest::Approx((2 * l + 1) / (4 * kPi) * pl).epsilon(1e-12));
  }
}
