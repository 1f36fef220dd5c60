#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "doilab/errors.hpp"
#include "doilab/kernel_ops.hpp"
#include "test_util.hpp"

using namespace doilab;

namespace {

constexpr double kPi = std::numbers::pi;

double l2_norm(const TorusGrid& g, const std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return std::sqrt(s * g.cell_volume());
}

// Smooth random trigonometric field with a few low modes, and its gradient.
struct SmoothField {
  std::vector<double> u;
  std::vector<std::vector<double>> grad;
};

SmoothField smooth_field(const TorusGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  SmoothField out{std::vector<double>(g.size(), 0.0),
                  std::vector<std::vector<double>>(g.dim(), std::vector<double>(g.size(), 0.0))};
  for (int k0 = 0; k0 <= 2; ++k0) {
    for (int k1 = (g.dim() == 2 ? -2 : 0); k1 <= (g.dim() == 2 ? 2 : 0); ++k1) {
      const double c = amp(rng), s = amp(rng);
      const double w0 = 2 * kPi * k0 / g.length(), w1 = 2 * kPi * k1 / g.length();
      for (int i = 0; i < g.size(); ++i) {
        const auto x = g.position(i);
        const double ph = w0 * x[0] + w1 * x[1];
        out.u[i] += c * std::cos(ph) + s * std::sin(ph);
        const double dph = -c * std::sin(ph) + s * std::cos(ph);
        out.grad[0][i] += w0 * dph;
        if (g.dim() == 2) out.grad[1][i] += w1 * dph;
      }
    }
  }
  return out;
}

std::vector<double> random_field(const TorusGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> u(g.size());
  for (auto& x : u) x = n(rng);
  return u;
}

// Random field with no energy in the upper half of the spectrum, so products
// with a low-mode multiplier do not alias across the Nyquist frequency.
std::vector<double> random_band_limited(const TorusGrid& g, std::mt19937_64& rng) {
  auto uh = fft_forward(g, random_field(g, rng));
  for (int i = 0; i < g.size(); ++i)
    if (std::abs(g.wavenumber(i)) > g.n() / 4) uh[i] = 0.0;
  auto back = fft_backward(g, uh);
  std::vector<double> u(g.size());
  for (int i = 0; i < g.size(); ++i) u[i] = back[i].real();
  return u;
}

QTensorField random_q(const TorusGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  QTensorField Q(g);
  for (auto& q : Q.q) {
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) q(i, j) = q(j, i) = u(rng);
    q -= q.trace() / 3.0 * Mat3::Identity();
  }
  return Q;
}

}  // namespace

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0, 1), ConfigError);
  CHECK_THROWS_AS(KernelSpec::gaussian(4.0, 1), ConfigError);
  CHECK_THROWS_AS(KernelSpec::gaussian(1.0, 3), ConfigError);
  auto s = KernelSpec::gaussian(1.3, 2);
  CHECK(s.mu == doctest::Approx(2 / 2.6));
  CHECK(s.c0 == doctest::Approx(kPi * kPi / 1.3 * 0.99));
}

TEST_CASE("kernel transform at the origin") {
  for (int d : {1, 2}) {
    auto s = KernelSpec::gaussian(1.0, d);
    std::vector<double> zero(d, 0.0);
    CHECK(khat(s, zero) == 1.0);
    const double h = 1e-4;
    double trace = 0.0;
    for (int k = 0; k < d; ++k) {
      std::vector<double> p(d, 0.0), m(d, 0.0);
      p[k] = h;
      m[k] = -h;
      CHECK(std::abs(khat(s, p) - khat(s, m)) / (2 * h) < 1e-10);
      trace += (khat(s, p) - 2.0 + khat(s, m)) / (h * h);
    }
    CHECK(trace == doctest::Approx(-4 * kPi * kPi * s.mu).epsilon(1e-6));
  }
}

TEST_CASE("kernel matches the real-space Gaussian") {
  // Quadrature of (a/pi)^{1/2} e^{-a x^2} cos(2 pi xi x) on a wide window.
  auto s = KernelSpec::gaussian(0.7, 1);
  for (double xi : {0.0, 0.1, 0.35}) {
    const int n = 20000;
    const double L = 12.0, dx = 2 * L / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = -L + (i + 0.5) * dx;
      sum += std::sqrt(s.a / kPi) * std::exp(-s.a * x * x) * std::cos(2 * kPi * xi * x) * dx;
    }
    CHECK(khat(s, xi * xi) == doctest::Approx(sum).epsilon(1e-10));
  }
}

TEST_CASE("h multiplier") {
  auto s = KernelSpec::gaussian(1.0, 2);
  std::vector<double> zero{0.0, 0.0};
  CHECK(h_multiplier(s, zero) == std::vector<double>{0.0, 0.0});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> xi{u(rng), u(rng)};
    auto h = h_multiplier(s, xi);
    CHECK(std::abs(h[0] * h[0] + h[1] * h[1] - (1 - khat(s, xi))) < 1e-12);
  }
  // Difference quotients over pairs at shrinking separation stay bounded and settle.
  std::vector<double> lip;
  for (double sep : {1e-1, 1e-2, 1e-3}) {
    double best = 0.0;
    std::mt19937_64 r2(2);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < 10000; ++t) {
      std::vector<double> a{u(r2), u(r2)};
      std::vector<double> b{a[0] + sep * nd(r2), a[1] + sep * nd(r2)};
      auto ha = h_multiplier(s, a), hb = h_multiplier(s, b);
      const double num = std::hypot(ha[0] - hb[0], ha[1] - hb[1]);
      const double den = std::hypot(a[0] - b[0], a[1] - b[1]);
      best = std::max(best, num / den);
    }
    CHECK(std::isfinite(best));
    lip.push_back(best);
  }
  CHECK(lip[2] == doctest::Approx(lip[1]).epsilon(0.1));
  CHECK(lip[2] < 2.0 * kPi);
}

TEST_CASE("torus grid") {
  CHECK_THROWS_AS(TorusGrid(1, 1.0, 12), ConfigError);
  CHECK_THROWS_AS(TorusGrid(3, 1.0, 8), ConfigError);
  TorusGrid g(2, 5.0, 16);
  CHECK(g.size() == 256);
  CHECK(g.cell_volume() == doctest::Approx(25.0 / 256));
  CHECK(g.wavenumber(8) == -8);
  CHECK(g.shift(g.shift(17, 1, 1), 1, -1) == 17);
  CHECK(g.shift(15, 1, 1) == 0);
  std::mt19937_64 rng(3);
  std::vector<Complex> z(g.size());
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& c : z) c = {n(rng), n(rng)};
  auto back = fft_backward(g, fft_forward(g, z));
  double err = 0.0;
  for (int i = 0; i < g.size(); ++i) err = std::max(err, std::abs(back[i] - z[i]));
  CHECK(err < 1e-13);
}

TEST_CASE("mollifier") {
  auto s = KernelSpec::gaussian(1.0, 2);
  TorusGrid g(2, 8.0, 32);
  std::vector<double> c(g.size(), 0.7);
  CHECK(testutil::max_abs_diff(convolve_keps(g, s, c, 0.1), c) < 1e-14);
  // A single mode is scaled by exp(-pi^2 eps |xi|^2 / a).
  const int k0 = 3, k1 = -2;
  std::vector<double> mode(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    mode[i] = std::cos(2 * kPi * (k0 * x[0] + k1 * x[1]) / g.length());
  }
  const double eps = 0.3;
  const double factor = std::exp(-kPi * kPi * eps * (k0 * k0 + k1 * k1) / (g.length() * g.length()) / s.a);
  auto out = convolve_keps(g, s, mode, eps);
  for (int i = 0; i < g.size(); ++i) CHECK(std::abs(out[i] - factor * mode[i]) < 1e-13);
  // Contraction and convergence as eps decreases.
  std::mt19937_64 rng(4);
  auto u = random_field(g, rng);
  auto f = smooth_field(g, rng).u;
  double prev = 1e300;
  for (double e : {0.1, 0.01, 0.001}) {
    CHECK(l2_norm(g, convolve_keps(g, s, u, e)) <= l2_norm(g, u));
    auto fe = convolve_keps(g, s, f, e);
    for (int i = 0; i < g.size(); ++i) fe[i] -= f[i];
    const double err = l2_norm(g, fe);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("L_eps against the real-space periodized kernel") {
  // L_eps u(x) = (u(x) - sum_y k_eps^per(x - y) u(y) h) / eps, with the kernel
  // summed over periodic images.
  auto s = KernelSpec::gaussian(1.0, 1);
  TorusGrid g(1, 4.0, 64);
  const double eps = 0.1;
  std::mt19937_64 rng(5);
  auto u = random_field(g, rng);
  auto L = apply_L_eps(g, s, u, eps);
  auto kernel = [&](double x) {
    double sum = 0.0;
    for (int img = -5; img <= 5; ++img) {
      const double y = x + img * g.length();
      sum += std::sqrt(s.a / (kPi * eps)) * std::exp(-s.a * y * y / eps);
    }
    return sum;
  };
  for (int i = 0; i < g.size(); i += 5) {
    double conv = 0.0;
    for (int j = 0; j < g.size(); ++j) conv += kernel((i - j) * g.spacing()) * u[j] * g.spacing();
    CHECK(L[i] == doctest::Approx((u[i] - conv) / eps).epsilon(1e-10));
  }
}

TEST_CASE("L_eps and T_eps") {
  auto s = KernelSpec::gaussian(1.0, 2);
  TorusGrid g(2, 6.0, 16);
  std::vector<double> c(g.size(), 1.3);
  CHECK(testutil::max_abs(apply_L_eps(g, s, c, 0.1)) < 1e-14);
  for (const auto& comp : apply_T_eps(g, s, c, 0.1))
    for (auto z : comp) CHECK(std::abs(z) < 1e-14);

  SUBCASE("mode-wise square root") {
    for (double eps : {0.5, 0.05, 1e-3}) {
      auto L = l_eps_table(g, s, eps);
      for (int m = 0; m < g.size(); ++m) {
        const auto xi = g.frequency(m);
        const double scaled[2] = {std::sqrt(eps) * xi[0], std::sqrt(eps) * xi[1]};
        auto h = h_multiplier(s, scaled);
        const double tt = (h[0] * h[0] + h[1] * h[1]) / eps;
        CHECK(std::abs(tt - L[m]) <= 1e-12 * std::max(1.0, L[m]));
      }
    }
  }
  SUBCASE("Plancherel") {
    std::mt19937_64 rng(6);
    auto u = random_field(g, rng);
    const double eps = 0.05;
    auto T = apply_T_eps(g, s, u, eps);
    auto L = apply_L_eps(g, s, u, eps);
    double lhs = 0.0, rhs = 0.0;
    for (const auto& comp : T)
      for (auto z : comp) lhs += std::norm(z);
    for (int i = 0; i < g.size(); ++i) rhs += u[i] * L[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
  SUBCASE("small-eps eigenvalue") {
    const double eps = 1e-4;
    auto L = l_eps_table(g, s, eps);
    for (int m = 1; m < 20; ++m) {
      const double target = 2 * kPi * kPi * s.mu * g.frequency_sq(m) / s.d;
      CHECK(L[m] == doctest::Approx(target).epsilon(0.01));
    }
  }
}

TEST_CASE("T_eps approaches a multiple of the gradient") {
  for (int d : {1, 2}) {
    auto s = KernelSpec::gaussian(1.0, d);
    TorusGrid g(d, 6.0, d == 1 ? 64 : 32);
    std::mt19937_64 rng(7 + d);
    const Complex coef(0.0, -std::sqrt(s.mu / (2.0 * d)));
    for (int trial = 0; trial < 5; ++trial) {
      auto f = smooth_field(g, rng);
      double prev = 1e300;
      for (double eps : {1e-1, 1e-2, 1e-3}) {
        auto T = apply_T_eps(g, s, f.u, eps);
        double err = 0.0;
        for (int k = 0; k < d; ++k)
          for (int i = 0; i < g.size(); ++i) err += std::norm(T[k][i] - coef * f.grad[k][i]);
        err = std::sqrt(err * g.cell_volume());
        CHECK(err < prev);
        prev = err;
      }
      CHECK(prev < 1e-2);
    }
  }
}

TEST_CASE("commutator of T_eps with a smooth multiplier") {
  auto s = KernelSpec::gaussian(1.0, 1);
  TorusGrid g(1, 6.0, 128);
  std::vector<double> phi(g.size());
  for (int i = 0; i < g.size(); ++i) phi[i] = 1.0 + 0.5 * std::sin(2 * kPi * g.position(i)[0] / g.length());
  std::vector<double> constants;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    std::mt19937_64 rng(8);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      auto u = random_band_limited(g, rng);
      std::vector<double> pu(g.size());
      for (int i = 0; i < g.size(); ++i) pu[i] = phi[i] * u[i];
      auto a = apply_T_eps(g, s, pu, eps)[0];
      auto b = apply_T_eps(g, s, u, eps)[0];
      double num = 0.0;
      for (int i = 0; i < g.size(); ++i) num += std::norm(a[i] - phi[i] * b[i]);
      worst = std::max(worst, std::sqrt(num * g.cell_volume()) / l2_norm(g, u));
    }
    constants.push_back(worst);
  }
  // The symbol h(sqrt(eps) xi)/sqrt(eps) is pi-Lipschitz in xi for every eps,
  // and phi - 1 has two modes of size 1/4 at |xi| = 1/X.
  const double bound = 2 * 0.25 * kPi / g.length();
  for (double c : constants) CHECK(c <= bound);
  CHECK(constants[2] < 2.0 * constants[1]);
}

TEST_CASE("structural inequalities of the kernel") {
  auto s = KernelSpec::gaussian(1.0, 2);
  TorusGrid g(2, 20.0, 64);
  for (double eps : {1.0, 0.1, 0.01}) {
    const double c = certify_c0(g, s, eps);
    CHECK(c >= s.c0);
    for (int m = 0; m < g.size(); ++m) {
      const double r2 = eps * g.frequency_sq(m);
      const double k = khat(s, r2);
      CHECK(k > 0.0);
      CHECK(k <= 1.0);
      CHECK(s.c0 * r2 * k * k <= 1 - k + 1e-15);
      CHECK(1 - k <= 2.0);
      CHECK(4 * kPi * kPi * r2 * k * k <= (1 - k) * 4 * kPi * kPi / s.c0 + 1e-12);
    }
  }
  // Tail mass outside |x| >= delta/sqrt(eps), divided by eps, in closed form.
  const double delta = 0.25;
  for (int d : {1, 2}) {
    auto sd = KernelSpec::gaussian(1.0, d);
    double prev = 0.0;
    bool first = true;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      const double r = delta / std::sqrt(eps);
      const double tail = d == 1 ? std::erfc(std::sqrt(sd.a) * r) : std::exp(-sd.a * r * r);
      const double value = tail / eps;
      if (!first) CHECK(value * 10.0 <= prev);
      prev = value;
      first = false;
    }
  }
}

TEST_CASE("doubled energy form") {
  auto s = KernelSpec::gaussian(1.0, 1);
  TorusGrid g(1, 4.0, 64);
  const double eps = 0.1, alpha = 8.0;
  QTensorField C(g);
  for (auto& q : C.q) q = Vec3(0.3, -0.1, -0.2).asDiagonal();
  CHECK(std::abs(doubled_energy_form(C, s, eps, alpha)) < 1e-14);

  std::mt19937_64 rng(9);
  auto Q = random_q(g, rng);
  CHECK(max_trace(Q) < 1e-15);
  CHECK(entries_bounded(Q));
  const double spectral = doubled_energy_form(Q, s, eps, alpha);
  CHECK(spectral > 0.0);
  // Real-space double sum with the periodized kernel.
  auto kernel = [&](double x) {
    double sum = 0.0;
    for (int img = -5; img <= 5; ++img) {
      const double y = x + img * g.length();
      sum += std::sqrt(s.a / (kPi * eps)) * std::exp(-s.a * y * y / eps);
    }
    return sum;
  };
  double direct = 0.0;
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j)
      direct += (Q.q[i] - Q.q[j]).squaredNorm() * kernel((i - j) * g.spacing());
  direct *= alpha / 4.0 * g.spacing() * g.spacing();
  CHECK(spectral == doctest::Approx(direct).epsilon(1e-10));
  // Same value through |T_eps Q|^2.
  double tsum = 0.0;
  std::vector<double> comp(g.size());
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      for (int i = 0; i < g.size(); ++i) comp[i] = Q.q[i](a, b);
      const auto T = apply_T_eps(g, s, comp, eps);
      for (auto z : T[0]) tsum += std::norm(z);
    }
  CHECK(spectral == doctest::Approx(alpha * eps / 2 * tsum * g.cell_volume()).epsilon(1e-10));
}
