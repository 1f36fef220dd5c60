#pragma once

#include <random>
#include <vector>

#include "doilab/sphere.hpp"

namespace testutil {

// Coefficients of a random real field of degree <= L with entries in [-1, 1].
inline std::vector<double> random_coeffs(int L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(doilab::num_coeffs(L));
  for (auto& x : a) x = u(rng);
  return a;
}

inline doilab::Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  doilab::Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace testutil
