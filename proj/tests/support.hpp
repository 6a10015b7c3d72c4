#pragma once

#include <cmath>
#include <vector>

#include "fragility/models.hpp"
#include "fragility/rng.hpp"

namespace testing {

// Cumulative probit estimates used as the generating law in recovery tests.
inline fragility::ParamSet reference_params() {
  fragility::ParamSet p;
  p.tau = {-1.617, -1.000, -0.082, 0.623};
  p.beta = {1.549};
  return p;
}

inline fragility::ModelSpec cum_probit(int K = 5) {
  fragility::ModelSpec s;
  s.categories = K;
  return s;
}

// Standard normal CDF from the Maclaurin series of erf in long double, or
// the continued fraction of erfc in the tails. Independent of the library.
inline double phi_oracle(double z) {
  const long double x = static_cast<long double>(z) / std::sqrt(2.0L);
  if (std::fabs(z) < 5.0) {
    long double term = x, sum = x;
    for (int n = 1; n < 200; ++n) {
      term *= -x * x / n;
      const long double add = term / (2 * n + 1);
      sum += add;
      if (std::fabs(add) < 1e-24L) break;
    }
    const long double erf = 2.0L / std::sqrt(3.14159265358979323846264338327950288L) * sum;
    return static_cast<double>(0.5L * (1.0L + erf));
  }
  // Lentz continued fraction for erfc(|x|).
  const long double a = std::fabs(x);
  long double f = 0.0L;
  for (int n = 60; n >= 1; --n) f = (n / 2.0L) / (a + f);
  const long double erfc = std::exp(-a * a) / std::sqrt(3.14159265358979323846264338327950288L) / (a + f);
  return static_cast<double>(z > 0 ? 1.0L - 0.5L * erfc : 0.5L * erfc);
}

// Random valid parameters for `spec`: ordered thresholds, moderate slopes.
inline fragility::ParamSet random_params(const fragility::ModelSpec& spec, fragility::Rng& rng) {
  const auto k1 = static_cast<std::size_t>(spec.categories - 1);
  fragility::ParamSet p;
  p.tau.resize(k1);
  if (spec.family == fragility::Family::mlogit) {
    for (auto& t : p.tau) t = rng.normal(0.0, 2.0);
  } else {
    double t = rng.normal(-1.5, 1.0);
    for (auto& v : p.tau) {
      v = t;
      t += 0.05 + 1.5 * rng.uniform();
    }
  }
  const bool many = spec.cs || spec.family == fragility::Family::mlogit;
  p.beta.assign(many ? k1 : 1, 0.0);
  for (auto& b : p.beta) b = rng.normal(1.0, 1.0);
  if (spec.vh) p.gamma = rng.normal(0.0, 0.3);
  return p;
}

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s;
}

}  // namespace testing
