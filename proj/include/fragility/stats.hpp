#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fragility {

double mean(std::span<const double> v);
// Sample variance with divisor n - 1 (0 for n < 2).
double variance(std::span<const double> v);

// Type-7 (linear interpolation) quantile; `v` need not be sorted.
double quantile(std::span<const double> v, double p);
double quantile_sorted(std::span<const double> sorted, double p);

struct OlsResult {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double resid_sd = 0.0;  // divisor n - 2
  double t_value = 0.0;
  double p_value = 1.0;   // two-sided, Student t with n - 2 df
  std::size_t n = 0;
};

// Simple linear regression y = a + b x. Throws InvalidArgument when x has no
// spread or n < 3.
OlsResult ols(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);

// Kolmogorov limiting distribution survival function Q(lambda).
double kolmogorov_q(double lambda);

double student_t_two_sided_p(double t, double df);

double log_sum_exp(std::span<const double> v);

}  // namespace fragility
