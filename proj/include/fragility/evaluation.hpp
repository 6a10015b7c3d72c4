#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fragility/bayes.hpp"

namespace fragility {

// draws x n matrix of ln p(y_i | params_s), row-major.
struct PointwiseLogLik {
  std::size_t draws = 0;
  std::size_t n = 0;
  std::vector<double> values;
  std::size_t floored = 0;

  double at(std::size_t s, std::size_t i) const { return values[s * n + i]; }
  std::vector<double> column(std::size_t i) const;
};

PointwiseLogLik pointwise_loglik(const PosteriorDraws& draws, const ModelSpec& spec, const Dataset& ds);

// Wraps an existing row-major matrix.
PointwiseLogLik make_pointwise(std::size_t draws, std::size_t n, std::vector<double> values);

struct WaicDic {
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
  double elpd_waic = 0.0;
  double se_waic = 0.0;  // standard error of elpd_waic
  double dic = 0.0;
  double p_dic = 0.0;
  double mean_deviance = 0.0;
  double deviance_at_mean = 0.0;
};

// DIC plugs in the posterior mean of the unconstrained draws.
WaicDic waic_dic(const PointwiseLogLik& pll, const PosteriorDraws& draws, const Dataset& ds);

// WAIC terms only; DIC fields are left at zero.
WaicDic waic(const PointwiseLogLik& pll);

// k-hat for observations whose importance ratios are all equal.
inline constexpr double kParetoKConstant = -std::numeric_limits<double>::infinity();
inline constexpr double kParetoKWarn = 0.7;
inline constexpr double kParetoKBad = 1.0;

struct ParetoKSummary {
  std::size_t good = 0;  // k <= 0.7 (constant-ratio sentinel included)
  std::size_t warn = 0;  // 0.7 < k <= 1
  std::size_t bad = 0;   // k > 1
  double max = kParetoKConstant;
};

struct PsisLoo {
  double elpd_loo = 0.0;
  double se_elpd = 0.0;
  double p_loo = 0.0;
  double lppd = 0.0;
  std::vector<double> pointwise;
  std::vector<double> pareto_k;
  ParetoKSummary k_summary;
  std::vector<Warning> warnings;
};

struct GpdFit {
  double k = 0.0;
  double sigma = 0.0;
};

// Generalized Pareto fit to exceedances (ascending, nonnegative) by the
// profile-likelihood posterior mean of Zhang & Stephens, with a weakly
// informative shrinkage of k towards 0.5.
GpdFit gpd_fit(std::span<const double> sorted_exceedances);
double gpd_quantile(double p, double k, double sigma);

// Pareto-smoothed importance weights (log scale, unnormalised) for one
// observation's log ratios; returns k-hat.
double psis_smooth(std::vector<double>& log_weights);

PsisLoo psis_loo(const PointwiseLogLik& pll);

struct ExactLoo {
  double elpd_exact = 0.0;
  std::vector<double> pointwise;
};

inline constexpr std::size_t kExactLooMaxN = 200;

// Refits the posterior n times, each time without one observation. Test
// oracle only; n is capped at 200.
ExactLoo exact_loo_oracle(const ModelSpec& spec, const Dataset& ds, const Prior& prior, const McmcOptions& mcmc);

struct ModelElpd {
  std::string name;
  std::size_t n_params = 0;
  std::vector<double> pointwise_elpd;
  std::vector<double> pareto_k;  // optional
};

struct ComparisonRow {
  std::string model;
  std::size_t n_params = 0;
  double elpd_loo = 0.0;
  double se_elpd = 0.0;
  double elpd_diff = 0.0;
  double se_diff = 0.0;
  int rank = 0;
  bool significant = false;  // |diff| > 4 and |diff| > 2 se_diff
  ParetoKSummary pareto_k;
};

// Rows sorted by rank (best first); ties keep input order.
std::vector<ComparisonRow> compare_models(std::span<const ModelElpd> models);

ParetoKSummary summarize_pareto_k(std::span<const double> k);

}  // namespace fragility
