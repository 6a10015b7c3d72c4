#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fragility/data.hpp"
#include "fragility/mle.hpp"

namespace fragility {

struct SurrogateResiduals {
  std::vector<double> r;
  int replicate = 0;
  std::uint64_t seed = 0;
  ModelSpec spec;
};

/// Surrogate residuals for a cumulative probit/logit fit: for an observation
/// in category k draw S from the latent law centred at beta*x truncated to
/// (tau_{k-1}, tau_k] and return S - beta*x. Variance-heterogeneous fits are
/// standardised by exp(gamma*x). One entry per replicate, each with its own
/// stream derived from (seed, replicate).
std::vector<SurrogateResiduals> surrogate_residuals(const MleFit& fit, const Dataset& ds, std::uint64_t seed,
                                                    int replicates = 1);

struct QqPoint {
  double theoretical = 0.0;
  double sample = 0.0;
};

// Sorted residuals against link quantiles at (i - 0.5)/n.
std::vector<QqPoint> qq_reference(const SurrogateResiduals& res, Link link);

struct TrendBin {
  double center = 0.0;  // mean ln(im) of the bin
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

// Equal-count bins over ln(im) with per-bin residual mean and sd.
std::vector<TrendBin> covariate_trend(const SurrogateResiduals& res, const Dataset& ds, int bins = 10);

struct ParallelSplit {
  std::vector<int> low{1, 2, 3};
  std::vector<int> high{3, 4, 5};
};

struct ParallelCheck {
  std::vector<double> ln_im;
  std::vector<double> d;
  double beta_low = 0.0;
  double beta_high = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
  double var_d = 0.0;
  // Standard errors of the two subset slopes (0 when slopes are given), and
  // the slope se widened by them. The OLS se treats the slopes as known.
  double beta_low_se = 0.0;
  double beta_high_se = 0.0;
  double slope_se_adjusted = 0.0;
};

/// D = S2 - S1 with S_j ~ N(-beta_j x, 1) drawn per observation from the two
/// slopes; `noise = false` returns the expectation (beta_1 - beta_2) x.
ParallelCheck parallel_check_from_slopes(double beta_low, double beta_high, std::span<const double> ln_im,
                                         std::uint64_t seed, bool noise = true);

// Fits cumulative probit models to the data collapsed onto the low and high
// category ranges (states outside a range merge into its boundary state) and
// regresses D on ln(im).
ParallelCheck parallel_check(const Dataset& ds, const ParallelSplit& split, std::uint64_t seed,
                             bool noise = true);

}  // namespace fragility
