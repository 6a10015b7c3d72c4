#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fragility/data.hpp"
#include "fragility/mle.hpp"
#include "fragility/models.hpp"

namespace fragility {

struct NormalPrior {
  double mean = 0.0;
  double sd = 10.0;
};

// Independent normal priors on the natural-scale thresholds, slopes and
// scale slope. Mlogit intercepts use `tau`, its slopes `beta`.
struct Prior {
  NormalPrior tau;
  NormalPrior beta;
  NormalPrior gamma;

  void validate() const;
  double log_density(const ModelSpec& spec, const ParamSet& params) const;
};

struct McmcOptions {
  int chains = 4;
  int warmup = 1000;
  int iters = 1000;   // kept draws per chain
  int thin = 1;       // iterations per kept draw after warmup
  std::uint64_t seed = 1;
  double target_accept = 0.3;
  bool prior_only = false;       // drop the likelihood (prior recovery checks)
  bool store_pointwise = true;   // keep the draws x n log-likelihood matrix
  bool parallel = true;          // one thread per chain
};

struct PosteriorDraws {
  ModelSpec spec;
  int chains = 0;
  int iters = 0;
  std::size_t n_params = 0;
  std::size_t n_obs = 0;
  std::uint64_t seed = 0;
  std::uint64_t data_digest = 0;
  std::vector<std::string> names;
  std::vector<double> params;            // [chain][iter][param], natural scale
  std::vector<double> unconstrained;     // same layout, sampler coordinates
  std::vector<double> pointwise_loglik;  // [chain][iter][obs], empty when not stored
  std::vector<double> acceptance;        // post-warmup acceptance rate per chain
  std::vector<Warning> warnings;

  std::size_t draws() const { return static_cast<std::size_t>(chains) * static_cast<std::size_t>(iters); }
  // Draw index s runs over chains then iterations.
  std::span<const double> draw(std::size_t s) const;
  std::span<const double> unconstrained_draw(std::size_t s) const;
  std::span<const double> pointwise(std::size_t s) const;
  ParamSet param_set(std::size_t s) const;
  // Chain-major series of one parameter: chains x iters values.
  std::vector<double> series(std::size_t param) const;
  std::vector<double> posterior_mean() const;
};

// Adaptive random-walk Metropolis on the unconstrained coordinates. Chains
// start near the posterior mode; proposal covariance and scale adapt during
// warmup and are frozen afterwards.
PosteriorDraws sample_posterior(const ModelSpec& spec, const Dataset& ds, const Prior& prior = {},
                                const McmcOptions& opts = {});

struct ConvergenceStat {
  std::string name;
  double rhat = 1.0;
  double ess = 0.0;
  bool degenerate = false;  // zero within-chain variance; rhat/ess are sentinels
};

// Split-chain Rhat and autocorrelation-based ESS per parameter.
std::vector<ConvergenceStat> convergence_stats(const PosteriorDraws& draws);
// Same statistics for one parameter stored chain-major (chains x iters).
ConvergenceStat convergence_stat(std::span<const double> values, int chains, int iters);

enum class BandQuantity { exceedance, category };

struct BandRow {
  double im = 0.0;
  int k = 0;
  BandQuantity quantity = BandQuantity::exceedance;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Pointwise posterior quantiles of P(DS > k) and P(DS = k) over the grid.
std::vector<BandRow> fragility_bands(const PosteriorDraws& draws, const ModelSpec& spec,
                                     std::span<const double> im_grid, double level = 0.95);

}  // namespace fragility
