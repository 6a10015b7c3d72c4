#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fragility/data.hpp"

namespace fragility {

// Probabilistic seismic demand model ln D = ln a0 + a1 ln IM + beta_d * eps.
struct Psdm {
  double ln_a0 = 0.0;
  double a1 = 1.0;
  double beta_d = 0.0;

  void validate() const;
};

struct LimitState {
  double ln_sc = 0.0;   // median log-capacity
  double beta_c = 0.0;  // log-standard deviation
};

// K - 1 lognormal limit states with strictly increasing medians.
struct CapacityModel {
  std::vector<LimitState> states;

  void validate() const;
  int categories() const { return static_cast<int>(states.size()) + 1; }
};

struct DemandSample {
  double im = 0.0;
  double demand = 0.0;
};

// Least squares of ln(demand) on ln(im); beta_d uses divisor n - 2.
Psdm fit_psdm(std::span<const DemandSample> samples);

/// P(DS > k | im) = Phi((ln im - (ln_sc_k - ln_a0)/a1) / (sqrt(beta_d^2 + beta_c_k^2)/a1)).
double closed_form_fragility(const Psdm& psdm, const CapacityModel& cap, double im, int k);

struct SamplingOptions {
  double correlation = 0.8;     // equicorrelation of the log-capacities
  std::size_t probe = 2000;     // capacity draws used to estimate acceptance
  double min_acceptance = 1e-3;
};

/// One damage state per im: demand from the PSDM, an ordered capacity vector
/// from an equicorrelated Gaussian copula redrawn until ordered, and
/// DS = 1 + #{limit states with capacity below demand}.
Dataset sample_damage_states(const Psdm& psdm, const CapacityModel& cap, std::span<const double> ims,
                             std::uint64_t seed, const SamplingOptions& opts = {});

// Acceptance rate of the ordered-capacity rejection step, estimated from
// `draws` proposals.
double capacity_acceptance_rate(const CapacityModel& cap, double correlation, std::size_t draws, std::uint64_t seed);

}  // namespace fragility
