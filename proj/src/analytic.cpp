#include "fragility/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fragility/error.hpp"
#include "fragility/links.hpp"
#include "fragility/rng.hpp"
#include "fragility/stats.hpp"

namespace fragility {

namespace {

// One capacity proposal: ln C_k = ln_sc_k + beta_c_k (sqrt(rho) z0 + sqrt(1 - rho) z_k).
bool draw_capacities(const CapacityModel& cap, double rho, Rng& rng, std::vector<double>& out) {
  const double common = rng.normal();
  const double a = std::sqrt(rho), b = std::sqrt(1.0 - rho);
  out.resize(cap.states.size());
  for (std::size_t k = 0; k < cap.states.size(); ++k) {
    const double z = a * common + b * rng.normal();
    out[k] = cap.states[k].ln_sc + cap.states[k].beta_c * z;
  }
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (!(out[k] > out[k - 1])) return false;
  }
  return true;
}

}  // namespace

void Psdm::validate() const {
  if (!std::isfinite(ln_a0) || !std::isfinite(a1)) throw InvalidArgument("PSDM coefficients must be finite");
  if (!(beta_d >= 0.0) || !std::isfinite(beta_d)) throw InvalidArgument("PSDM beta_d must be finite and >= 0");
}

void CapacityModel::validate() const {
  if (states.empty()) throw InvalidArgument("capacity model needs at least one limit state");
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!std::isfinite(states[k].ln_sc)) throw InvalidArgument("capacity medians must be finite");
    if (!(states[k].beta_c >= 0.0) || !std::isfinite(states[k].beta_c)) {
      throw InvalidArgument("capacity beta_c must be finite and >= 0");
    }
    if (k > 0 && !(states[k].ln_sc > states[k - 1].ln_sc)) {
      throw InvalidArgument("capacity medians must be strictly increasing across limit states");
    }
  }
}

Psdm fit_psdm(std::span<const DemandSample> samples) {
  if (samples.size() < 3) throw InvalidArgument("fit_psdm needs at least 3 samples");
  std::vector<double> x, y;
  for (const auto& s : samples) {
    if (!(s.im > 0.0) || !(s.demand > 0.0)) throw InvalidArgument("im and demand must be positive");
    x.push_back(std::log(s.im));
    y.push_back(std::log(s.demand));
  }
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) {
    throw InvalidArgument("fit_psdm needs at least 2 distinct im values");
  }
  const auto r = ols(x, y);
  Psdm p;
  p.ln_a0 = r.intercept;
  p.a1 = r.slope;
  p.beta_d = r.resid_sd;
  return p;
}

double closed_form_fragility(const Psdm& psdm, const CapacityModel& cap, double im, int k) {
  psdm.validate();
  cap.validate();
  if (!(psdm.a1 > 0.0)) throw InvalidArgument("a1 must be > 0 (fragility must increase with im)");
  if (!(im > 0.0)) throw InvalidArgument("im must be positive");
  if (k < 1 || k > static_cast<int>(cap.states.size())) throw InvalidArgument("limit state index out of range");
  const auto& s = cap.states[static_cast<std::size_t>(k - 1)];
  const double median = (s.ln_sc - psdm.ln_a0) / psdm.a1;
  const double disp = std::hypot(psdm.beta_d, s.beta_c) / psdm.a1;
  const double z = std::log(im) - median;
  if (disp == 0.0) return z > 0.0 ? 1.0 : (z < 0.0 ? 0.0 : 0.5);
  return norm_cdf(z / disp);
}

double capacity_acceptance_rate(const CapacityModel& cap, double correlation, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw InvalidArgument("probe size must be positive");
  Rng rng(seed);
  std::vector<double> c;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < draws; ++i) ok += draw_capacities(cap, correlation, rng, c) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(draws);
}

Dataset sample_damage_states(const Psdm& psdm, const CapacityModel& cap, std::span<const double> ims,
                             std::uint64_t seed, const SamplingOptions& opts) {
  psdm.validate();
  cap.validate();
  if (!(opts.correlation >= 0.0 && opts.correlation <= 1.0)) throw InvalidArgument("correlation must lie in [0, 1]");
  const double rate = capacity_acceptance_rate(cap, opts.correlation, opts.probe, derive_seed(seed, 0));
  if (rate < opts.min_acceptance) {
    throw NumericalError("ordered-capacity acceptance rate is " + format_double(rate) +
                         " over the probe batch; increase the correlation or reduce beta_c");
  }
  Rng rng(derive_seed(seed, 1));
  std::vector<Observation> obs;
  obs.reserve(ims.size());
  std::vector<double> c;
  for (double im : ims) {
    if (!(im > 0.0)) throw InvalidArgument("im values must be positive");
    const double ln_d = psdm.ln_a0 + psdm.a1 * std::log(im) + psdm.beta_d * rng.normal();
    while (!draw_capacities(cap, opts.correlation, rng, c)) {
    }
    const auto below = std::count_if(c.begin(), c.end(), [&](double v) { return v < ln_d; });
    obs.push_back({im, 1 + static_cast<int>(below)});
  }
  return Dataset(std::move(obs), cap.categories());
}

}  // namespace fragility
