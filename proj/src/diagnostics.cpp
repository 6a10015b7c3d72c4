#include "fragility/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "fragility/error.hpp"
#include "fragility/rng.hpp"
#include "fragility/stats.hpp"

namespace fragility {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_range(const std::vector<int>& cats, int K, const char* label) {
  if (cats.size() < 2) throw InvalidArgument(std::string(label) + " split needs at least two categories");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (cats[i] < 1 || cats[i] > K) throw InvalidArgument(std::string(label) + " split has a category outside 1..K");
    if (i > 0 && cats[i] != cats[i - 1] + 1) {
      throw InvalidArgument(std::string(label) + " split must be a contiguous range of categories");
    }
  }
}

}  // namespace

std::vector<SurrogateResiduals> surrogate_residuals(const MleFit& fit, const Dataset& ds, std::uint64_t seed,
                                                    int replicates) {
  const ModelSpec& spec = fit.spec;
  if (spec.family != Family::cumulative) {
    throw InvalidArgument("surrogate residuals are implemented for cumulative models only");
  }
  if (spec.cs) throw InvalidArgument("surrogate residuals need a shared slope (no +cs)");
  if (spec.link == Link::cloglog) throw InvalidArgument("surrogate residuals need a probit or logit link");
  if (replicates < 1) throw InvalidArgument("replicates must be >= 1");
  if (fit.data_digest != ds.digest() || fit.n_obs != ds.size()) {
    throw InvalidArgument("the fit was made on a different dataset");
  }
  const int K = spec.categories;
  std::vector<SurrogateResiduals> out;
  for (int rep = 0; rep < replicates; ++rep) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    SurrogateResiduals res;
    res.replicate = rep;
    res.seed = seed;
    res.spec = spec;
    res.r.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double x = ds.log_im(i);
      const int k = ds.state(i);
      // In standardised latent units the interval is (eta_{k-1}, eta_k].
      const double lo = k == 1 ? -kInf : linear_predictor(spec, fit.estimates, x, k - 1);
      const double hi = k == K ? kInf : linear_predictor(spec, fit.estimates, x, k);
      res.r[i] = truncated_sample(spec.link, 0.0, lo, hi, rng);
    }
    out.push_back(std::move(res));
  }
  return out;
}

std::vector<QqPoint> qq_reference(const SurrogateResiduals& res, Link link) {
  const std::size_t n = res.r.size();
  if (n < 10) throw InvalidArgument("QQ reference needs at least 10 residuals");
  std::vector<double> s(res.r);
  std::sort(s.begin(), s.end());
  std::vector<QqPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].theoretical = link_quantile(link, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    out[i].sample = s[i];
  }
  return out;
}

std::vector<TrendBin> covariate_trend(const SurrogateResiduals& res, const Dataset& ds, int bins) {
  if (bins < 2) throw InvalidArgument("covariate trend needs at least 2 bins");
  if (res.r.size() != ds.size()) throw InvalidArgument("residuals and dataset differ in length");
  const std::size_t n = ds.size();
  const auto B = static_cast<std::size_t>(bins);
  if (n < B) throw InvalidArgument("fewer observations than bins");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ds.log_im(a) < ds.log_im(b); });
  std::vector<TrendBin> out;
  std::size_t start = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t end = (b + 1) * n / B;
    std::vector<double> xs, rs;
    for (std::size_t j = start; j < end; ++j) {
      xs.push_back(ds.log_im(order[j]));
      rs.push_back(res.r[order[j]]);
    }
    TrendBin bin;
    bin.count = rs.size();
    bin.center = mean(xs);
    bin.mean = mean(rs);
    bin.sd = std::sqrt(variance(rs));
    out.push_back(bin);
    start = end;
  }
  return out;
}

ParallelCheck parallel_check_from_slopes(double beta_low, double beta_high, std::span<const double> ln_im,
                                         std::uint64_t seed, bool noise) {
  ParallelCheck out;
  out.beta_low = beta_low;
  out.beta_high = beta_high;
  out.ln_im.assign(ln_im.begin(), ln_im.end());
  out.d.resize(ln_im.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < ln_im.size(); ++i) {
    const double x = ln_im[i];
    double s1 = -beta_low * x, s2 = -beta_high * x;
    if (noise) {
      s1 += rng.normal();
      s2 += rng.normal();
    }
    out.d[i] = s2 - s1;
  }
  const auto fit = ols(out.ln_im, out.d);
  out.intercept = fit.intercept;
  out.slope = fit.slope;
  out.slope_se = fit.slope_se;
  out.slope_se_adjusted = fit.slope_se;
  out.t_value = fit.t_value;
  out.p_value = fit.p_value;
  out.var_d = variance(out.d);
  return out;
}

ParallelCheck parallel_check(const Dataset& ds, const ParallelSplit& split, std::uint64_t seed, bool noise) {
  const int K = ds.categories();
  check_range(split.low, K, "low");
  check_range(split.high, K, "high");
  if (split.low.front() != 1 || split.high.back() != K) {
    throw InvalidArgument("the low split must start at category 1 and the high split must end at category K");
  }
  if (split.high.front() > split.low.back()) {
    throw InvalidArgument("the low and high splits must share at least one category");
  }
  auto collapse = [&](const std::vector<int>& cats, const char* label) {
    std::vector<Observation> obs;
    obs.reserve(ds.size());
    for (const auto& o : ds.observations()) {
      const int y = std::clamp(o.ds, cats.front(), cats.back());
      obs.push_back({o.im, y - cats.front() + 1});
    }
    Dataset sub(std::move(obs), static_cast<int>(cats.size()));
    const auto c = sub.counts();
    if (std::count_if(c.begin(), c.end(), [](std::size_t v) { return v > 0; }) < 3) {
      throw InvalidArgument(std::string(label) + " subset has fewer than 3 categories represented");
    }
    ModelSpec spec;
    spec.categories = static_cast<int>(cats.size());
    try {
      auto fit = fit_mle(spec, sub);
      if (!fit.converged) throw NumericalError("fit did not converge: " + fit.message);
      return std::pair{fit.estimates.beta[0], fit.se.back()};
    } catch (const std::exception& e) {
      throw NumericalError(std::string(label) + " subset fit failed: " + e.what());
    }
  };
  const auto [b1, se1] = collapse(split.low, "low");
  const auto [b2, se2] = collapse(split.high, "high");
  auto out = parallel_check_from_slopes(b1, b2, ds.log_im(), seed, noise);
  out.beta_low_se = se1;
  out.beta_high_se = se2;
  // Independence of the two subset fits is assumed; they share observations
  // and are positively correlated, so this errs on the wide side.
  out.slope_se_adjusted = std::sqrt(out.slope_se * out.slope_se + se1 * se1 + se2 * se2);
  return out;
}

}  // namespace fragility
