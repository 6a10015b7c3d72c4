#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fragility/bayes.hpp"
#include "fragility/data.hpp"
#include "fragility/error.hpp"
#include "fragility/evaluation.hpp"
#include "fragility/mle.hpp"
#include "support.hpp"

using namespace fragility;

namespace {

bool has_warning(const MleFit& fit, const std::string& code) {
  for (const auto& w : fit.warnings) {
    if (w.code == code) return true;
  }
  return false;
}

Dataset simulate(const ModelSpec& spec, const ParamSet& p, std::size_t n, std::uint64_t seed) {
  return simulate_dataset(spec, p, log_uniform_grid_sample(n, 0.05, 2.0, seed), seed + 1000);
}

}  // namespace

TEST_CASE("log-likelihood of a single even-odds observation") {
  ParamSet p;
  p.tau = {0.0};
  p.beta = {0.0};
  const Dataset ds({{0.3, 2}}, 2);
  CHECK(log_likelihood(testing::cum_probit(2), p, ds) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("log-likelihood is additive over rows") {
  const auto spec = testing::cum_probit();
  const auto ds = simulate(spec, testing::reference_params(), 100, 1);
  std::vector<Observation> twice(ds.observations().begin(), ds.observations().end());
  twice.insert(twice.end(), ds.observations().begin(), ds.observations().end());
  const Dataset dd(twice, 5);
  CHECK(log_likelihood(spec, testing::reference_params(), dd) ==
        doctest::Approx(2.0 * log_likelihood(spec, testing::reference_params(), ds)).epsilon(1e-14));
}

TEST_CASE("mean log-score matches the expected log-score of the generating law") {
  const auto spec = testing::cum_probit();
  const auto p = testing::reference_params();
  const std::size_t n = 5000;
  const auto ims = log_uniform_grid_sample(n, 0.05, 2.0, 31);
  const auto ds = simulate_dataset(spec, p, ims, 32);
  double expect = 0.0, var = 0.0;
  for (double im : ims) {
    const auto probs = category_probs(spec, p, std::log(im));
    double m = 0.0, m2 = 0.0;
    for (double q : probs) {
      if (q <= 0.0) continue;
      m += q * std::log(q);
      m2 += q * std::log(q) * std::log(q);
    }
    expect += m;
    var += m2 - m * m;
  }
  const double got = log_likelihood(spec, p, ds);
  CHECK(std::fabs(got - expect) <= 3.0 * std::sqrt(var));
}

TEST_CASE("zero probability at an observed category gives the -inf sentinel") {
  ModelSpec seq = testing::cum_probit();
  seq.family = Family::sequential;
  seq.link = Link::cloglog;
  ParamSet p;
  p.tau = {-1.0, 800.0, 801.0, 802.0};
  p.beta = {1.0};
  const Dataset ds({{1.0, 1}, {1.0, 4}}, 5);
  CHECK(log_likelihood(seq, p, ds) == -std::numeric_limits<double>::infinity());
  const auto fl = log_likelihood_floored(seq, p, ds);
  CHECK(fl.floored == 1);
  CHECK(fl.pointwise[1] == kLogProbFloor);
  CHECK(std::isfinite(fl.total));
}

TEST_CASE("cumulative probit recovery at n = 1e4") {
  const auto spec = testing::cum_probit();
  const auto truth = testing::reference_params();
  const auto ds = simulate(spec, truth, 10000, 7);
  const auto fit = fit_mle(spec, ds);
  CHECK(fit.converged);
  CHECK(fit.gradient_norm <= 1e-8);
  const auto t = flatten(spec, truth);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::fabs(fit.estimate_vector[i] - t[i]) <= 3.0 * fit.se[i]);
    CHECK(fit.se[i] == doctest::Approx(std::sqrt(fit.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)))));
  }
  for (std::size_t k = 1; k < 4; ++k) CHECK(fit.estimates.tau[k] > fit.estimates.tau[k - 1]);
  const auto z = fit.z_values();
  CHECK(z[4] == doctest::Approx(fit.estimate_vector[4] / fit.se[4]));
  CHECK(fit.names[4] == "beta");
}

TEST_CASE("zero slope truth is recovered") {
  const auto spec = testing::cum_probit();
  ParamSet flat;
  flat.tau = {-0.84, -0.25, 0.25, 0.84};
  flat.beta = {0.0};
  const auto ds = simulate(spec, flat, 5000, 3);
  const auto fit = fit_mle(spec, ds);
  CHECK(std::fabs(fit.estimates.beta[0]) <= 3.0 * fit.se[4]);
  // Fitted cumulative probabilities at the covariate mean track the empirical ones.
  double xbar = 0.0;
  for (double x : ds.log_im()) xbar += x;
  xbar /= static_cast<double>(ds.size());
  const auto emp = empirical_cum_freq(ds);
  for (int k = 1; k <= 4; ++k) {
    const double fitted = 1.0 - exceedance_prob(spec, fit.estimates, xbar, k);
    const double e = emp[static_cast<std::size_t>(k - 1)];
    CHECK(std::fabs(fitted - e) <= 3.0 * std::sqrt(e * (1 - e) / 5000.0));
  }
}

TEST_CASE("fit preconditions") {
  const auto spec = testing::cum_probit();
  CHECK_THROWS_AS(fit_mle(spec, Dataset({{0.1, 1}, {0.2, 2}, {0.3, 3}}, 5)), InvalidArgument);
  CHECK_THROWS_AS(fit_mle(spec, Dataset(std::vector<Observation>(20, {0.1, 2}), 5)), InvalidArgument);
  CHECK_THROWS_AS(fit_mle(testing::cum_probit(4), simulate(spec, testing::reference_params(), 50, 1)),
                  InvalidArgument);
}

TEST_CASE("estimator equivariance under rescaling of im") {
  const auto spec = testing::cum_probit();
  const auto ds = simulate(spec, testing::reference_params(), 800, 11);
  std::vector<Observation> scaled(ds.observations().begin(), ds.observations().end());
  const double c = 9.81;
  for (auto& o : scaled) o.im *= c;
  const Dataset ds2(scaled, 5);
  const auto a = fit_mle(spec, ds);
  const auto b = fit_mle(spec, ds2);
  CHECK(b.estimates.beta[0] == doctest::Approx(a.estimates.beta[0]).epsilon(1e-5));
  CHECK(b.loglik == doctest::Approx(a.loglik).epsilon(1e-9));
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(b.estimates.tau[k] == doctest::Approx(a.estimates.tau[k] + a.estimates.beta[0] * std::log(c)).epsilon(1e-5));
  }
  const auto pa = category_probs(spec, a.estimates, ds.log_im(0));
  const auto pb = category_probs(spec, b.estimates, ds2.log_im(0));
  for (std::size_t k = 0; k < 5; ++k) CHECK(pb[k] == doctest::Approx(pa[k]).epsilon(1e-5));
}

TEST_CASE("information criteria") {
  const auto spec = testing::cum_probit();
  const auto ds = simulate(spec, testing::reference_params(), 442, 5);
  const auto fit = fit_mle(spec, ds);
  const auto null = fit_null(spec, ds);
  CHECK(null.spec.intercept_only);
  CHECK(null.loglik <= fit.loglik);
  const auto ic = info_criteria(fit, null);
  CHECK(ic.aic == doctest::Approx(-2.0 * fit.loglik + 10.0));
  CHECK(ic.bic == doctest::Approx(-2.0 * fit.loglik + 5.0 * std::log(442.0)));
  CHECK(ic.mcfadden_r2 == doctest::Approx(1.0 - fit.loglik / null.loglik));
  CHECK(ic.coxsnell_r2 == doctest::Approx(1.0 - std::exp(2.0 * (null.loglik - fit.loglik) / 442.0)));
  CHECK(ic.mcfadden_r2 > 0.0);

  const auto self = info_criteria(fit, fit);
  CHECK(self.mcfadden_r2 == 0.0);
  CHECK(self.coxsnell_r2 == 0.0);

  auto bigger = fit;
  bigger.n_params = 6;
  const auto ic6 = info_criteria(bigger, null);
  CHECK(ic6.aic - ic.aic == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ic6.bic - ic.bic == doctest::Approx(std::log(442.0)).epsilon(1e-12));

  const auto other = fit_mle(spec, simulate(spec, testing::reference_params(), 442, 6));
  CHECK_THROWS_AS(info_criteria(other, null), InvalidArgument);
}

TEST_CASE("information criteria agree with exact leave-one-out on a clear pair") {
  const auto spec = testing::cum_probit(3);
  ParamSet truth;
  truth.tau = {-0.5, 0.8};
  truth.beta = {2.0};
  const auto ds = simulate(spec, truth, 40, 17);
  auto null_spec = spec;
  null_spec.intercept_only = true;
  const auto good = fit_mle(spec, ds);
  const auto bad = fit_mle(null_spec, ds);
  const auto ref = fit_null(spec, ds);
  McmcOptions mc;
  mc.chains = 2;
  mc.warmup = 300;
  mc.iters = 300;
  mc.seed = 3;
  const auto loo_good = exact_loo_oracle(spec, ds, Prior{}, mc);
  const auto loo_bad = exact_loo_oracle(null_spec, ds, Prior{}, mc);
  const bool loo_prefers_good = loo_good.elpd_exact > loo_bad.elpd_exact;
  CHECK(loo_prefers_good);
  CHECK((info_criteria(good, ref).aic < info_criteria(bad, ref).aic) == loo_prefers_good);
  CHECK((info_criteria(good, ref).bic < info_criteria(bad, ref).bic) == loo_prefers_good);
}

TEST_CASE("empty categories and collapsed gaps are reported, not fatal") {
  const auto spec = testing::cum_probit();
  auto ds = simulate(spec, testing::reference_params(), 400, 9);
  std::vector<Observation> obs(ds.observations().begin(), ds.observations().end());
  for (auto& o : obs) {
    if (o.ds == 4) o.ds = 5;
  }
  const auto fit = fit_mle(spec, Dataset(obs, 5));
  CHECK(has_warning(fit, "zero_count_category"));
  CHECK(std::isfinite(fit.loglik));

  ModelSpec acat = spec;
  acat.family = Family::adjacent;
  const auto fa = fit_mle(acat, simulate(spec, testing::reference_params(), 442, 2));
  CHECK(std::isfinite(fa.loglik));
  for (std::size_t k = 1; k < 4; ++k) CHECK(fa.estimates.tau[k] >= fa.estimates.tau[k - 1]);
}

TEST_CASE("iteration limit yields an unconverged fit with diagnostics") {
  const auto spec = testing::cum_probit();
  const auto ds = simulate(spec, testing::reference_params(), 300, 4);
  FitOptions opts;
  opts.max_iter = 1;
  const auto fit = fit_mle(spec, ds, opts);
  CHECK_FALSE(fit.converged);
  CHECK(has_warning(fit, "not_converged"));
  CHECK(fit.gradient_norm > 1e-8);
  const auto null = fit_null(spec, ds);
  CHECK_THROWS_AS(info_criteria(fit, null), InvalidArgument);
}

TEST_CASE("complete separation is not reported as converged") {
  ModelSpec spec;
  spec.categories = 3;
  const Dataset ds({{0.1, 1}, {0.2, 1}, {0.3, 2}, {0.4, 3}, {0.5, 3}}, 3);
  const auto fit = fit_mle(spec, ds);
  CHECK_FALSE(fit.converged);
  CHECK(has_warning(fit, "separation"));
}

TEST_CASE("every catalog model fits simulated sequential data") {
  ModelSpec seq = testing::cum_probit();
  seq.family = Family::sequential;
  seq.cs = true;
  ParamSet p;
  p.tau = {-1.2, -0.5, 0.3, 0.9};
  p.beta = {1.0, 1.4, 1.8, 2.2};
  const auto ds = simulate(seq, p, 442, 8);
  for (const auto& spec : model_catalog()) {
    const auto fit = fit_mle(spec, ds);
    CHECK_MESSAGE(std::isfinite(fit.loglik), spec.name());
    CHECK_MESSAGE(fit.se.size() == spec.num_params(), spec.name());
  }
}
