#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fragility/error.hpp"
#include "fragility/models.hpp"
#include "fragility/rng.hpp"
#include "support.hpp"

using namespace fragility;
using testing::phi_oracle;

namespace {

const double kX02 = std::log(0.2);

ModelSpec make(Family f, bool vh, bool cs, int K = 5, Link link = Link::probit) {
  ModelSpec s;
  s.family = f;
  s.vh = vh;
  s.cs = cs;
  s.categories = K;
  s.link = f == Family::mlogit ? Link::logit : link;
  return s;
}

// Adjacent-category probabilities written out term by term from the
// product form: numerator_k = prod_{j<k}(1 - F_j) prod_{j>=k} F_j.
std::vector<double> acat_brute(Link link, const std::vector<double>& eta) {
  const std::size_t K = eta.size() + 1;
  std::vector<double> num(K);
  for (std::size_t k = 0; k < K; ++k) {
    double v = 1.0;
    for (std::size_t j = 0; j < k; ++j) v *= 1.0 - link_cdf(link, eta[j]);
    for (std::size_t j = k; j + 1 < K; ++j) v *= link_cdf(link, eta[j]);
    num[k] = v;
  }
  const double tot = testing::sum(num);
  for (auto& v : num) v /= tot;
  return num;
}

std::vector<double> eta_of(const ModelSpec& s, const ParamSet& p, double x) {
  std::vector<double> eta;
  for (int k = 1; k < s.categories; ++k) eta.push_back(linear_predictor(s, p, x, k));
  return eta;
}

}  // namespace

TEST_CASE("linear predictor") {
  const auto p = testing::reference_params();
  const auto cum = testing::cum_probit();
  CHECK(linear_predictor(cum, p, -1.60944, 1) == doctest::Approx(0.87602).epsilon(1e-5));
  auto vh = make(Family::cumulative, true, false);
  CHECK(linear_predictor(vh, p, 0.7, 2) == linear_predictor(cum, p, 0.7, 2));
  auto q = p;
  q.gamma = 0.4;
  CHECK(linear_predictor(vh, q, 0.7, 2) == doctest::Approx((p.tau[1] - p.beta[0] * 0.7) / std::exp(0.28)));
  auto cs = make(Family::sequential, true, true);
  q.beta = {0.5, 1.0, 1.5, 2.0};
  for (int k = 1; k <= 4; ++k) CHECK(linear_predictor(cs, q, 0.0, k) == q.tau[static_cast<std::size_t>(k - 1)]);
  CHECK(linear_predictor(cs, q, 0.5, 3) == doctest::Approx((q.tau[2] - 1.5 * 0.5) / std::exp(0.2)));
}

TEST_CASE("cumulative probabilities at 0.2 g") {
  const auto p = testing::reference_params();
  const auto probs = cum_probs(testing::cum_probit(), p, kX02);
  const double cdf[] = {0.8095, 0.9323, 0.9921, 0.9991};
  const double expect[] = {0.8095, 0.1227, 0.0598, 0.0070, 0.0009};
  double acc = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(probs[k] == doctest::Approx(expect[k]).epsilon(0.002).scale(1.0));
    acc += probs[k];
    if (k < 4) {
      CHECK(acc == doctest::Approx(cdf[k]).epsilon(1e-4).scale(1.0));
      CHECK(std::fabs(acc - phi_oracle(p.tau[k] - p.beta[0] * kX02)) < 1e-12);
    }
  }
}

TEST_CASE("cumulative special cases") {
  auto p = testing::reference_params();
  p.beta = {0.0};
  const auto spec = testing::cum_probit();
  const auto a = cum_probs(spec, p, -2.0), b = cum_probs(spec, p, 1.0);
  for (std::size_t k = 0; k < 5; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-15));
  ParamSet bin;
  bin.tau = {0.0};
  bin.beta = {1.3};
  const auto pb = cum_probs(testing::cum_probit(2), bin, 0.4);
  CHECK(pb[1] == doctest::Approx(phi_oracle(1.3 * 0.4)).epsilon(1e-12));
}

TEST_CASE("lognormal form of the cumulative probit model") {
  const auto spec = testing::cum_probit();
  const auto ln = cum_to_lognormal(spec, testing::reference_params());
  const double theta[] = {0.3521, 0.5243, 0.9484, 1.4951};
  for (std::size_t k = 0; k < 4; ++k) CHECK(ln.median[k] == doctest::Approx(theta[k]).epsilon(2e-4));
  CHECK(ln.log_sd == doctest::Approx(0.6456).epsilon(1e-4));

  ParamSet p;
  p.tau = {0.0};
  p.beta = {2.0};
  CHECK(cum_to_lognormal(testing::cum_probit(2), p).median[0] == 1.0);
  p.tau = {std::log(2.0)};
  p.beta = {1.0};
  const auto two = cum_to_lognormal(testing::cum_probit(2), p);
  CHECK(two.median[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(two.log_sd == 1.0);

  p.beta = {-0.5};
  CHECK_THROWS_AS(cum_to_lognormal(testing::cum_probit(2), p), InvalidArgument);
  CHECK_THROWS_AS(cum_to_lognormal(make(Family::cumulative, true, false), testing::reference_params()),
                  InvalidArgument);
  CHECK_THROWS_AS(cum_to_lognormal(make(Family::sequential, false, false), testing::reference_params()),
                  InvalidArgument);
}

TEST_CASE("sequential probabilities") {
  const auto p = testing::reference_params();
  const auto seq = make(Family::sequential, false, false);
  const auto probs = seq_probs(seq, p, kX02);
  CHECK(probs[0] == doctest::Approx(cum_probs(testing::cum_probit(), p, kX02)[0]).epsilon(1e-14));
  CHECK(probs[1] == doctest::Approx(phi_oracle(1.49302) * (1.0 - phi_oracle(0.87602))).epsilon(1e-5));
  CHECK(probs[1] == doctest::Approx(0.17758).epsilon(5e-4));
  CHECK(std::fabs(testing::sum(probs) - 1.0) < 1e-12);

  ParamSet bin;
  bin.tau = {0.3};
  bin.beta = {0.8};
  const auto s2 = seq_probs(make(Family::sequential, false, false, 2), bin, -0.4);
  const auto c2 = cum_probs(testing::cum_probit(2), bin, -0.4);
  CHECK(s2[0] == doctest::Approx(c2[0]).epsilon(1e-15));
  CHECK(s2[1] == doctest::Approx(c2[1]).epsilon(1e-15));

  // A certain stop at cut-point 2 leaves nothing for the later categories.
  ParamSet stop;
  stop.tau = {-1.0, 40.0, 41.0, 42.0};
  stop.beta = {1.0};
  const auto ps = seq_probs(seq, stop, 0.0);
  CHECK(ps[2] == 0.0);
  CHECK(ps[3] == 0.0);
  CHECK(ps[4] == 0.0);
}

TEST_CASE("sequential exceedance chain") {
  const auto p = testing::reference_params();
  const auto seq = make(Family::sequential, false, false);
  CHECK(seq_exceedance_chain(seq, p, kX02, 1) == doctest::Approx(0.19046).epsilon(1e-4));
  CHECK(seq_exceedance_chain(seq, p, kX02, 2) == doctest::Approx(0.012898).epsilon(1e-3));
  CHECK(seq_exceedance_chain(seq, p, kX02, 2) ==
        doctest::Approx(phi_oracle(-0.87602) * phi_oracle(-1.49302)).epsilon(1e-5));
  for (int k = 1; k <= 4; ++k) CHECK(seq_exceedance_chain(seq, p, 60.0, k) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(seq_exceedance_chain(make(Family::sequential, false, false, 5, Link::cloglog), p, 0.0, 1),
                  InvalidArgument);
}

TEST_CASE("sequential dual form agrees for symmetric links and not for cloglog") {
  Rng rng(4);
  for (Link link : {Link::probit, Link::logit}) {
    for (bool cs : {false, true}) {
      const auto spec = make(Family::sequential, false, cs, 5, link);
      for (int r = 0; r < 100; ++r) {
        const auto p = testing::random_params(spec, rng);
        const double x = rng.normal(-0.5, 1.0);
        const auto probs = seq_probs(spec, p, x);
        double acc = 0.0;
        for (int k = 1; k <= 4; ++k) {
          acc += probs[static_cast<std::size_t>(k - 1)];
          CHECK(std::fabs(seq_exceedance_chain(spec, p, x, k) - (1.0 - acc)) <= 1e-12);
        }
      }
    }
  }
  const auto clog = make(Family::sequential, false, false, 5, Link::cloglog);
  const auto p = testing::reference_params();
  const double chain = continuation_chain_product(clog, p, kX02, 2);
  CHECK(std::fabs(chain - exceedance_prob(clog, p, kX02, 2)) >= 1e-3);
}

TEST_CASE("adjacent category probabilities") {
  const auto acat3 = make(Family::adjacent, false, false, 3);
  ParamSet p;
  p.tau = {-0.01, 0.01};
  p.beta = {0.0};
  const auto probs = acat_probs(acat3, p, 0.3);
  const auto brute = acat_brute(Link::probit, eta_of(acat3, p, 0.3));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(probs[k] == doctest::Approx(1.0 / 3.0).epsilon(0.01));
    CHECK(probs[k] == doctest::Approx(brute[k]).epsilon(1e-13));
  }
  CHECK(std::fabs(probs[0] - probs[2]) < 1e-15);

  ParamSet bin;
  bin.tau = {0.2};
  bin.beta = {1.1};
  const auto a2 = acat_probs(make(Family::adjacent, false, false, 2), bin, 0.5);
  CHECK(a2[0] == doctest::Approx(cum_probs(testing::cum_probit(2), bin, 0.5)[0]).epsilon(1e-14));

  Rng rng(8);
  for (bool cs : {false, true}) {
    const auto spec = make(Family::adjacent, true, cs);
    for (int r = 0; r < 50; ++r) {
      const auto q = testing::random_params(spec, rng);
      const double x = rng.normal(-0.5, 1.0);
      const auto got = acat_probs(spec, q, x);
      const auto want = acat_brute(Link::probit, eta_of(spec, q, x));
      for (std::size_t k = 0; k < 5; ++k) CHECK(std::fabs(got[k] - want[k]) <= 1e-12 + 1e-10 * want[k]);
    }
  }
}

TEST_CASE("adjacent logit matches the local-logit construction") {
  Rng rng(5);
  for (bool cs : {false, true}) {
    const auto spec = make(Family::adjacent, false, cs, 5, Link::logit);
    for (int r = 0; r < 200; ++r) {
      const auto p = testing::random_params(spec, rng);
      const double x = rng.normal(-0.5, 1.0);
      const auto a = acat_probs(spec, p, x);
      const auto b = acat_logit_probs(spec, p, x);
      for (std::size_t k = 0; k < 5; ++k) CHECK(std::fabs(a[k] - b[k]) <= 1e-12);
      for (int k = 1; k < 5; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        CHECK(std::log(b[ku - 1] / b[ku]) == doctest::Approx(linear_predictor(spec, p, x, k)).epsilon(1e-9));
      }
    }
  }
  ParamSet p;
  p.tau = {0.5, 1.0};
  p.beta = {0.0};
  const auto q = acat_logit_probs(make(Family::adjacent, false, false, 3, Link::logit), p, 2.0);
  CHECK(std::log(q[0] / q[1]) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(std::log(q[1] / q[2]) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::fabs(testing::sum(q) - 1.0) < 1e-15);
}

TEST_CASE("multinomial logit") {
  const auto ml = make(Family::mlogit, false, false);
  ParamSet zero;
  zero.tau.assign(4, 0.0);
  zero.beta.assign(4, 0.0);
  for (double v : mlogit_probs(ml, zero, 1.7)) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

  ParamSet bin;
  bin.tau = {-0.3};
  bin.beta = {1.2};
  const double x = 0.8;
  CHECK(mlogit_probs(make(Family::mlogit, false, false, 2), bin, x)[1] ==
        doctest::Approx(1.0 / (1.0 + std::exp(-(-0.3 + 1.2 * x)))).epsilon(1e-14));

  ParamSet p;
  p.tau = {0.4, -0.2, 1.0, 0.3};
  p.beta = {1.0, 2.0, -0.5, 0.7};
  const auto probs = mlogit_probs(ml, p, x);
  // Softmax with every score shifted by a constant.
  std::vector<double> s{0.0};
  for (int k = 0; k < 4; ++k) s.push_back(p.tau[static_cast<std::size_t>(k)] + p.beta[static_cast<std::size_t>(k)] * x);
  double tot = 0.0;
  for (auto& v : s) tot += std::exp(v + 37.0);
  for (std::size_t k = 0; k < 5; ++k) CHECK(probs[k] == doctest::Approx(std::exp(s[k] + 37.0) / tot).epsilon(1e-13));
}

TEST_CASE("probabilities sum to one for every family and variant") {
  Rng rng(6);
  for (const auto& spec : model_catalog()) {
    for (Link link : {Link::probit, Link::logit, Link::cloglog}) {
      auto s = spec;
      if (s.family != Family::mlogit) s.link = link;
      for (int r = 0; r < 50; ++r) {
        const auto p = testing::random_params(s, rng);
        for (double x = -3.0; x <= 1.0; x += 0.5) {
          CHECK(std::fabs(testing::sum(category_probs(s, p, x)) - 1.0) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("all families coincide for two categories") {
  Rng rng(7);
  for (int r = 0; r < 100; ++r) {
    ParamSet p;
    p.tau = {rng.normal(0.0, 1.0)};
    p.beta = {rng.normal(1.0, 1.0)};
    p.gamma = rng.normal(0.0, 0.3);
    const double x = rng.normal(-0.5, 1.0);
    for (bool vh : {false, true}) {
      const auto c = category_probs(make(Family::cumulative, vh, false, 2), p, x);
      const auto s = category_probs(make(Family::sequential, vh, false, 2), p, x);
      const auto a = category_probs(make(Family::adjacent, vh, false, 2), p, x);
      CHECK(std::fabs(c[0] - s[0]) < 1e-14);
      CHECK(std::fabs(c[0] - a[0]) < 1e-14);
    }
  }
}

TEST_CASE("cumulative and sequential curves never cross") {
  Rng rng(9);
  for (Family f : {Family::cumulative, Family::sequential}) {
    const auto spec = make(f, false, false);
    for (int r = 0; r < 200; ++r) {
      const auto p = testing::random_params(spec, rng);
      for (double x = -3.0; x <= 1.0; x += 0.25) {
        const auto fr = exceedance_probs(spec, p, x);
        for (std::size_t k = 0; k + 1 < fr.size(); ++k) {
          CHECK(fr[k] >= fr[k + 1]);
        }
      }
    }
  }
}

TEST_CASE("exceedance curves") {
  const auto spec = testing::cum_probit();
  const auto p = testing::reference_params();
  std::vector<double> grid;
  for (double im = 0.05; im <= 2.0; im += 0.05) grid.push_back(im);
  const auto table = exceedance_curve(spec, p, grid);
  REQUIRE(table.im.size() == grid.size());
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t k = 0; k + 1 < 4; ++k) CHECK(table.exceedance[r][k] >= table.exceedance[r][k + 1]);
    if (r > 0) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(table.exceedance[r][k] > table.exceedance[r - 1][k]);
    }
    CHECK(std::fabs(testing::sum(table.category[r]) - 1.0) < 1e-12);
  }
  CHECK(exceedance_prob(spec, p, 0.1, 5) == 0.0);
  const auto ln = cum_to_lognormal(spec, p);
  for (double im : grid) {
    for (int k = 1; k <= 4; ++k) {
      const double lognormal = norm_cdf(std::log(im / ln.median[static_cast<std::size_t>(k - 1)]) / ln.log_sd);
      CHECK(std::fabs(lognormal - exceedance_prob(spec, p, std::log(im), k)) <= 1e-12);
    }
  }
  Rng rng(10);
  for (const auto& s : model_catalog()) {
    const auto q = testing::random_params(s, rng);
    for (double x = -3.0; x <= 1.0; x += 0.5) {
      const auto fr = exceedance_probs(s, q, x);
      for (std::size_t k = 0; k + 1 < fr.size(); ++k) CHECK(fr[k] >= fr[k + 1] - 1e-15);
    }
  }
  CHECK_THROWS_AS(exceedance_curve(spec, p, std::vector<double>{0.1, -0.2}), InvalidArgument);
}

TEST_CASE("cumulative model with category-specific slopes is gated") {
  CHECK_THROWS_AS(parse_model_name("cum+cs"), InvalidArgument);
  const auto spec = parse_model_name("cum+cs", 5, Link::probit, true);
  ParamSet p;
  p.tau = {-1.0, 0.0, 1.0, 2.0};
  p.beta = {3.0, 0.5, 0.5, 0.5};
  CHECK_NOTHROW(category_probs(spec, p, 1.0));
  CHECK_THROWS_AS(category_probs(spec, p, -1.0), NumericalError);
}

TEST_CASE("model catalog and names") {
  const auto names = catalog_names();
  REQUIRE(names.size() == 11);
  CHECK(names.front() == "cum");
  CHECK(names.back() == "mlogit");
  const auto cat = model_catalog();
  for (std::size_t i = 0; i < cat.size(); ++i) {
    CHECK(cat[i].name() == names[i]);
    CHECK(parse_model_name(names[i]) == cat[i]);
  }
  CHECK(parse_model_name("seq+cs+vh") == parse_model_name("seq+vh+cs"));
  CHECK(parse_model_name("mlogit").link == Link::logit);
  CHECK(parse_model_name("seq+vh+cs").num_params() == 9);
  CHECK(parse_model_name("cum").num_params() == 5);
  CHECK(parse_model_name("mlogit").num_params() == 8);
  CHECK_THROWS_AS(parse_model_name("probit"), InvalidArgument);
  CHECK_THROWS_AS(parse_model_name("seq+cs+cs"), InvalidArgument);
  CHECK_THROWS_AS(parse_model_name("mlogit+vh"), InvalidArgument);
}

TEST_CASE("unconstrained coordinates round trip") {
  Rng rng(12);
  for (const auto& spec : model_catalog()) {
    const auto p = testing::random_params(spec, rng);
    const auto u = to_unconstrained(spec, p);
    const auto back = flatten(spec, from_unconstrained(spec, u));
    const auto orig = flatten(spec, p);
    for (std::size_t i = 0; i < orig.size(); ++i) CHECK(back[i] == doctest::Approx(orig[i]).epsilon(1e-12));
    CHECK(param_names(spec).size() == spec.num_params());
  }
  auto bad = testing::reference_params();
  bad.tau[2] = bad.tau[1];
  CHECK_THROWS_AS(validate_params(testing::cum_probit(), bad), InvalidArgument);
}
