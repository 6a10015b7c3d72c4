#include "fragility/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "fragility/error.hpp"
#include "fragility/optimize.hpp"
#include "fragility/rng.hpp"
#include "fragility/stats.hpp"

namespace fragility {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_log_pdf(double x, const NormalPrior& p) {
  const double z = (x - p.mean) / p.sd;
  return -0.5 * z * z - std::log(p.sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

struct Target {
  const ModelSpec& spec;
  const Dataset& ds;
  const Prior& prior;
  bool prior_only;

  // Log posterior (up to a constant) at u; fills the pointwise log-likelihood.
  double operator()(std::span<const double> u, std::vector<double>* pointwise) const {
    double lp = log_jacobian(spec, u);
    ParamSet p;
    try {
      p = from_unconstrained(spec, u);
      lp += prior.log_density(spec, p);
      if (!prior_only) {
        auto ll = log_likelihood_floored(spec, p, ds);
        lp += ll.total;
        if (pointwise) *pointwise = std::move(ll.pointwise);
      }
    } catch (const NumericalError&) {
      return kNegInf;
    }
    return std::isfinite(lp) ? lp : kNegInf;
  }
};

struct ChainResult {
  std::vector<double> params;
  std::vector<double> unconstrained;
  std::vector<double> pointwise;
  double acceptance = 0.0;
  std::size_t finite_proposals = 0;
};

// Lower Cholesky factor, or an empty matrix if `m` is not positive definite.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return {};
  return llt.matrixL();
}

ChainResult run_chain(const Target& target, const std::vector<double>& mode, const Eigen::MatrixXd& cov0,
                      const McmcOptions& opts, int chain) {
  const auto P = static_cast<Eigen::Index>(mode.size());
  const std::size_t Pu = mode.size();
  Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(chain)));
  Eigen::MatrixXd L0 = cholesky(cov0);
  Eigen::MatrixXd L = L0;

  std::vector<double> u(mode), prop(Pu);
  std::vector<double> pw, pw_prop;
  // Overdispersed start around the mode.
  double lp = kNegInf;
  for (int attempt = 0; attempt < 100 && !std::isfinite(lp); ++attempt) {
    Eigen::VectorXd z(P);
    for (Eigen::Index i = 0; i < P; ++i) z(i) = rng.normal();
    const Eigen::VectorXd step = 1.5 * L0 * z;
    for (std::size_t i = 0; i < Pu; ++i) u[i] = mode[i] + step(static_cast<Eigen::Index>(i));
    lp = target(u, &pw);
  }
  if (!std::isfinite(lp)) {
    u = mode;
    lp = target(u, &pw);
  }

  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(Pu)));
  Eigen::VectorXd run_mean = Eigen::VectorXd::Zero(P);
  Eigen::MatrixXd run_m2 = Eigen::MatrixXd::Zero(P, P);
  double run_n = 0.0;
  constexpr double kPriorWeight = 20.0;

  ChainResult out;
  const auto kept = static_cast<std::size_t>(opts.iters);
  out.params.reserve(kept * Pu);
  out.unconstrained.reserve(kept * Pu);
  if (opts.store_pointwise && !opts.prior_only) out.pointwise.reserve(kept * target.ds.size());

  std::size_t accepted = 0;
  const long total = static_cast<long>(opts.warmup) + static_cast<long>(opts.iters) * opts.thin;
  for (long t = 0; t < total; ++t) {
    const bool warm = t < opts.warmup;
    Eigen::VectorXd z(P);
    for (Eigen::Index i = 0; i < P; ++i) z(i) = rng.normal();
    const Eigen::VectorXd step = std::exp(log_scale) * L * z;
    for (std::size_t i = 0; i < Pu; ++i) prop[i] = u[i] + step(static_cast<Eigen::Index>(i));
    const double lp_prop = target(prop, &pw_prop);
    double alpha = 0.0;
    if (std::isfinite(lp_prop)) {
      ++out.finite_proposals;
      alpha = lp_prop >= lp ? 1.0 : std::exp(lp_prop - lp);
    }
    if (rng.uniform() < alpha) {
      u.swap(prop);
      pw.swap(pw_prop);
      lp = lp_prop;
      if (!warm) ++accepted;
    }
    if (warm) {
      log_scale += (alpha - opts.target_accept) / std::pow(static_cast<double>(t) + 1.0, 0.6);
      if (t >= opts.warmup / 5) {
        const Eigen::VectorXd uv = Eigen::Map<const Eigen::VectorXd>(u.data(), P);
        run_n += 1.0;
        const Eigen::VectorXd d = uv - run_mean;
        run_mean += d / run_n;
        run_m2 += d * (uv - run_mean).transpose();
        if (static_cast<long>(run_n) % 50 == 0 && run_n >= 2.0 * static_cast<double>(Pu) + 20.0) {
          const Eigen::MatrixXd emp = run_m2 / (run_n - 1.0);
          Eigen::MatrixXd blend = (run_n * emp + kPriorWeight * cov0) / (run_n + kPriorWeight);
          blend += 1e-10 * Eigen::MatrixXd::Identity(P, P);
          Eigen::MatrixXd Lnew = cholesky(blend);
          if (Lnew.size() > 0) L = std::move(Lnew);
        }
      }
      continue;
    }
    const long post = t - opts.warmup + 1;
    if (post % opts.thin != 0) continue;
    const auto nat = flatten(target.spec, from_unconstrained(target.spec, u));
    out.params.insert(out.params.end(), nat.begin(), nat.end());
    out.unconstrained.insert(out.unconstrained.end(), u.begin(), u.end());
    if (opts.store_pointwise && !opts.prior_only) out.pointwise.insert(out.pointwise.end(), pw.begin(), pw.end());
  }
  const double post_iters = static_cast<double>(opts.iters) * opts.thin;
  out.acceptance = post_iters > 0 ? static_cast<double>(accepted) / post_iters : 0.0;
  return out;
}

}  // namespace

void Prior::validate() const {
  for (const auto* p : {&tau, &beta, &gamma}) {
    if (!(p->sd > 0.0) || !std::isfinite(p->sd) || !std::isfinite(p->mean)) {
      throw InvalidArgument("prior standard deviations must be positive and finite");
    }
  }
}

double Prior::log_density(const ModelSpec& spec, const ParamSet& params) const {
  const auto v = flatten(spec, params);
  const std::size_t k1 = params.tau.size();
  const std::size_t n_gamma = (spec.vh && !spec.intercept_only) ? 1 : 0;
  double lp = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const NormalPrior& p = i < k1 ? tau : (i + n_gamma < v.size() ? beta : gamma);
    lp += normal_log_pdf(v[i], p);
  }
  return lp;
}

std::span<const double> PosteriorDraws::draw(std::size_t s) const {
  return std::span<const double>(params).subspan(s * n_params, n_params);
}

std::span<const double> PosteriorDraws::unconstrained_draw(std::size_t s) const {
  return std::span<const double>(unconstrained).subspan(s * n_params, n_params);
}

std::span<const double> PosteriorDraws::pointwise(std::size_t s) const {
  if (pointwise_loglik.empty()) throw InvalidArgument("pointwise log-likelihood was not stored for these draws");
  return std::span<const double>(pointwise_loglik).subspan(s * n_obs, n_obs);
}

ParamSet PosteriorDraws::param_set(std::size_t s) const { return unflatten(spec, draw(s)); }

std::vector<double> PosteriorDraws::series(std::size_t param) const {
  std::vector<double> out(draws());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = params[s * n_params + param];
  return out;
}

std::vector<double> PosteriorDraws::posterior_mean() const {
  std::vector<double> m(n_params, 0.0);
  for (std::size_t s = 0; s < draws(); ++s) {
    for (std::size_t j = 0; j < n_params; ++j) m[j] += params[s * n_params + j];
  }
  for (double& v : m) v /= static_cast<double>(draws());
  return m;
}

PosteriorDraws sample_posterior(const ModelSpec& spec, const Dataset& ds, const Prior& prior,
                                const McmcOptions& opts) {
  spec.validate();
  prior.validate();
  if (opts.chains < 1 || opts.iters < 1 || opts.warmup < 0 || opts.thin < 1) {
    throw InvalidArgument("mcmc needs chains >= 1, iters >= 1, warmup >= 0, thin >= 1");
  }
  if (!(opts.target_accept > 0.0 && opts.target_accept < 1.0)) {
    throw InvalidArgument("target acceptance must lie in (0, 1)");
  }
  if (spec.categories != ds.categories()) throw InvalidArgument("model and dataset disagree on K");
  const std::size_t P = spec.num_params();
  if (!opts.prior_only) {
    if (ds.size() < P) {
      throw InvalidArgument("sampling needs n >= number of parameters (n = " + std::to_string(ds.size()) +
                            ", parameters = " + std::to_string(P) + ")");
    }
    const auto c = ds.counts();
    if (std::count_if(c.begin(), c.end(), [](std::size_t v) { return v > 0; }) < 2) {
      throw InvalidArgument("sampling needs at least two distinct observed categories");
    }
  }

  PosteriorDraws out;
  out.spec = spec;
  out.chains = opts.chains;
  out.iters = opts.iters;
  out.n_params = P;
  out.n_obs = opts.prior_only ? 0 : ds.size();
  out.seed = opts.seed;
  out.data_digest = ds.digest();
  out.names = param_names(spec);

  if (!opts.prior_only) {
    const auto counts = ds.counts();
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] == 0) {
        out.warnings.push_back({"zero_count_category", "category " + std::to_string(k + 1) + " has no observations"});
      }
    }
  }

  const Target target{spec, ds, prior, opts.prior_only};
  const double scale = opts.prior_only ? 1.0 : static_cast<double>(ds.size());
  const Objective neg = [&](std::span<const double> u) { return -target(u, nullptr) / scale; };
  ParamSet start;
  if (opts.prior_only) {
    start = unflatten(spec, std::vector<double>(P, 0.0));
    for (std::size_t k = 0; k < start.tau.size(); ++k) start.tau[k] = static_cast<double>(k) - 0.5 * static_cast<double>(start.tau.size() - 1);
  } else {
    start = initial_params(spec, ds);
  }
  OptimizeOptions oo;
  oo.gradient_tol = 1e-6;
  const auto mode = minimize(neg, to_unconstrained(spec, start), oo);
  if (!std::isfinite(mode.value)) throw NumericalError("the posterior density is zero at every starting point tried");

  const auto Pi = static_cast<Eigen::Index>(P);
  Eigen::MatrixXd H = scale * fd_hessian(neg, mode.x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  Eigen::VectorXd ev = eig.eigenvalues();
  const double floor = std::max(1e-8, 1e-8 * ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < Pi; ++i) ev(i) = 1.0 / std::max(std::fabs(ev(i)), floor);
  // Cap proposal variances so a flat direction cannot launch chains far away.
  for (Eigen::Index i = 0; i < Pi; ++i) ev(i) = std::min(ev(i), 100.0);
  const Eigen::MatrixXd cov0 = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();

  std::vector<ChainResult> results(static_cast<std::size_t>(opts.chains));
  std::vector<std::exception_ptr> errors(results.size());
  auto work = [&](int c) {
    try {
      results[static_cast<std::size_t>(c)] = run_chain(target, mode.x, cov0, opts, c);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  if (opts.parallel && opts.chains > 1) {
    std::vector<std::thread> threads;
    for (int c = 0; c < opts.chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  } else {
    for (int c = 0; c < opts.chains; ++c) work(c);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& r : results) {
    if (r.finite_proposals == 0) throw NumericalError("every proposal had zero posterior density (divergent target)");
    out.params.insert(out.params.end(), r.params.begin(), r.params.end());
    out.unconstrained.insert(out.unconstrained.end(), r.unconstrained.begin(), r.unconstrained.end());
    out.pointwise_loglik.insert(out.pointwise_loglik.end(), r.pointwise.begin(), r.pointwise.end());
    out.acceptance.push_back(r.acceptance);
  }

  if (opts.chains >= 2 && out.draws() >= 100 && opts.iters >= 4) {
    for (const auto& st : convergence_stats(out)) {
      if (st.rhat > 1.05) {
        out.warnings.push_back({"rhat", "Rhat for " + st.name + " is " + format_double(st.rhat) + " (> 1.05)"});
      }
    }
  }
  return out;
}

ConvergenceStat convergence_stat(std::span<const double> values, int chains, int iters) {
  if (chains < 1 || iters < 4 || values.size() != static_cast<std::size_t>(chains) * static_cast<std::size_t>(iters)) {
    throw InvalidArgument("convergence statistics need consistent chains x iters with iters >= 4");
  }
  const std::size_t half = static_cast<std::size_t>(iters) / 2;
  const std::size_t m = 2 * static_cast<std::size_t>(chains);
  std::vector<std::span<const double>> seqs;
  for (int c = 0; c < chains; ++c) {
    const auto chain = values.subspan(static_cast<std::size_t>(c) * static_cast<std::size_t>(iters),
                                      static_cast<std::size_t>(iters));
    seqs.push_back(chain.subspan(0, half));
    seqs.push_back(chain.subspan(static_cast<std::size_t>(iters) - half, half));
  }
  const double n = static_cast<double>(half);
  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean(seqs[j]);
    vars[j] = variance(seqs[j]);
  }
  const double W = mean(vars);
  const double B_over_n = variance(means);
  const double var_plus = (n - 1.0) / n * W + B_over_n;

  ConvergenceStat st;
  const double total = static_cast<double>(values.size());
  if (!(W > 0.0)) {
    st.degenerate = true;
    st.rhat = B_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    st.ess = B_over_n > 0.0 ? 0.0 : total;
    return st;
  }
  st.rhat = std::sqrt(var_plus / W);

  // Autocovariances with divisor n, averaged across sequences.
  auto mean_acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double a = 0.0;
      for (std::size_t t = 0; t + lag < half; ++t) a += (seqs[j][t] - means[j]) * (seqs[j][t + lag] - means[j]);
      s += a / n;
    }
    return s / static_cast<double>(m);
  };
  auto rho = [&](std::size_t lag) { return 1.0 - (W - mean_acov(lag)) / var_plus; };

  // Geyer's initial monotone positive sequence.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < half; ++k) {
    double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / std::log10(total));
  st.ess = total / tau;
  return st;
}

std::vector<ConvergenceStat> convergence_stats(const PosteriorDraws& draws) {
  if (draws.chains < 2 || draws.draws() < 100) {
    throw InvalidArgument("convergence statistics need >= 2 chains and >= 100 post-warmup draws");
  }
  std::vector<ConvergenceStat> out;
  for (std::size_t j = 0; j < draws.n_params; ++j) {
    auto st = convergence_stat(draws.series(j), draws.chains, draws.iters);
    st.name = draws.names[j];
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<BandRow> fragility_bands(const PosteriorDraws& draws, const ModelSpec& spec,
                                     std::span<const double> im_grid, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("band level must lie in (0, 1)");
  if (!(spec == draws.spec)) throw InvalidArgument("draws were produced for a different model");
  if (im_grid.empty()) throw InvalidArgument("im grid is empty");
  if (draws.draws() == 0) throw InvalidArgument("no posterior draws");
  std::vector<double> grid(im_grid.begin(), im_grid.end());
  for (double im : grid) {
    if (!(im > 0.0)) throw InvalidArgument("im grid values must be positive");
  }
  std::sort(grid.begin(), grid.end());
  const auto K = static_cast<std::size_t>(spec.categories);
  const double lo_p = 0.5 * (1.0 - level), hi_p = 0.5 * (1.0 + level);
  std::vector<ParamSet> sets;
  sets.reserve(draws.draws());
  for (std::size_t s = 0; s < draws.draws(); ++s) sets.push_back(draws.param_set(s));

  std::vector<BandRow> rows;
  std::vector<std::vector<double>> fr(K - 1), pk(K);
  for (double im : grid) {
    const double x = std::log(im);
    for (auto& v : fr) v.clear();
    for (auto& v : pk) v.clear();
    for (const auto& p : sets) {
      const auto probs = category_probs(spec, p, x);
      double tail = 0.0;
      for (std::size_t j = K - 1; j > 0; --j) {
        tail += probs[j];
        fr[j - 1].push_back(tail);
      }
      for (std::size_t j = 0; j < K; ++j) pk[j].push_back(probs[j]);
    }
    auto push = [&](std::vector<double>& v, int k, BandQuantity q) {
      std::sort(v.begin(), v.end());
      rows.push_back({im, k, q, quantile_sorted(v, 0.5), quantile_sorted(v, lo_p), quantile_sorted(v, hi_p)});
    };
    for (std::size_t j = 0; j + 1 < K; ++j) push(fr[j], static_cast<int>(j + 1), BandQuantity::exceedance);
    for (std::size_t j = 0; j < K; ++j) push(pk[j], static_cast<int>(j + 1), BandQuantity::category);
  }
  return rows;
}

}  // namespace fragility
