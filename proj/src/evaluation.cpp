#include "fragility/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fragility/error.hpp"
#include "fragility/rng.hpp"
#include "fragility/stats.hpp"

namespace fragility {

std::vector<double> PointwiseLogLik::column(std::size_t i) const {
  std::vector<double> c(draws);
  for (std::size_t s = 0; s < draws; ++s) c[s] = values[s * n + i];
  return c;
}

PointwiseLogLik make_pointwise(std::size_t draws, std::size_t n, std::vector<double> values) {
  if (values.size() != draws * n) throw InvalidArgument("pointwise matrix has the wrong number of entries");
  PointwiseLogLik p;
  p.draws = draws;
  p.n = n;
  p.values = std::move(values);
  return p;
}

PointwiseLogLik pointwise_loglik(const PosteriorDraws& draws, const ModelSpec& spec, const Dataset& ds) {
  if (!(spec == draws.spec)) throw InvalidArgument("draws were produced for a different model");
  if (draws.data_digest != ds.digest()) throw InvalidArgument("draws were produced on a different dataset");
  PointwiseLogLik p;
  p.draws = draws.draws();
  p.n = ds.size();
  p.values.reserve(p.draws * p.n);
  for (std::size_t s = 0; s < p.draws; ++s) {
    const auto ll = log_likelihood_floored(spec, draws.param_set(s), ds);
    p.floored += ll.floored;
    p.values.insert(p.values.end(), ll.pointwise.begin(), ll.pointwise.end());
  }
  return p;
}

WaicDic waic(const PointwiseLogLik& pll) {
  if (pll.draws < 2) throw InvalidArgument("WAIC needs at least 2 draws");
  WaicDic out;
  std::vector<double> elpd_i(pll.n);
  for (std::size_t i = 0; i < pll.n; ++i) {
    const auto c = pll.column(i);
    const double lp = log_sum_exp(c) - std::log(static_cast<double>(c.size()));
    const double v = variance(c);
    out.lppd += lp;
    out.p_waic += v;
    elpd_i[i] = lp - v;
  }
  out.elpd_waic = out.lppd - out.p_waic;
  out.waic = -2.0 * out.elpd_waic;
  out.se_waic = std::sqrt(static_cast<double>(pll.n) * variance(elpd_i));
  return out;
}

WaicDic waic_dic(const PointwiseLogLik& pll, const PosteriorDraws& draws, const Dataset& ds) {
  if (pll.draws != draws.draws() || pll.n != ds.size()) {
    throw InvalidArgument("pointwise log-likelihood does not match the draws/dataset");
  }
  WaicDic out = waic(pll);
  double mean_ll = 0.0;
  for (double v : pll.values) mean_ll += v;
  mean_ll /= static_cast<double>(pll.draws);
  out.mean_deviance = -2.0 * mean_ll;
  std::vector<double> u_mean(draws.n_params, 0.0);
  for (std::size_t s = 0; s < draws.draws(); ++s) {
    const auto u = draws.unconstrained_draw(s);
    for (std::size_t j = 0; j < u.size(); ++j) u_mean[j] += u[j];
  }
  for (double& v : u_mean) v /= static_cast<double>(draws.draws());
  const ParamSet at_mean = from_unconstrained(draws.spec, u_mean);
  out.deviance_at_mean = -2.0 * log_likelihood_floored(draws.spec, at_mean, ds).total;
  out.p_dic = out.mean_deviance - out.deviance_at_mean;
  out.dic = out.deviance_at_mean + 2.0 * out.p_dic;
  return out;
}

double gpd_quantile(double p, double k, double sigma) {
  if (!(sigma > 0.0)) return std::nan("");
  if (k == 0.0) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

GpdFit gpd_fit(std::span<const double> x) {
  const std::size_t N = x.size();
  if (N < 2) throw InvalidArgument("GPD fit needs at least 2 exceedances");
  constexpr double prior = 3.0;
  const std::size_t M = 30 + static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(N))));
  const double xstar = x[static_cast<std::size_t>(std::floor(static_cast<double>(N) / 4.0 + 0.5)) - 1];
  std::vector<double> theta(M), l_theta(M);
  for (std::size_t j = 0; j < M; ++j) {
    theta[j] = 1.0 / x[N - 1] +
               (1.0 - std::sqrt(static_cast<double>(M) / (static_cast<double>(j + 1) - 0.5))) / prior / xstar;
    double kk = 0.0;
    for (double v : x) kk += std::log1p(-theta[j] * v);
    kk /= static_cast<double>(N);
    l_theta[j] = static_cast<double>(N) * (std::log(-theta[j] / kk) - kk - 1.0);
  }
  const double lse = log_sum_exp(l_theta);
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    const double w = std::exp(l_theta[j] - lse);
    if (std::isfinite(w)) theta_hat += theta[j] * w;
  }
  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(N);
  GpdFit fit;
  fit.sigma = -k / theta_hat;
  const double n = static_cast<double>(N);
  fit.k = k * n / (n + 10.0) + 10.0 * 0.5 / (n + 10.0);
  if (!std::isfinite(fit.k)) fit.k = std::numeric_limits<double>::infinity();
  return fit;
}

double psis_smooth(std::vector<double>& lw) {
  const std::size_t S = lw.size();
  const double mx = *std::max_element(lw.begin(), lw.end());
  const double mn = *std::min_element(lw.begin(), lw.end());
  for (double& v : lw) v -= mx;
  if (mx == mn) return kParetoKConstant;
  const auto M = std::min(static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(S))),
                          static_cast<std::size_t>(std::ceil(3.0 * std::sqrt(static_cast<double>(S)))));
  if (M < 5 || M >= S) return std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(S);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });
  const double cutoff = lw[order[S - M - 1]];
  const double exp_cutoff = std::exp(cutoff);
  // Repeated draws leave ties at the cutoff; only strictly positive
  // exceedances enter the fit and get smoothed.
  std::vector<double> tail;
  std::vector<std::size_t> where;
  for (std::size_t j = S - M; j < S; ++j) {
    const double e = std::exp(lw[order[j]]) - exp_cutoff;
    if (e > 0.0) {
      tail.push_back(e);
      where.push_back(order[j]);
    }
  }
  if (tail.size() < 2) return kParetoKConstant;
  const auto fit = gpd_fit(tail);
  if (std::isfinite(fit.k) && tail.size() >= 5) {
    const auto m = static_cast<double>(tail.size());
    for (std::size_t j = 0; j < tail.size(); ++j) {
      const double p = (static_cast<double>(j) + 0.5) / m;
      const double q = gpd_quantile(p, fit.k, fit.sigma) + exp_cutoff;
      // Truncate at the largest raw weight (0 after the shift).
      lw[where[j]] = std::min(std::log(q), 0.0);
    }
  }
  return fit.k;
}

ParetoKSummary summarize_pareto_k(std::span<const double> k) {
  ParetoKSummary s;
  for (double v : k) {
    if (v > kParetoKBad) ++s.bad;
    else if (v > kParetoKWarn) ++s.warn;
    else ++s.good;
    s.max = std::max(s.max, v);
  }
  return s;
}

PsisLoo psis_loo(const PointwiseLogLik& pll) {
  if (pll.draws < 2 || pll.n == 0) throw InvalidArgument("PSIS-LOO needs at least 2 draws and 1 observation");
  PsisLoo out;
  if (pll.draws < 100) {
    out.warnings.push_back({"few_draws", "PSIS-LOO with " + std::to_string(pll.draws) +
                                             " draws; at least 100 are recommended"});
  }
  out.pointwise.resize(pll.n);
  out.pareto_k.resize(pll.n);
  for (std::size_t i = 0; i < pll.n; ++i) {
    const auto ll = pll.column(i);
    std::vector<double> lw(ll.size());
    for (std::size_t s = 0; s < ll.size(); ++s) lw[s] = -ll[s];
    out.pareto_k[i] = psis_smooth(lw);
    std::vector<double> num(ll.size());
    for (std::size_t s = 0; s < ll.size(); ++s) num[s] = lw[s] + ll[s];
    out.pointwise[i] = log_sum_exp(num) - log_sum_exp(lw);
    out.lppd += log_sum_exp(ll) - std::log(static_cast<double>(ll.size()));
  }
  out.elpd_loo = std::accumulate(out.pointwise.begin(), out.pointwise.end(), 0.0);
  out.se_elpd = std::sqrt(static_cast<double>(pll.n) * variance(out.pointwise));
  out.p_loo = out.lppd - out.elpd_loo;
  out.k_summary = summarize_pareto_k(out.pareto_k);
  if (out.k_summary.warn + out.k_summary.bad > 0) {
    out.warnings.push_back({"pareto_k", std::to_string(out.k_summary.warn + out.k_summary.bad) +
                                            " observations have Pareto k > 0.7 (" +
                                            std::to_string(out.k_summary.bad) + " above 1.0)"});
  }
  return out;
}

ExactLoo exact_loo_oracle(const ModelSpec& spec, const Dataset& ds, const Prior& prior, const McmcOptions& mcmc) {
  if (ds.size() > kExactLooMaxN) {
    throw InvalidArgument("exact LOO refits the model n times and is limited to n <= 200; use psis_loo instead");
  }
  if (ds.size() < 2) throw InvalidArgument("exact LOO needs at least 2 observations");
  ExactLoo out;
  out.pointwise.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    McmcOptions opts = mcmc;
    opts.seed = derive_seed(mcmc.seed, i + 1);
    opts.store_pointwise = false;
    const auto draws = sample_posterior(spec, ds.without(i), prior, opts);
    std::vector<double> lp(draws.draws());
    for (std::size_t s = 0; s < lp.size(); ++s) {
      lp[s] = std::max(log_category_prob(spec, draws.param_set(s), ds.log_im(i), ds.state(i)), kLogProbFloor);
    }
    out.pointwise[i] = log_sum_exp(lp) - std::log(static_cast<double>(lp.size()));
  }
  out.elpd_exact = std::accumulate(out.pointwise.begin(), out.pointwise.end(), 0.0);
  return out;
}

std::vector<ComparisonRow> compare_models(std::span<const ModelElpd> models) {
  if (models.empty()) throw InvalidArgument("nothing to compare");
  const std::size_t n = models.front().pointwise_elpd.size();
  for (const auto& m : models) {
    if (m.pointwise_elpd.size() != n) {
      throw InvalidArgument("model " + m.name + " was evaluated on " + std::to_string(m.pointwise_elpd.size()) +
                            " observations, expected " + std::to_string(n));
    }
  }
  std::vector<double> elpd(models.size());
  for (std::size_t j = 0; j < models.size(); ++j) {
    elpd[j] = std::accumulate(models[j].pointwise_elpd.begin(), models[j].pointwise_elpd.end(), 0.0);
  }
  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return elpd[a] > elpd[b]; });
  const auto& best = models[order.front()].pointwise_elpd;
  std::vector<ComparisonRow> rows;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& m = models[order[r]];
    ComparisonRow row;
    row.model = m.name;
    row.n_params = m.n_params;
    row.elpd_loo = elpd[order[r]];
    row.se_elpd = std::sqrt(static_cast<double>(n) * variance(m.pointwise_elpd));
    if (r > 0) {
      std::vector<double> diff(n);
      for (std::size_t i = 0; i < n; ++i) diff[i] = m.pointwise_elpd[i] - best[i];
      row.elpd_diff = row.elpd_loo - elpd[order.front()];
      row.se_diff = std::sqrt(static_cast<double>(n) * variance(diff));
    }
    row.rank = static_cast<int>(r + 1);
    row.significant = std::fabs(row.elpd_diff) > 4.0 && std::fabs(row.elpd_diff) > 2.0 * row.se_diff;
    row.pareto_k = summarize_pareto_k(m.pareto_k);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fragility
