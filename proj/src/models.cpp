#include "fragility/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fragility/error.hpp"

namespace fragility {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t cuts(const ModelSpec& spec) { return static_cast<std::size_t>(spec.categories - 1); }

std::size_t slope_count(const ModelSpec& spec) {
  if (spec.intercept_only) return 0;
  if (spec.family == Family::mlogit || spec.cs) return cuts(spec);
  return 1;
}

bool has_gamma(const ModelSpec& spec) { return spec.vh && !spec.intercept_only; }

bool ordered_thresholds(const ModelSpec& spec) { return spec.family != Family::mlogit; }

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double a : v) s += std::exp(a - m);
  return m + std::log(s);
}

// log(F(hi) - F(lo)) for lo < hi, either bound possibly infinite.
double log_cdf_diff(Link link, double lo, double hi) {
  if (hi == std::numeric_limits<double>::infinity()) {
    return lo == -hi ? 0.0 : link_log_ccdf(link, lo);
  }
  if (lo == kNegInf) return link_log_cdf(link, hi);
  if (link_cdf(link, lo) > 0.5) {
    const double slo = link_log_ccdf(link, lo);
    const double shi = link_log_ccdf(link, hi);
    return slo + std::log1p(-std::exp(shi - slo));
  }
  const double fhi = link_log_cdf(link, hi);
  const double flo = link_log_cdf(link, lo);
  return fhi + std::log1p(-std::exp(flo - fhi));
}

std::vector<double> predictors(const ModelSpec& spec, const ParamSet& params, double x) {
  std::vector<double> eta(cuts(spec));
  for (int k = 1; k <= spec.categories - 1; ++k) eta[static_cast<std::size_t>(k - 1)] = linear_predictor(spec, params, x, k);
  return eta;
}

void require_family(const ModelSpec& spec, Family family, const char* op) {
  if (spec.family != family) {
    throw InvalidArgument(std::string(op) + " called with a " + std::string(to_string(spec.family)) + " model");
  }
}

std::vector<double> cum_log_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  const auto eta = predictors(spec, params, x);
  const auto K = static_cast<std::size_t>(spec.categories);
  std::vector<double> out(K);
  if (spec.cs && !spec.intercept_only) {
    // Cut-points can cross; evaluate differences directly and fail on negatives.
    double prev = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double cur = k + 1 < K ? link_cdf(spec.link, eta[k]) : 1.0;
      const double p = cur - prev;
      if (p < -1e-12) {
        throw NumericalError("cumulative model with category-specific slopes gives a negative probability (" +
                             std::to_string(p) + ") for category " + std::to_string(k + 1) +
                             " at ln(im) = " + std::to_string(x));
      }
      out[k] = p > 0.0 ? std::log(p) : kNegInf;
      prev = cur;
    }
    return out;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const double lo = k == 0 ? kNegInf : eta[k - 1];
    const double hi = k + 1 < K ? eta[k] : std::numeric_limits<double>::infinity();
    out[k] = log_cdf_diff(spec.link, lo, hi);
  }
  return out;
}

std::vector<double> seq_log_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  const auto eta = predictors(spec, params, x);
  const auto K = static_cast<std::size_t>(spec.categories);
  std::vector<double> out(K);
  double survive = 0.0;  // log prod_{j<k} (1 - F(eta_j))
  for (std::size_t k = 0; k + 1 < K; ++k) {
    out[k] = link_log_cdf(spec.link, eta[k]) + survive;
    survive += link_log_ccdf(spec.link, eta[k]);
  }
  out[K - 1] = survive;
  return out;
}

std::vector<double> acat_log_numerators(const ModelSpec& spec, const std::vector<double>& eta) {
  const auto K = static_cast<std::size_t>(spec.categories);
  // num_k = prod_{j<k} (1 - F_j) * prod_{j>=k} F_j, with F_K := 1.
  std::vector<double> lf(K - 1), ls(K - 1);
  for (std::size_t j = 0; j + 1 < K; ++j) {
    lf[j] = link_log_cdf(spec.link, eta[j]);
    ls[j] = link_log_ccdf(spec.link, eta[j]);
  }
  std::vector<double> num(K);
  double tail = std::accumulate(lf.begin(), lf.end(), 0.0);
  double head = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    num[k] = head + tail;
    if (k + 1 < K) {
      head += ls[k];
      tail -= lf[k];
    }
  }
  return num;
}

std::vector<double> normalize_log(std::vector<double> num, const char* what) {
  const double lse = log_sum_exp(num);
  if (!std::isfinite(lse)) {
    throw NumericalError(std::string(what) + ": every category numerator underflowed");
  }
  for (double& v : num) v -= lse;
  return num;
}

std::vector<double> acat_log_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  return normalize_log(acat_log_numerators(spec, predictors(spec, params, x)), "adjacent-category probabilities");
}

std::vector<double> acat_logit_log_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  const auto eta = predictors(spec, params, x);
  const auto K = static_cast<std::size_t>(spec.categories);
  // ln(p_k / p_{k+1}) = eta_k, so ln p_k = sum_{j=k}^{K-1} eta_j + const.
  std::vector<double> num(K, 0.0);
  for (std::size_t k = K - 1; k-- > 0;) num[k] = num[k + 1] + eta[k];
  return normalize_log(std::move(num), "adjacent-category logit probabilities");
}

std::vector<double> mlogit_log_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  const auto K = static_cast<std::size_t>(spec.categories);
  std::vector<double> score(K, 0.0);
  for (std::size_t k = 1; k < K; ++k) {
    const double b = spec.intercept_only ? 0.0 : params.beta[k - 1];
    score[k] = params.tau[k - 1] + b * x;
  }
  return normalize_log(std::move(score), "multinomial logit probabilities");
}

CategoryProbs exp_all(const std::vector<double>& logp) {
  CategoryProbs p(logp.size());
  std::transform(logp.begin(), logp.end(), p.begin(), [](double v) { return std::exp(v); });
  return p;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::cumulative: return "cum";
    case Family::sequential: return "seq";
    case Family::adjacent: return "acat";
    case Family::mlogit: return "mlogit";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (categories < 2) throw InvalidArgument("a model needs at least 2 categories");
  if (family == Family::mlogit) {
    if (link != Link::logit) throw InvalidArgument("mlogit requires the logit link");
    if (vh || cs) throw InvalidArgument("mlogit takes no +vh/+cs flags");
  }
  if (family == Family::cumulative && cs && !unsafe_cumulative_cs) {
    throw InvalidArgument(
        "cum+cs can produce negative probabilities; it must be requested explicitly (unsafe flag)");
  }
}

std::size_t ModelSpec::num_params() const {
  return cuts(*this) + slope_count(*this) + (has_gamma(*this) ? 1 : 0);
}

std::string ModelSpec::name() const {
  std::string out(to_string(family));
  if (vh) out += "+vh";
  if (cs) out += "+cs";
  if (intercept_only) out += "(null)";
  return out;
}

ModelSpec parse_model_name(std::string_view name, int categories, Link link, bool allow_unsafe) {
  ModelSpec spec;
  spec.categories = categories;
  std::vector<std::string> parts;
  std::string cur;
  for (char c : name) {
    if (c == '+') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  parts.push_back(cur);
  const std::string& fam = parts.front();
  if (fam == "cum" || fam == "cumulative") spec.family = Family::cumulative;
  else if (fam == "seq" || fam == "sequential") spec.family = Family::sequential;
  else if (fam == "acat" || fam == "adjacent") spec.family = Family::adjacent;
  else if (fam == "mlogit") spec.family = Family::mlogit;
  else throw InvalidArgument("unknown model family in '" + std::string(name) + "'");
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i] == "vh" && !spec.vh) spec.vh = true;
    else if (parts[i] == "cs" && !spec.cs) spec.cs = true;
    else throw InvalidArgument("unknown or repeated suffix '+" + parts[i] + "' in '" + std::string(name) + "'");
  }
  spec.link = spec.family == Family::mlogit ? Link::logit : link;
  spec.unsafe_cumulative_cs = allow_unsafe && spec.family == Family::cumulative && spec.cs;
  spec.validate();
  return spec;
}

std::vector<std::string> catalog_names() {
  return {"cum", "seq", "acat", "cum+vh", "seq+vh", "acat+vh",
          "seq+vh+cs", "acat+vh+cs", "seq+cs", "acat+cs", "mlogit"};
}

std::vector<ModelSpec> model_catalog(int categories, Link link) {
  std::vector<ModelSpec> out;
  for (const auto& n : catalog_names()) out.push_back(parse_model_name(n, categories, link));
  return out;
}

void validate_params(const ModelSpec& spec, const ParamSet& params) {
  const auto k1 = cuts(spec);
  if (params.tau.size() != k1) {
    throw InvalidArgument("expected " + std::to_string(k1) + " thresholds, got " + std::to_string(params.tau.size()));
  }
  const std::size_t nb = spec.intercept_only ? 1 : slope_count(spec);
  if (!spec.intercept_only && params.beta.size() != nb) {
    throw InvalidArgument("expected " + std::to_string(nb) + " slopes, got " + std::to_string(params.beta.size()));
  }
  for (double v : params.tau) {
    if (!std::isfinite(v)) throw InvalidArgument("thresholds must be finite");
  }
  for (double v : params.beta) {
    if (!std::isfinite(v)) throw InvalidArgument("slopes must be finite");
  }
  if (!std::isfinite(params.gamma)) throw InvalidArgument("gamma must be finite");
  if (ordered_thresholds(spec)) {
    for (std::size_t k = 1; k < k1; ++k) {
      if (!(params.tau[k] > params.tau[k - 1])) {
        throw InvalidArgument("thresholds must be strictly increasing (tau_" + std::to_string(k) + " >= tau_" +
                              std::to_string(k + 1) + ")");
      }
    }
  }
}

std::vector<double> flatten(const ModelSpec& spec, const ParamSet& params) {
  std::vector<double> out(params.tau);
  for (std::size_t i = 0; i < slope_count(spec); ++i) out.push_back(params.beta[i]);
  if (has_gamma(spec)) out.push_back(params.gamma);
  return out;
}

ParamSet unflatten(const ModelSpec& spec, std::span<const double> values) {
  if (values.size() != spec.num_params()) {
    throw InvalidArgument("parameter vector has " + std::to_string(values.size()) + " entries, model " +
                          spec.name() + " needs " + std::to_string(spec.num_params()));
  }
  ParamSet p;
  const auto k1 = cuts(spec);
  p.tau.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k1));
  const auto nb = slope_count(spec);
  if (nb == 0) {
    p.beta = {0.0};
  } else {
    p.beta.assign(values.begin() + static_cast<std::ptrdiff_t>(k1),
                  values.begin() + static_cast<std::ptrdiff_t>(k1 + nb));
  }
  p.gamma = has_gamma(spec) ? values[k1 + nb] : 0.0;
  return p;
}

std::vector<std::string> param_names(const ModelSpec& spec) {
  std::vector<std::string> out;
  const auto k1 = cuts(spec);
  const bool ml = spec.family == Family::mlogit;
  for (std::size_t k = 1; k <= k1; ++k) out.push_back((ml ? "a" + std::to_string(k + 1) : "tau" + std::to_string(k)));
  const auto nb = slope_count(spec);
  if (nb == 1) {
    out.emplace_back("beta");
  } else {
    for (std::size_t k = 1; k <= nb; ++k) out.push_back(ml ? "b" + std::to_string(k + 1) : "beta" + std::to_string(k));
  }
  if (has_gamma(spec)) out.emplace_back("gamma");
  return out;
}

std::vector<double> to_unconstrained(const ModelSpec& spec, const ParamSet& params) {
  auto u = flatten(spec, params);
  if (ordered_thresholds(spec)) {
    for (std::size_t k = 1; k < cuts(spec); ++k) {
      const double gap = params.tau[k] - params.tau[k - 1];
      if (!(gap > 0.0)) throw InvalidArgument("thresholds must be strictly increasing");
      u[k] = std::log(gap);
    }
  }
  return u;
}

ParamSet from_unconstrained(const ModelSpec& spec, std::span<const double> u) {
  std::vector<double> nat(u.begin(), u.end());
  if (ordered_thresholds(spec)) {
    for (std::size_t k = 1; k < cuts(spec); ++k) nat[k] = nat[k - 1] + std::exp(u[k]);
  }
  return unflatten(spec, nat);
}

double log_jacobian(const ModelSpec& spec, std::span<const double> u) {
  if (!ordered_thresholds(spec)) return 0.0;
  double s = 0.0;
  for (std::size_t k = 1; k < cuts(spec); ++k) s += u[k];
  return s;
}

std::vector<double> natural_jacobian(const ModelSpec& spec, std::span<const double> u) {
  const std::size_t P = u.size();
  std::vector<double> J(P * P, 0.0);
  for (std::size_t i = 0; i < P; ++i) J[i * P + i] = 1.0;
  if (ordered_thresholds(spec)) {
    // tau_k = u_0 + sum_{j=1..k} exp(u_j)
    for (std::size_t k = 0; k < cuts(spec); ++k) {
      J[k * P + 0] = 1.0;
      for (std::size_t j = 1; j < P && j <= k; ++j) J[k * P + j] = std::exp(u[j]);
      for (std::size_t j = k + 1; j < cuts(spec); ++j) J[k * P + j] = 0.0;
    }
  }
  return J;
}

double linear_predictor(const ModelSpec& spec, const ParamSet& params, double x, int k) {
  const double tau = params.tau[static_cast<std::size_t>(k - 1)];
  if (spec.intercept_only) return tau;
  const double loc = tau - params.slope(k) * x;
  return spec.vh ? loc / std::exp(params.gamma * x) : loc;
}

CategoryProbs cum_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  require_family(spec, Family::cumulative, "cum_probs");
  return exp_all(cum_log_probs(spec, params, x));
}

CategoryProbs seq_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  require_family(spec, Family::sequential, "seq_probs");
  return exp_all(seq_log_probs(spec, params, x));
}

CategoryProbs acat_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  require_family(spec, Family::adjacent, "acat_probs");
  return exp_all(acat_log_probs(spec, params, x));
}

CategoryProbs acat_logit_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  require_family(spec, Family::adjacent, "acat_logit_probs");
  return exp_all(acat_logit_log_probs(spec, params, x));
}

CategoryProbs mlogit_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  require_family(spec, Family::mlogit, "mlogit_probs");
  return exp_all(mlogit_log_probs(spec, params, x));
}

std::vector<double> log_category_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  switch (spec.family) {
    case Family::cumulative: return cum_log_probs(spec, params, x);
    case Family::sequential: return seq_log_probs(spec, params, x);
    case Family::adjacent: return acat_log_probs(spec, params, x);
    case Family::mlogit: return mlogit_log_probs(spec, params, x);
  }
  return {};
}

CategoryProbs category_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  return exp_all(log_category_probs(spec, params, x));
}

double log_category_prob(const ModelSpec& spec, const ParamSet& params, double x, int y) {
  const int K = spec.categories;
  if (spec.family == Family::cumulative && !(spec.cs && !spec.intercept_only)) {
    const double lo = y == 1 ? kNegInf : linear_predictor(spec, params, x, y - 1);
    const double hi = y == K ? std::numeric_limits<double>::infinity() : linear_predictor(spec, params, x, y);
    return log_cdf_diff(spec.link, lo, hi);
  }
  if (spec.family == Family::sequential) {
    double out = 0.0;
    for (int j = 1; j < y; ++j) out += link_log_ccdf(spec.link, linear_predictor(spec, params, x, j));
    if (y < K) out += link_log_cdf(spec.link, linear_predictor(spec, params, x, y));
    return out;
  }
  return log_category_probs(spec, params, x)[static_cast<std::size_t>(y - 1)];
}

double exceedance_prob(const ModelSpec& spec, const ParamSet& params, double x, int k) {
  if (k < 1 || k > spec.categories) throw InvalidArgument("exceedance index out of range");
  if (k == spec.categories) return 0.0;
  const auto p = category_probs(spec, params, x);
  double tail = 0.0;
  for (std::size_t j = static_cast<std::size_t>(k); j < p.size(); ++j) tail += p[j];
  return tail;
}

std::vector<double> exceedance_probs(const ModelSpec& spec, const ParamSet& params, double x) {
  const auto p = category_probs(spec, params, x);
  std::vector<double> fr(p.size() - 1);
  double tail = 0.0;
  for (std::size_t j = p.size() - 1; j > 0; --j) {
    tail += p[j];
    fr[j - 1] = tail;
  }
  return fr;
}

double continuation_chain_product(const ModelSpec& spec, const ParamSet& params, double x, int k) {
  if (k < 1 || k > spec.categories - 1) throw InvalidArgument("continuation chain index out of range");
  double log_prod = 0.0;
  for (int j = 1; j <= k; ++j) log_prod += link_log_cdf(spec.link, -linear_predictor(spec, params, x, j));
  return std::exp(log_prod);
}

double seq_exceedance_chain(const ModelSpec& spec, const ParamSet& params, double x, int k) {
  require_family(spec, Family::sequential, "seq_exceedance_chain");
  if (!is_symmetric(spec.link)) {
    throw InvalidArgument(
        "the continuation-product form needs a symmetric link; for cloglog use 1 - sum of seq_probs");
  }
  return continuation_chain_product(spec, params, x, k);
}

LognormalFragility cum_to_lognormal(const ModelSpec& spec, const ParamSet& params) {
  if (spec.family != Family::cumulative || spec.link != Link::probit || spec.cs || spec.intercept_only) {
    throw InvalidArgument("lognormal form exists only for the cumulative probit model with a shared slope");
  }
  if (spec.vh) throw InvalidArgument("variance-heterogeneous models have no closed lognormal form");
  const double beta = params.beta.at(0);
  if (!(beta > 0.0)) throw InvalidArgument("lognormal form requires beta > 0 (fragility must increase with im)");
  LognormalFragility out;
  out.log_sd = 1.0 / beta;
  for (double t : params.tau) out.median.push_back(std::exp(t / beta));
  return out;
}

CurveTable exceedance_curve(const ModelSpec& spec, const ParamSet& params, std::span<const double> im_grid) {
  CurveTable table;
  for (double im : im_grid) {
    if (!(im > 0.0)) throw InvalidArgument("im grid values must be positive");
  }
  table.im.assign(im_grid.begin(), im_grid.end());
  std::sort(table.im.begin(), table.im.end());
  for (double im : table.im) {
    const double x = std::log(im);
    table.category.push_back(category_probs(spec, params, x));
    const auto& p = table.category.back();
    std::vector<double> fr(p.size() - 1);
    double tail = 0.0;
    for (std::size_t j = p.size() - 1; j > 0; --j) {
      tail += p[j];
      fr[j - 1] = tail;
    }
    table.exceedance.push_back(std::move(fr));
  }
  return table;
}

int sample_category(const CategoryProbs& probs, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k + 1);
  }
  return static_cast<int>(probs.size());
}

}  // namespace fragility
