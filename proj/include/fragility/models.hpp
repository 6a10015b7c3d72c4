#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fragility/links.hpp"

namespace fragility {

enum class Family { cumulative, sequential, adjacent, mlogit };

std::string_view to_string(Family family);

// Identifies one model: family x link x {category-specific slopes,
// variance heterogeneity}. Mlogit always uses the logit link.
struct ModelSpec {
  Family family = Family::cumulative;
  Link link = Link::probit;
  bool cs = false;  // one slope per cut-point equation
  bool vh = false;  // latent scale exp(gamma * ln im)
  int categories = 5;
  // Slopes and scale fixed at zero; only thresholds are free. Used for the
  // null model of the pseudo-R2 statistics.
  bool intercept_only = false;
  // Cumulative + cs can produce negative probabilities and must be requested
  // explicitly; evaluation then fails loudly wherever that happens.
  bool unsafe_cumulative_cs = false;

  void validate() const;
  std::size_t num_params() const;
  // Lowercase family plus "+vh" / "+cs" suffixes, e.g. "seq+vh+cs".
  std::string name() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Accepts the catalog spelling (suffixes in any order). Cumulative + cs is
// rejected unless allow_unsafe is set.
ModelSpec parse_model_name(std::string_view name, int categories = 5, Link link = Link::probit,
                           bool allow_unsafe = false);

// The eleven catalog models, in catalog order fit_sc01..fit_sc11.
std::vector<ModelSpec> model_catalog(int categories = 5, Link link = Link::probit);
std::vector<std::string> catalog_names();

// Thresholds tau (K-1), slopes beta (1 shared, or K-1 when cs) and scale slope
// gamma. For mlogit tau holds the K-1 intercepts and beta the K-1 slopes of
// categories 2..K against category 1.
struct ParamSet {
  std::vector<double> tau;
  std::vector<double> beta{0.0};
  double gamma = 0.0;

  double slope(int k) const { return beta.size() == 1 ? beta[0] : beta[static_cast<std::size_t>(k - 1)]; }
};

// Throws InvalidArgument on wrong sizes, non-finite values or unordered tau.
void validate_params(const ModelSpec& spec, const ParamSet& params);

// Natural-scale parameter vector in the order tau, beta, gamma.
std::vector<double> flatten(const ModelSpec& spec, const ParamSet& params);
ParamSet unflatten(const ModelSpec& spec, std::span<const double> values);
std::vector<std::string> param_names(const ModelSpec& spec);

// Unconstrained coordinates used by the optimizer and sampler: tau_1 free,
// tau_k = tau_{k-1} + exp(delta_k). Mlogit has no constraint.
std::vector<double> to_unconstrained(const ModelSpec& spec, const ParamSet& params);
ParamSet from_unconstrained(const ModelSpec& spec, std::span<const double> u);
// log |d natural / d unconstrained| = sum of the delta_k.
double log_jacobian(const ModelSpec& spec, std::span<const double> u);
// Dense Jacobian d natural / d unconstrained, row-major P x P.
std::vector<double> natural_jacobian(const ModelSpec& spec, std::span<const double> u);

using CategoryProbs = std::vector<double>;

/// Cut-point predictor (tau_k - beta_k x) / exp(gamma x), k in 1..K-1. The
/// scale term has no constant, so gamma = 0 or x = 0 gives tau_k - beta_k x.
double linear_predictor(const ModelSpec& spec, const ParamSet& params, double x, int k);

// Category probabilities for each family, x = ln(im).
CategoryProbs cum_probs(const ModelSpec& spec, const ParamSet& params, double x);
CategoryProbs seq_probs(const ModelSpec& spec, const ParamSet& params, double x);
CategoryProbs acat_probs(const ModelSpec& spec, const ParamSet& params, double x);
// Adjacent-category probabilities built from the local logits
// ln(p_k / p_{k+1}) = eta_k, independent of the spec's link.
CategoryProbs acat_logit_probs(const ModelSpec& spec, const ParamSet& params, double x);
CategoryProbs mlogit_probs(const ModelSpec& spec, const ParamSet& params, double x);

CategoryProbs category_probs(const ModelSpec& spec, const ParamSet& params, double x);
std::vector<double> log_category_probs(const ModelSpec& spec, const ParamSet& params, double x);
// ln P(Y = y | x) without materialising the other categories where possible.
double log_category_prob(const ModelSpec& spec, const ParamSet& params, double x, int y);

/// P(DS > k | x), strict convention; k = K gives 0.
double exceedance_prob(const ModelSpec& spec, const ParamSet& params, double x, int k);
// Fr_1..Fr_{K-1} at x.
std::vector<double> exceedance_probs(const ModelSpec& spec, const ParamSet& params, double x);

/// Sequential exceedance as a continuation product prod_{j<=k} F(-eta_j).
/// Only valid for symmetric links; cloglog throws and the caller should use
/// 1 - sum of seq_probs instead.
double seq_exceedance_chain(const ModelSpec& spec, const ParamSet& params, double x, int k);
// Same product without the symmetry guard.
double continuation_chain_product(const ModelSpec& spec, const ParamSet& params, double x, int k);

struct LognormalFragility {
  std::vector<double> median;  // theta_k = exp(tau_k / beta)
  double log_sd = 0.0;         // 1 / beta
};

// Cumulative probit with shared beta > 0 and no vh, written as lognormal
// fragility curves Phi(ln(x / theta_k) / log_sd).
LognormalFragility cum_to_lognormal(const ModelSpec& spec, const ParamSet& params);

struct CurveTable {
  std::vector<double> im;
  std::vector<std::vector<double>> exceedance;  // [row][k-1], k = 1..K-1
  std::vector<std::vector<double>> category;    // [row][k-1], k = 1..K
};

CurveTable exceedance_curve(const ModelSpec& spec, const ParamSet& params,
                            std::span<const double> im_grid);

// Index of the sampled category (1..K) for a uniform draw u.
int sample_category(const CategoryProbs& probs, double u);

}  // namespace fragility
