#include "fragility/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fragility/error.hpp"
#include "fragility/optimize.hpp"

namespace fragility {

namespace {

std::size_t distinct_categories(const Dataset& ds) {
  const auto c = ds.counts();
  return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](std::size_t v) { return v > 0; }));
}

// Neumaier-compensated sum. Plain accumulation over ~1e4 terms leaves
// rounding noise large enough to swamp finite-difference gradients.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    carry += std::fabs(sum) >= std::fabs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace

double log_likelihood(const ModelSpec& spec, const ParamSet& params, const Dataset& ds) {
  CompensatedSum total;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double lp = log_category_prob(spec, params, ds.log_im(i), ds.state(i));
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    total.add(lp);
  }
  return total.value();
}

LogLikelihood log_likelihood_floored(const ModelSpec& spec, const ParamSet& params, const Dataset& ds) {
  LogLikelihood out;
  out.pointwise.resize(ds.size());
  CompensatedSum total;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double lp = log_category_prob(spec, params, ds.log_im(i), ds.state(i));
    if (!(lp >= kLogProbFloor)) {
      lp = kLogProbFloor;
      ++out.floored;
    }
    out.pointwise[i] = lp;
    total.add(lp);
  }
  out.total = total.value();
  return out;
}

ParamSet initial_params(const ModelSpec& spec, const Dataset& ds) {
  const auto K = static_cast<std::size_t>(spec.categories);
  const double n = static_cast<double>(ds.size());
  ParamSet p;
  if (spec.family == Family::mlogit) {
    const auto c = ds.counts();
    for (std::size_t k = 1; k < K; ++k) {
      p.tau.push_back(std::log((static_cast<double>(c[k]) + 0.5) / (static_cast<double>(c[0]) + 0.5)));
    }
    p.beta.assign(spec.intercept_only ? 1 : K - 1, 0.0);
    return p;
  }
  const auto cum = empirical_cum_freq(ds);
  const double lo = 0.5 / n, hi = 1.0 - 0.5 / n;
  double prev = -std::numeric_limits<double>::infinity();
  for (double f : cum) {
    double t = link_quantile(spec.link, std::clamp(f, lo, hi));
    if (t <= prev + 1e-3) t = prev + 1e-3;
    p.tau.push_back(t);
    prev = t;
  }
  p.beta.assign((spec.cs && !spec.intercept_only) ? K - 1 : 1, 0.0);
  p.gamma = 0.0;
  return p;
}

std::vector<double> MleFit::z_values() const {
  std::vector<double> z(estimate_vector.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = se[i] > 0.0 ? estimate_vector[i] / se[i] : std::nan("");
  return z;
}

MleFit fit_mle(const ModelSpec& spec, const Dataset& ds, const FitOptions& opts) {
  spec.validate();
  if (spec.categories != ds.categories()) {
    throw InvalidArgument("model has K = " + std::to_string(spec.categories) + " but the dataset has K = " +
                          std::to_string(ds.categories()));
  }
  const std::size_t P = spec.num_params();
  if (ds.size() < P) {
    throw InvalidArgument("fit needs n >= number of parameters (n = " + std::to_string(ds.size()) +
                          ", parameters = " + std::to_string(P) + ")");
  }
  if (distinct_categories(ds) < 2) throw InvalidArgument("fit needs at least two distinct observed categories");

  MleFit fit;
  fit.spec = spec;
  fit.names = param_names(spec);
  fit.n_params = P;
  fit.n_obs = ds.size();
  fit.data_digest = ds.digest();

  const auto counts = ds.counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      fit.warnings.push_back({"zero_count_category", "category " + std::to_string(k + 1) +
                                                         " has no observations; its threshold gap is weakly identified"});
    }
  }

  const double n = static_cast<double>(ds.size());
  const Objective objective = [&](std::span<const double> u) {
    try {
      const ParamSet p = from_unconstrained(spec, u);
      return -log_likelihood_floored(spec, p, ds).total / n;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  OptimizeOptions oo;
  oo.gradient_tol = opts.tol;
  oo.max_iter = opts.max_iter;
  oo.fd_rel_step = opts.fd_rel_step;
  if (spec.family != Family::mlogit) {
    // Threshold log-gaps may run to the ordering boundary.
    oo.pinnable.assign(P, false);
    for (int k = 1; k + 1 < spec.categories; ++k) oo.pinnable[static_cast<std::size_t>(k)] = true;
  }
  const auto res = minimize(objective, to_unconstrained(spec, initial_params(spec, ds)), oo);

  fit.unconstrained = res.x;
  fit.estimates = from_unconstrained(spec, res.x);
  fit.estimate_vector = flatten(spec, fit.estimates);
  const auto ll = log_likelihood_floored(spec, fit.estimates, ds);
  fit.loglik = ll.total;
  if (ll.floored > 0) {
    fit.warnings.push_back({"log_floor", std::to_string(ll.floored) + " log-probabilities clipped at ln(1e-300)"});
  }
  fit.converged = res.converged && std::isfinite(fit.loglik);
  fit.iterations = res.iterations;
  fit.gradient_norm = res.gradient_norm;
  fit.message = res.message;
  // Every observation predicted with certainty: the maximum is at infinity.
  if (fit.converged && -fit.loglik < 1e-6 * n) {
    fit.converged = false;
    fit.message = "complete separation";
    fit.warnings.push_back({"separation", "log-likelihood is numerically zero; estimates diverge"});
  }
  if (!fit.converged) {
    fit.warnings.push_back({"not_converged", "optimizer stopped after " + std::to_string(res.iterations) +
                                                 " iterations: " + fit.message + " (gradient norm " +
                                                 std::to_string(res.gradient_norm) + ")"});
  }

  const auto Pi = static_cast<Eigen::Index>(P);
  const Eigen::MatrixXd info = n * fd_hessian(objective, res.x, opts.fd_rel_step);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  const double cutoff = std::max(1e-10, 1e-10 * top);
  std::vector<std::string> weak;
  bool all_boundary = true;
  for (Eigen::Index i = 0; i < Pi; ++i) {
    if (ev(i) > cutoff) continue;
    Eigen::Index dominant = 0;
    eig.eigenvectors().col(i).cwiseAbs().maxCoeff(&dominant);
    const auto d = static_cast<std::size_t>(dominant);
    // A collapsed threshold gap: the ordering constraint is active.
    const bool boundary = spec.family != Family::mlogit && d >= 1 && d + 1 < static_cast<std::size_t>(spec.categories) &&
                          std::exp(res.x[d]) < 1e-3;
    all_boundary = all_boundary && boundary;
    for (Eigen::Index j = 0; j < Pi; ++j) {
      if (std::fabs(eig.eigenvectors()(j, i)) > 0.3) {
        const auto& nm = fit.names[static_cast<std::size_t>(j)];
        if (std::find(weak.begin(), weak.end(), nm) == weak.end()) weak.push_back(nm);
      }
    }
  }
  Eigen::VectorXd inv(Pi);
  for (Eigen::Index i = 0; i < Pi; ++i) inv(i) = ev(i) > cutoff ? 1.0 / ev(i) : 0.0;
  if (!weak.empty()) {
    std::string list;
    for (const auto& w : weak) list += (list.empty() ? "" : ", ") + w;
    const bool zero_counts = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; });
    if (all_boundary) {
      fit.warnings.push_back({"threshold_boundary", "estimate lies on the threshold-ordering boundary (collapsed gap); "
                                                    "pseudo-inverse used for: " + list});
    } else if (fit.converged && !zero_counts) {
      throw NumericalError("observed information is singular for model " + spec.name() +
                           "; weakly identified parameters: " + list);
    } else {
      fit.warnings.push_back({"singular_information", "pseudo-inverse used; weakly identified parameters: " + list});
    }
  }
  fit.unconstrained_cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  const auto Jv = natural_jacobian(spec, res.x);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(Jv.data(), Pi, Pi);
  fit.cov = J * fit.unconstrained_cov * J.transpose();
  fit.se.resize(P);
  for (std::size_t i = 0; i < P; ++i) {
    const double v = fit.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    fit.se[i] = std::sqrt(std::max(v, 0.0));
  }
  return fit;
}

MleFit fit_null(const ModelSpec& spec, const Dataset& ds, const FitOptions& opts) {
  ModelSpec null_spec = spec;
  null_spec.intercept_only = true;
  return fit_mle(null_spec, ds, opts);
}

InfoCriteria info_criteria(const MleFit& fit, const MleFit& null_fit) {
  if (fit.data_digest != null_fit.data_digest || fit.n_obs != null_fit.n_obs) {
    throw InvalidArgument("info_criteria: the two fits were made on different datasets");
  }
  if (!fit.converged || !null_fit.converged) throw InvalidArgument("info_criteria requires converged fits");
  const double n = static_cast<double>(fit.n_obs);
  const double k = static_cast<double>(fit.n_params);
  InfoCriteria ic;
  ic.aic = -2.0 * fit.loglik + 2.0 * k;
  ic.bic = -2.0 * fit.loglik + k * std::log(n);
  ic.mcfadden_r2 = 1.0 - fit.loglik / null_fit.loglik;
  ic.coxsnell_r2 = 1.0 - std::exp(2.0 * (null_fit.loglik - fit.loglik) / n);
  return ic;
}

}  // namespace fragility
