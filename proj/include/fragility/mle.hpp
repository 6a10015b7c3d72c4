#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fragility/data.hpp"
#include "fragility/models.hpp"

namespace fragility {

// Non-fatal condition attached to a result (zero-count category, high Rhat,
// large Pareto k, floored log-probabilities, ...).
struct Warning {
  std::string code;
  std::string message;
};

inline constexpr double kLogProbFloor = -690.77552789821368;  // ln(1e-300)

struct LogLikelihood {
  double total = 0.0;
  std::vector<double> pointwise;
  std::size_t floored = 0;  // observations whose ln(pi) was clipped at ln(1e-300)
};

/// Sum over observations of ln pi_{y_i}(x_i). Returns -infinity when an
/// observed category has probability exactly zero.
double log_likelihood(const ModelSpec& spec, const ParamSet& params, const Dataset& ds);

// Pointwise log-likelihood with ln(pi) clipped at ln(1e-300); the number of
// clipped terms is reported, never hidden.
LogLikelihood log_likelihood_floored(const ModelSpec& spec, const ParamSet& params, const Dataset& ds);

struct FitOptions {
  double tol = 1e-8;  // gradient norm of the mean negative log-likelihood
  int max_iter = 500;
  double fd_rel_step = 1e-6;
};

struct MleFit {
  ModelSpec spec;
  ParamSet estimates;
  std::vector<std::string> names;
  std::vector<double> estimate_vector;  // natural scale, order of param_names
  std::vector<double> se;
  Eigen::MatrixXd cov;                  // natural scale
  std::vector<double> unconstrained;    // optimizer coordinates at the optimum
  Eigen::MatrixXd unconstrained_cov;    // inverse observed information, optimizer coordinates
  double loglik = 0.0;
  std::size_t n_params = 0;
  std::size_t n_obs = 0;
  std::uint64_t data_digest = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::string message;
  std::vector<Warning> warnings;

  // estimate / se for every parameter, thresholds included.
  std::vector<double> z_values() const;
};

// Maximum likelihood over the unconstrained coordinates; the covariance is
// the inverse of the finite-difference observed information.
MleFit fit_mle(const ModelSpec& spec, const Dataset& ds, const FitOptions& opts = {});

// Intercept-only version of `spec` (slopes and scale fixed at zero).
MleFit fit_null(const ModelSpec& spec, const Dataset& ds, const FitOptions& opts = {});

struct InfoCriteria {
  double aic = 0.0;
  double bic = 0.0;
  double mcfadden_r2 = 0.0;
  double coxsnell_r2 = 0.0;
};

InfoCriteria info_criteria(const MleFit& fit, const MleFit& null_fit);

// Starting point: thresholds at the link quantiles of the empirical
// cumulative frequencies, slopes and scale at zero.
ParamSet initial_params(const ModelSpec& spec, const Dataset& ds);

}  // namespace fragility
