#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fragility {

using Objective = std::function<double(std::span<const double>)>;

struct OptimizeOptions {
  double gradient_tol = 1e-8;  // Euclidean norm of the gradient
  int max_iter = 500;
  double fd_rel_step = 1e-6;   // step = fd_rel_step * (1 + |x_i|)
  // Coordinates allowed to run off to -infinity (log-scale gaps). Once one
  // drops below pin_below it is fixed at pin_value and no longer updated.
  std::vector<bool> pinnable;
  double pin_below = -12.0;
  double pin_value = -30.0;
};

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<bool> pinned;
  std::string message;
};

// Central finite differences.
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double rel_step = 1e-6);
// Symmetrised central differences of fd_gradient.
Eigen::MatrixXd fd_hessian(const Objective& f, std::span<const double> x, double rel_step = 1e-6);

// Quasi-Newton (BFGS with backtracking) followed by damped Newton polishing
// on a finite-difference Hessian once the gradient is small.
OptimizeResult minimize(const Objective& f, std::vector<double> x0, const OptimizeOptions& opts = {});

}  // namespace fragility
