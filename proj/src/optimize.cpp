#include "fragility/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fragility {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

Eigen::VectorXd as_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct LineSearch {
  std::vector<double> x;
  double value = kInf;
  bool ok = false;
};

LineSearch backtrack(const Objective& f, const std::vector<double>& x, double fx, const Eigen::VectorXd& g,
                     Eigen::VectorXd d) {
  // Keep single steps bounded; the log-increment thresholds overflow otherwise.
  const double longest = d.cwiseAbs().maxCoeff();
  if (longest > 5.0) d *= 5.0 / longest;
  const double slope = g.dot(d);
  LineSearch out;
  double t = 1.0;
  std::vector<double> trial(x.size());
  for (int i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) trial[j] = x[j] + t * d(static_cast<Eigen::Index>(j));
    const double ft = eval(f, trial);
    if (ft <= fx + 1e-4 * t * slope) {
      out.x = trial;
      out.value = ft;
      out.ok = true;
      return out;
    }
    t *= 0.5;
  }
  return out;
}

}  // namespace

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double rel_step) {
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::fabs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Objective& f, std::span<const double> x, double rel_step) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd H(n, n);
  std::vector<double> xp(x.begin(), x.end());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double h = rel_step * (1.0 + std::fabs(x[ju]));
    xp[ju] = x[ju] + h;
    const auto gp = fd_gradient(f, xp, rel_step);
    xp[ju] = x[ju] - h;
    const auto gm = fd_gradient(f, xp, rel_step);
    xp[ju] = x[ju];
    for (Eigen::Index i = 0; i < n; ++i) {
      H(i, j) = (gp[static_cast<std::size_t>(i)] - gm[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
  }
  return 0.5 * (H + H.transpose());
}

OptimizeResult minimize(const Objective& f, std::vector<double> x0, const OptimizeOptions& opts) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  const auto nu = x0.size();
  OptimizeResult res;
  std::vector<double> x = std::move(x0);
  std::vector<bool> pinned(nu, false);
  double fx = eval(f, x);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.pinned = pinned;
    res.message = "objective is not finite at the starting point";
    return res;
  }
  // Zeroes pinned components so they never move.
  auto mask = [&](Eigen::VectorXd v) {
    for (std::size_t i = 0; i < nu; ++i) {
      if (pinned[i]) v(static_cast<Eigen::Index>(i)) = 0.0;
    }
    return v;
  };
  auto pin_new = [&]() {
    bool changed = false;
    for (std::size_t i = 0; i < nu && i < opts.pinnable.size(); ++i) {
      if (opts.pinnable[i] && !pinned[i] && x[i] < opts.pin_below) {
        pinned[i] = true;
        x[i] = opts.pin_value;
        changed = true;
      }
    }
    return changed;
  };
  auto g = fd_gradient(f, x, opts.fd_rel_step);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  bool newton = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (pin_new()) {
      fx = eval(f, x);
      g = fd_gradient(f, x, opts.fd_rel_step);
      Hinv.setIdentity();
      fresh = true;
    }
    const Eigen::VectorXd gv = mask(as_vec(g));
    const double gn = gv.norm();
    if (gn <= opts.gradient_tol) break;
    if (gn < 1e-5) newton = true;
    Eigen::VectorXd d;
    if (newton) {
      Eigen::MatrixXd H = fd_hessian(f, x, opts.fd_rel_step);
      for (std::size_t i = 0; i < nu; ++i) {
        if (!pinned[i]) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        H.row(ii).setZero();
        H.col(ii).setZero();
        H(ii, ii) = 1.0;
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
      Eigen::VectorXd ev = eig.eigenvalues();
      const double floor = std::max(1e-10, 1e-8 * ev.cwiseAbs().maxCoeff());
      for (Eigen::Index i = 0; i < n; ++i) ev(i) = std::max(std::fabs(ev(i)), floor);
      d = mask(-(eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose()) * gv);
    } else {
      d = mask(-Hinv * gv);
      if (gv.dot(d) >= 0.0) {
        Hinv.setIdentity();
        fresh = true;
        d = -gv;
      }
    }
    auto ls = backtrack(f, x, fx, gv, d);
    if (!ls.ok) {
      if (!newton && !fresh) {
        Hinv.setIdentity();
        fresh = true;
        continue;
      }
      if (!newton) {
        newton = true;
        continue;
      }
      // Next to the optimum the decrease is below the resolution of f; a
      // full Newton step is still progress if the gradient shrinks.
      std::vector<double> trial(nu);
      for (std::size_t j = 0; j < nu; ++j) trial[j] = x[j] + d(static_cast<Eigen::Index>(j));
      const double ft = eval(f, trial);
      if (std::isfinite(ft) && ft <= fx + 1e-12 * (1.0 + std::fabs(fx))) {
        auto g_trial = fd_gradient(f, trial, opts.fd_rel_step);
        if (mask(as_vec(g_trial)).norm() < gn) {
          x = std::move(trial);
          fx = ft;
          g = std::move(g_trial);
          continue;
        }
      }
      res.message = "line search failed";
      break;
    }
    auto g_new = fd_gradient(f, ls.x, opts.fd_rel_step);
    if (!newton) {
      Eigen::VectorXd s(n), y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        s(i) = ls.x[iu] - x[iu];
        y(i) = pinned[iu] ? 0.0 : g_new[iu] - g[iu];
      }
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (fresh) {
          Hinv = Eigen::MatrixXd::Identity(n, n) * (sy / y.dot(y));
          fresh = false;
        }
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
      }
    }
    x = std::move(ls.x);
    fx = ls.value;
    g = std::move(g_new);
  }
  res.x = x;
  res.value = fx;
  res.gradient = g;
  res.gradient_norm = norm(g);
  res.iterations = iter;
  res.pinned = pinned;
  res.converged = res.gradient_norm <= opts.gradient_tol;
  if (res.converged) res.message = "gradient tolerance reached";
  else if (res.message.empty()) res.message = "iteration limit reached";
  return res;
}

}  // namespace fragility
