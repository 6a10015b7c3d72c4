#include <cmath>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fragility/analytic.hpp"
#include "fragility/bayes.hpp"
#include "fragility/diagnostics.hpp"
#include "fragility/error.hpp"
#include "fragility/evaluation.hpp"
#include "fragility/mle.hpp"
#include "fragility/report.hpp"
#include "fragility/rng.hpp"
#include "fragility/stats.hpp"

namespace py = pybind11;
using namespace fragility;

namespace {

py::array_t<double> matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  py::array_t<double> a({rows, cols});
  std::copy(flat.begin(), flat.end(), a.mutable_data());
  return a;
}

py::array_t<double> matrix(const Eigen::MatrixXd& m) {
  py::array_t<double> a({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  auto v = a.mutable_unchecked<2>();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v(r, c) = m(r, c);
  }
  return a;
}

py::list warnings_list(const std::vector<Warning>& ws) {
  py::list out;
  for (const auto& w : ws) out.append(py::make_tuple(w.code, w.message));
  return out;
}

ParamSet params_of(const ModelSpec& spec, const std::vector<double>& values) {
  auto p = unflatten(spec, values);
  validate_params(spec, p);
  return p;
}

py::dict fit_dict(const MleFit& fit) {
  py::dict d;
  d["model"] = fit.spec.name();
  d["names"] = fit.names;
  d["estimates"] = fit.estimate_vector;
  d["se"] = fit.se;
  d["cov"] = matrix(fit.cov);
  d["loglik"] = fit.loglik;
  d["n_obs"] = fit.n_obs;
  d["converged"] = fit.converged;
  d["iterations"] = fit.iterations;
  d["gradient_norm"] = fit.gradient_norm;
  d["warnings"] = warnings_list(fit.warnings);
  return d;
}

// Keeps the C++ draws alive so psis_loo can be called on the returned object.
struct Posterior {
  PosteriorDraws draws;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ordinal-regression fragility engine";
  m.attr("__version__") = engine_version();

  py::register_exception<NumericalError>(m, "FragilityError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    }
  });

  m.def("link_cdf", [](const std::string& link, double z) { return link_cdf(parse_link(link), z); },
        py::arg("link"), py::arg("z"));
  m.def("link_quantile", [](const std::string& link, double p) { return link_quantile(parse_link(link), p); },
        py::arg("link"), py::arg("p"));

  py::class_<ModelSpec>(m, "Model")
      .def(py::init([](const std::string& name, int categories, const std::string& link, bool unsafe) {
             return parse_model_name(name, categories, parse_link(link), unsafe);
           }),
           py::arg("name"), py::arg("categories") = 5, py::arg("link") = "probit", py::arg("unsafe") = false)
      .def_property_readonly("name", &ModelSpec::name)
      .def_property_readonly("categories", [](const ModelSpec& s) { return s.categories; })
      .def_property_readonly("link", [](const ModelSpec& s) { return std::string(to_string(s.link)); })
      .def_property_readonly("num_params", &ModelSpec::num_params)
      .def_property_readonly("param_names", [](const ModelSpec& s) { return param_names(s); })
      .def(
          "category_probs",
          [](const ModelSpec& s, const std::vector<double>& params, double im) {
            return category_probs(s, params_of(s, params), std::log(im));
          },
          py::arg("params"), py::arg("im"))
      .def(
          "exceedance_probs",
          [](const ModelSpec& s, const std::vector<double>& params, double im) {
            return exceedance_probs(s, params_of(s, params), std::log(im));
          },
          py::arg("params"), py::arg("im"), "P(DS > k | im) for k = 1..K-1")
      .def("__repr__", [](const ModelSpec& s) { return "Model('" + s.name() + "')"; });

  m.def("catalog", [] { return catalog_names(); });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const std::vector<double>& im, const std::vector<int>& ds, int categories) {
             if (im.size() != ds.size()) throw InvalidArgument("im and ds must have the same length");
             std::vector<Observation> obs(im.size());
             for (std::size_t i = 0; i < im.size(); ++i) obs[i] = {im[i], ds[i]};
             return Dataset(std::move(obs), categories);
           }),
           py::arg("im"), py::arg("ds"), py::arg("categories") = 5)
      .def("__len__", &Dataset::size)
      .def_property_readonly("categories", &Dataset::categories)
      .def_property_readonly("im", [](const Dataset& d) {
        std::vector<double> v;
        for (const auto& o : d.observations()) v.push_back(o.im);
        return v;
      })
      .def_property_readonly("ds", [](const Dataset& d) {
        std::vector<int> v;
        for (const auto& o : d.observations()) v.push_back(o.ds);
        return v;
      })
      .def("counts", &Dataset::counts)
      .def("digest", &Dataset::digest)
      .def("to_csv", [](const Dataset& d) { return to_csv(d); });

  m.def("load_csv", &load_csv, py::arg("path"), py::arg("categories") = 5);
  m.def(
      "simulate",
      [](const ModelSpec& spec, const std::vector<double>& params, std::size_t n, std::uint64_t seed, double im_lo,
         double im_hi) {
        const auto ims = log_uniform_grid_sample(n, im_lo, im_hi, derive_seed(seed, 0));
        return simulate_dataset(spec, params_of(spec, params), ims, derive_seed(seed, 1));
      },
      py::arg("model"), py::arg("params"), py::arg("n"), py::arg("seed"), py::arg("im_lo") = 0.05,
      py::arg("im_hi") = 2.0);

  m.def(
      "fit_mle",
      [](const ModelSpec& spec, const Dataset& ds) {
        py::gil_scoped_release release;
        auto fit = fit_mle(spec, ds);
        py::gil_scoped_acquire acquire;
        return fit_dict(fit);
      },
      py::arg("model"), py::arg("data"));

  py::class_<Posterior>(m, "Posterior")
      .def_property_readonly("names", [](const Posterior& p) { return p.draws.names; })
      .def_property_readonly("chains", [](const Posterior& p) { return p.draws.chains; })
      .def_property_readonly("iters", [](const Posterior& p) { return p.draws.iters; })
      .def_property_readonly("draws",
                             [](const Posterior& p) {
                               return matrix(p.draws.params, p.draws.draws(), p.draws.n_params);
                             })
      .def_property_readonly("pointwise_loglik",
                             [](const Posterior& p) {
                               return matrix(p.draws.pointwise_loglik, p.draws.draws(), p.draws.n_obs);
                             })
      .def("mean", [](const Posterior& p) { return p.draws.posterior_mean(); })
      .def("summary",
           [](const Posterior& p) {
             py::list out;
             const auto stats = convergence_stats(p.draws);
             for (std::size_t i = 0; i < stats.size(); ++i) {
               const auto& s = stats[i];
               const auto v = p.draws.series(i);
               py::dict d;
               d["name"] = s.name;
               d["mean"] = mean(v);
               d["sd"] = std::sqrt(variance(v));
               d["rhat"] = s.rhat;
               d["ess"] = s.ess;
               out.append(d);
             }
             return out;
           })
      .def_property_readonly("warnings", [](const Posterior& p) { return warnings_list(p.draws.warnings); });

  m.def(
      "sample_posterior",
      [](const ModelSpec& spec, const Dataset& ds, std::uint64_t seed, int chains, int warmup, int iters, int thin) {
        McmcOptions o;
        o.seed = seed;
        o.chains = chains;
        o.warmup = warmup;
        o.iters = iters;
        o.thin = thin;
        py::gil_scoped_release release;
        return Posterior{sample_posterior(spec, ds, Prior{}, o)};
      },
      py::arg("model"), py::arg("data"), py::arg("seed"), py::arg("chains") = 4, py::arg("warmup") = 1000,
      py::arg("iters") = 1000, py::arg("thin") = 1);

  m.def(
      "psis_loo",
      [](const Posterior& p) {
        const auto loo = psis_loo(make_pointwise(p.draws.draws(), p.draws.n_obs, p.draws.pointwise_loglik));
        py::dict d;
        d["elpd_loo"] = loo.elpd_loo;
        d["se_elpd"] = loo.se_elpd;
        d["p_loo"] = loo.p_loo;
        d["pointwise"] = loo.pointwise;
        d["pareto_k"] = loo.pareto_k;
        d["warnings"] = warnings_list(loo.warnings);
        return d;
      },
      py::arg("posterior"));

  m.def(
      "compare",
      [](const std::vector<std::pair<std::string, const Posterior*>>& fits) {
        std::vector<ModelElpd> elpds;
        for (const auto& [name, p] : fits) {
          const auto loo = psis_loo(make_pointwise(p->draws.draws(), p->draws.n_obs, p->draws.pointwise_loglik));
          elpds.push_back({name, p->draws.n_params, loo.pointwise, loo.pareto_k});
        }
        py::list out;
        for (const auto& r : compare_models(elpds)) {
          py::dict d;
          d["model"] = r.model;
          d["n_params"] = r.n_params;
          d["elpd_loo"] = r.elpd_loo;
          d["se_elpd"] = r.se_elpd;
          d["elpd_diff"] = r.elpd_diff;
          d["se_diff"] = r.se_diff;
          d["rank"] = r.rank;
          d["significant"] = r.significant;
          out.append(d);
        }
        return out;
      },
      py::arg("fits"), "fits: list of (label, Posterior) pairs");

  m.def(
      "surrogate_residuals",
      [](const ModelSpec& spec, const Dataset& ds, std::uint64_t seed, int replicates) {
        const auto fit = fit_mle(spec, ds);
        std::vector<std::vector<double>> out;
        for (const auto& r : surrogate_residuals(fit, ds, seed, replicates)) out.push_back(r.r);
        return out;
      },
      py::arg("model"), py::arg("data"), py::arg("seed"), py::arg("replicates") = 1);

  m.def(
      "parallel_check",
      [](const Dataset& ds, std::uint64_t seed, std::vector<int> low, std::vector<int> high) {
        const auto c = parallel_check(ds, ParallelSplit{std::move(low), std::move(high)}, seed);
        py::dict d;
        d["beta_low"] = c.beta_low;
        d["beta_high"] = c.beta_high;
        d["slope"] = c.slope;
        d["slope_se"] = c.slope_se;
        d["slope_se_adjusted"] = c.slope_se_adjusted;
        d["p_value"] = c.p_value;
        d["var_d"] = c.var_d;
        d["d"] = c.d;
        return d;
      },
      py::arg("data"), py::arg("seed"), py::arg("low") = std::vector<int>{1, 2, 3},
      py::arg("high") = std::vector<int>{3, 4, 5});

  m.def(
      "closed_form_fragility",
      [](std::tuple<double, double, double> psdm, const std::vector<std::pair<double, double>>& capacities,
         double im, int k) {
        const Psdm p{std::get<0>(psdm), std::get<1>(psdm), std::get<2>(psdm)};
        CapacityModel cap;
        for (const auto& [sc, bc] : capacities) cap.states.push_back({sc, bc});
        return closed_form_fragility(p, cap, im, k);
      },
      py::arg("psdm"), py::arg("capacities"), py::arg("im"), py::arg("k"),
      "psdm = (ln_a0, a1, beta_d); capacities = [(ln_sc, beta_c), ...]");
}
