#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "fragility/analytic.hpp"
#include "fragility/bayes.hpp"
#include "fragility/diagnostics.hpp"
#include "fragility/error.hpp"
#include "fragility/evaluation.hpp"
#include "fragility/mle.hpp"
#include "fragility/report.hpp"
#include "fragility/rng.hpp"
#include "fragility/stats.hpp"

namespace fs = std::filesystem;

namespace fragility::cli {

namespace {

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) s += format_double(v[i]);
    else if constexpr (std::is_arithmetic_v<T>) s += std::to_string(v[i]);
    else s += v[i];
  }
  return s;
}

std::string slug(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (c == '+') c = '_';
  }
  return s;
}

std::string catalog_list() {
  std::string s;
  for (const auto& n : catalog_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

std::vector<ModelSpec> resolve_models(const RunConfig& cfg) {
  if (cfg.models.empty()) throw InvalidArgument("no models given; choose from: " + catalog_list() + " or all");
  const Link link = parse_link(cfg.link);
  std::vector<ModelSpec> out;
  for (const auto& name : cfg.models) {
    if (name == "all") {
      for (const auto& s : model_catalog(cfg.categories, link)) out.push_back(s);
      continue;
    }
    try {
      out.push_back(parse_model_name(name, cfg.categories, link, cfg.unsafe));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(std::string(e.what()) + "; known models: " + catalog_list());
    }
  }
  return out;
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw InvalidArgument("--seed is required for the '" + cfg.command + "' command");
  return *cfg.seed;
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir = cfg.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env && *env ? fs::path(env) : fs::path(".");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

Dataset load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) throw InvalidArgument("--input is required for the '" + cfg.command + "' command");
  return load_csv(cfg.input, cfg.categories);
}

Provenance provenance(const RunConfig& cfg, const Dataset* ds) {
  std::string canon = cfg.canonical();
  if (ds) canon += ";data=" + std::to_string(ds->digest());
  return Provenance{config_hash(canon)};
}

McmcOptions mcmc_options(const RunConfig& cfg) {
  McmcOptions o;
  o.chains = cfg.chains;
  o.warmup = cfg.warmup;
  o.iters = cfg.iters;
  o.thin = cfg.thin;
  o.seed = require_seed(cfg);
  return o;
}

std::vector<double> im_grid(const RunConfig& cfg) {
  if (!cfg.im.empty()) return cfg.im;
  if (cfg.grid_n < 1) throw InvalidArgument("im grid is empty (--grid-n must be >= 1)");
  if (!(cfg.grid_lo > 0.0 && cfg.grid_hi >= cfg.grid_lo)) throw InvalidArgument("im grid needs 0 < lo <= hi");
  std::vector<double> g(static_cast<std::size_t>(cfg.grid_n));
  const double a = std::log(cfg.grid_lo), b = std::log(cfg.grid_hi);
  for (int i = 0; i < cfg.grid_n; ++i) {
    const double t = cfg.grid_n == 1 ? 0.0 : static_cast<double>(i) / (cfg.grid_n - 1);
    g[static_cast<std::size_t>(i)] = std::exp(a + t * (b - a));
  }
  return g;
}

int shift_for(const RunConfig& cfg) {
  if (cfg.convention == "gt") return 0;
  if (cfg.convention == "geq") return 1;
  throw InvalidArgument("--convention must be 'gt' (P(DS > k)) or 'geq' (P(DS >= k))");
}

struct BayesRun {
  PosteriorDraws draws;
  PsisLoo loo;
  WaicDic ic;
};

BayesRun run_bayes(const ModelSpec& spec, const Dataset& ds, const McmcOptions& opts) {
  BayesRun r;
  r.draws = sample_posterior(spec, ds, Prior{}, opts);
  const auto pll = make_pointwise(r.draws.draws(), ds.size(), r.draws.pointwise_loglik);
  r.loo = psis_loo(pll);
  r.ic = waic_dic(pll, r.draws, ds);
  return r;
}

Json loo_json(const BayesRun& r) {
  return {{"elpd_loo", r.loo.elpd_loo}, {"se_elpd", r.loo.se_elpd}, {"p_loo", r.loo.p_loo},
          {"lppd", r.ic.lppd},         {"p_waic", r.ic.p_waic},    {"waic", r.ic.waic},
          {"dic", r.ic.dic},           {"p_dic", r.ic.p_dic},
          {"pareto_k", {{"good", r.loo.k_summary.good}, {"warn", r.loo.k_summary.warn},
                        {"bad", r.loo.k_summary.bad}}}};
}

}  // namespace

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "command=" << command << ";input=" << input << ";categories=" << categories << ";models=" << join(models)
     << ";link=" << link << ";mode=" << mode << ";chains=" << chains << ";warmup=" << warmup << ";iters=" << iters
     << ";thin=" << thin << ";seed=" << (seed ? std::to_string(*seed) : "none") << ";unsafe=" << unsafe
     << ";replicates=" << replicates << ";bins=" << bins << ";split_low=" << join(split_low)
     << ";split_high=" << join(split_high) << ";im=" << join(im) << ";grid=" << format_double(grid_lo) << ':'
     << format_double(grid_hi) << ':' << grid_n << ";level=" << format_double(level)
     << ";convention=" << convention << ";facets=" << join(facets) << ";params=" << join(params) << ";n=" << n
     << ";im_range=" << format_double(im_lo) << ':' << format_double(im_hi) << ";config=" << config;
  return os.str();
}

int cmd_fit(const RunConfig& cfg, std::ostream& log) {
  const auto specs = resolve_models(cfg);
  if (cfg.mode != "mle" && cfg.mode != "bayes") throw InvalidArgument("--mode must be 'mle' or 'bayes'");
  const bool bayes = cfg.mode == "bayes";
  const McmcOptions mcmc = bayes ? mcmc_options(cfg) : McmcOptions{};
  const Dataset ds = load_input(cfg);
  const fs::path dir = output_dir(cfg);
  const Provenance prov = provenance(cfg, &ds);

  Json summary = Json::array();
  int exit_code = 0;
  std::vector<std::pair<fs::path, std::string>> files;
  for (const auto& spec : specs) {
    Json entry{{"model", spec.name()}};
    try {
      if (bayes) {
        const auto r = run_bayes(spec, ds, mcmc);
        const auto stats = convergence_stats(r.draws);
        Json body = convergence_to_json(r.draws, stats);
        body["evaluation"] = loo_json(r);
        files.emplace_back(dir / ("fit_" + slug(spec.name()) + ".json"), stamp(body, prov).dump(2) + "\n");
        files.emplace_back(dir / ("draws_" + slug(spec.name()) + ".csv"), draws_csv(r.draws, prov));
        entry["status"] = "ok";
        entry["warnings"] = to_json(r.draws.warnings);
        log << spec.name() << ": elpd_loo " << format_double(std::round(r.loo.elpd_loo * 10.0) / 10.0) << '\n';
      } else {
        const auto fit = fit_mle(spec, ds);
        Json body;
        if (fit.converged) {
          const auto null_fit = fit_null(spec, ds);
          const auto ic = info_criteria(fit, null_fit);
          body = fit_to_json(fit, &ic);
        } else {
          body = fit_to_json(fit);
        }
        files.emplace_back(dir / ("fit_" + slug(spec.name()) + ".json"), stamp(body, prov).dump(2) + "\n");
        entry["status"] = "ok";
        entry["warnings"] = to_json(fit.warnings);
        log << spec.name() << "\n" << fit_table(fit) << '\n';
      }
    } catch (const NumericalError& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
      exit_code = 1;
      log << spec.name() << ": error: " << e.what() << '\n';
    }
    summary.push_back(entry);
  }
  files.emplace_back(dir / "fit_summary.json", stamp(Json{{"fits", summary}}, prov).dump(2) + "\n");
  for (const auto& [path, text] : files) write_text(path, text);
  return exit_code;
}

int cmd_compare(const RunConfig& cfg, std::ostream& log) {
  const auto specs = resolve_models(cfg);
  if (specs.size() < 2) throw InvalidArgument("compare needs at least 2 models");
  const McmcOptions mcmc = mcmc_options(cfg);
  const Dataset ds = load_input(cfg);
  const fs::path dir = output_dir(cfg);
  const Provenance prov = provenance(cfg, &ds);

  std::vector<ModelElpd> elpds;
  Json warnings = Json::object();
  for (const auto& spec : specs) {
    const auto r = run_bayes(spec, ds, mcmc);
    elpds.push_back({spec.name(), spec.num_params(), r.loo.pointwise, r.loo.pareto_k});
    auto w = r.draws.warnings;
    w.insert(w.end(), r.loo.warnings.begin(), r.loo.warnings.end());
    warnings[spec.name()] = to_json(w);
  }
  const auto rows = compare_models(elpds);
  Json body;
  body["n_obs"] = ds.size();
  body["rule"] = "significant when |elpd_diff| > 4 and |elpd_diff| > 2 se_diff";
  body["rows"] = comparison_to_json(rows);
  body["warnings"] = warnings;
  write_text(dir / "comparison.csv", comparison_csv(rows, prov));
  write_text(dir / "comparison.json", stamp(body, prov).dump(2) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %8s %9s %9s %8s %5s\n", "model", "n_params", "elpd_loo", "elpd_diff",
                "se_diff", "rank");
  log << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %8zu %9.1f %9.1f %8.1f %5d%s\n", r.model.c_str(), r.n_params, r.elpd_loo,
                  r.elpd_diff, r.se_diff, r.rank, r.significant ? " *" : "");
    log << buf;
  }
  return 0;
}

int cmd_diagnose(const RunConfig& cfg_in, std::ostream& log) {
  RunConfig cfg = cfg_in;
  if (cfg.models.empty()) cfg.models = {"cum"};
  const auto specs = resolve_models(cfg);
  if (specs.size() != 1) throw InvalidArgument("diagnose takes exactly one model");
  const ModelSpec spec = specs.front();
  if (spec.family != Family::cumulative) {
    throw InvalidArgument("diagnose supports cumulative models only; surrogate residuals are defined through the "
                          "cumulative latent variable");
  }
  const std::uint64_t seed = require_seed(cfg);
  const Dataset ds = load_input(cfg);
  const fs::path dir = output_dir(cfg);
  const Provenance prov = provenance(cfg, &ds);

  const auto fit = fit_mle(spec, ds);
  const auto res = surrogate_residuals(fit, ds, seed, cfg.replicates);
  SurrogateResiduals pooled;
  pooled.spec = spec;
  pooled.seed = seed;
  for (const auto& r : res) pooled.r.insert(pooled.r.end(), r.r.begin(), r.r.end());
  const auto qq = qq_reference(pooled, spec.link);

  std::vector<TrendBin> trend = covariate_trend(res.front(), ds, cfg.bins);
  for (std::size_t rep = 1; rep < res.size(); ++rep) {
    const auto t = covariate_trend(res[rep], ds, cfg.bins);
    for (std::size_t b = 0; b < trend.size(); ++b) {
      trend[b].mean += t[b].mean;
      trend[b].sd += t[b].sd;
    }
  }
  for (auto& b : trend) {
    b.mean /= static_cast<double>(res.size());
    b.sd /= static_cast<double>(res.size());
  }
  const Link link = spec.link;
  const auto ks = ks_test(pooled.r, [link](double z) { return link_cdf(link, z); });
  const auto check = parallel_check(ds, ParallelSplit{cfg.split_low, cfg.split_high}, derive_seed(seed, 1000));

  Json body;
  body["model"] = to_json(spec);
  body["replicates"] = cfg.replicates;
  body["residuals"] = {{"mean", mean(pooled.r)}, {"sd", std::sqrt(variance(pooled.r))},
                       {"ks_statistic", ks.statistic}, {"ks_p_value", ks.p_value}};
  Json pc;
  pc["low"] = cfg.split_low;
  pc["high"] = cfg.split_high;
  pc["beta_low"] = check.beta_low;
  pc["beta_high"] = check.beta_high;
  pc["beta_low_se"] = check.beta_low_se;
  pc["beta_high_se"] = check.beta_high_se;
  pc["slope"] = check.slope;
  pc["slope_se"] = check.slope_se;
  pc["slope_se_adjusted"] = check.slope_se_adjusted;
  pc["t_value"] = check.t_value;
  pc["p_value"] = check.p_value;
  pc["var_d"] = check.var_d;
  body["parallel_check"] = pc;
  body["warnings"] = to_json(fit.warnings);
  write_text(dir / "residuals.csv", residuals_csv(res, ds, prov));
  write_text(dir / "qq.csv", qq_csv(qq, prov));
  write_text(dir / "trend.csv", trend_csv(trend, prov));
  write_text(dir / "dcheck.csv", dcheck_csv(check, prov));
  write_text(dir / "diagnose.json", stamp(body, prov).dump(2) + "\n");
  log << "residual mean " << format_double(mean(pooled.r)) << ", KS p-value " << format_double(ks.p_value) << '\n'
      << "D-check slope " << format_double(check.slope) << " (se " << format_double(check.slope_se) << ", p "
      << format_double(check.p_value) << ")\n";
  return 0;
}

int cmd_curves(const RunConfig& cfg, std::ostream& log) {
  const auto specs = resolve_models(cfg);
  if (cfg.mode != "mle" && cfg.mode != "bayes") throw InvalidArgument("--mode must be 'mle' or 'bayes'");
  const int shift = shift_for(cfg);
  const auto grid = im_grid(cfg);
  const bool bayes = cfg.mode == "bayes";
  const McmcOptions mcmc = bayes ? mcmc_options(cfg) : McmcOptions{};
  const Dataset ds = load_input(cfg);
  const fs::path dir = output_dir(cfg);
  const Provenance prov = provenance(cfg, &ds);

  for (const auto& spec : specs) {
    const std::string s = slug(spec.name());
    Json mirror;
    mirror["model"] = to_json(spec);
    mirror["mode"] = cfg.mode;
    mirror["convention"] = shift ? "P(DS >= k)" : "P(DS > k)";
    mirror["im"] = grid;
    if (bayes) {
      const auto draws = sample_posterior(spec, ds, Prior{}, mcmc);
      const auto rows = fragility_bands(draws, spec, grid, cfg.level);
      write_text(dir / ("exceedance_" + s + ".csv"), bands_csv(rows, BandQuantity::exceedance, prov, shift));
      write_text(dir / ("categories_" + s + ".csv"), bands_csv(rows, BandQuantity::category, prov));
      const auto facet_rows = fragility_bands(draws, spec, cfg.facets, cfg.level);
      write_text(dir / ("facets_" + s + ".csv"), bands_csv(facet_rows, BandQuantity::category, prov));
      mirror["level"] = cfg.level;
      mirror["seed"] = draws.seed;
      const auto pm = draws.posterior_mean();
      Json params;
      for (std::size_t i = 0; i < pm.size(); ++i) params[draws.names[i]] = pm[i];
      mirror["posterior_mean"] = params;
      Json ex = Json::array(), cat = Json::array();
      for (const auto& r : rows) {
        Json row = {{"im", r.im}, {"k", r.k + (r.quantity == BandQuantity::exceedance ? shift : 0)},
                    {"median", r.median}, {"lower", r.lower}, {"upper", r.upper}};
        (r.quantity == BandQuantity::exceedance ? ex : cat).push_back(row);
      }
      mirror["exceedance"] = ex;
      mirror["category"] = cat;
    } else {
      const auto fit = fit_mle(spec, ds);
      const auto table = exceedance_curve(spec, fit.estimates, grid);
      CsvWriter ex(prov, {"im", "k", "exceedance_prob"});
      CsvWriter cat(prov, {"im", "k", "category_prob"});
      Json jex = Json::array(), jcat = Json::array();
      for (std::size_t r = 0; r < table.im.size(); ++r) {
        for (std::size_t k = 0; k < table.exceedance[r].size(); ++k) {
          const int kk = static_cast<int>(k) + 1 + shift;
          ex.row({num(table.im[r]), std::to_string(kk), num(table.exceedance[r][k])});
          jex.push_back({{"im", table.im[r]}, {"k", kk}, {"exceedance_prob", table.exceedance[r][k]}});
        }
        for (std::size_t k = 0; k < table.category[r].size(); ++k) {
          cat.row({num(table.im[r]), std::to_string(k + 1), num(table.category[r][k])});
          jcat.push_back({{"im", table.im[r]}, {"k", k + 1}, {"category_prob", table.category[r][k]}});
        }
      }
      const auto facets = exceedance_curve(spec, fit.estimates, cfg.facets);
      CsvWriter fc(prov, {"im", "k", "category_prob"});
      for (std::size_t r = 0; r < facets.im.size(); ++r) {
        for (std::size_t k = 0; k < facets.category[r].size(); ++k) {
          fc.row({num(facets.im[r]), std::to_string(k + 1), num(facets.category[r][k])});
        }
      }
      write_text(dir / ("exceedance_" + s + ".csv"), ex.str());
      write_text(dir / ("categories_" + s + ".csv"), cat.str());
      write_text(dir / ("facets_" + s + ".csv"), fc.str());
      Json params;
      for (std::size_t i = 0; i < fit.names.size(); ++i) params[fit.names[i]] = fit.estimate_vector[i];
      mirror["estimates"] = params;
      mirror["exceedance"] = jex;
      mirror["category"] = jcat;
    }
    write_text(dir / ("curves_" + s + ".json"), stamp(mirror, prov).dump(2) + "\n");
    log << spec.name() << ": curves written (" << grid.size() << " grid points, convention "
        << (shift ? "P(DS >= k)" : "P(DS > k)") << ")\n";
  }
  return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const auto specs = resolve_models(cfg);
  if (specs.size() != 1) throw InvalidArgument("simulate takes exactly one model");
  const ModelSpec& spec = specs.front();
  const std::uint64_t seed = require_seed(cfg);
  if (cfg.n == 0) throw InvalidArgument("--n must be positive");
  const ParamSet params = unflatten(spec, cfg.params);
  validate_params(spec, params);
  const auto ims = log_uniform_grid_sample(cfg.n, cfg.im_lo, cfg.im_hi, derive_seed(seed, 0));
  const Dataset ds = simulate_dataset(spec, params, ims, derive_seed(seed, 1));
  const Provenance prov = provenance(cfg, nullptr);
  const fs::path path = cfg.output.empty() ? output_dir(cfg) / "simulated.csv" : fs::path(cfg.output);
  write_text(path, "# fragility " + prov.version + " config " + prov.config_hash + "\n" + to_csv(ds));
  log << "wrote " << ds.size() << " observations to " << path.string() << '\n';
  return 0;
}

int cmd_analytic(const RunConfig& cfg, std::ostream& log) {
  if (cfg.config.empty()) throw InvalidArgument("--config is required for the 'analytic' command");
  const std::uint64_t seed = require_seed(cfg);
  std::ifstream f(cfg.config);
  if (!f) throw IoError("cannot open config '" + cfg.config + "'");
  Json j;
  try {
    j = Json::parse(f);
  } catch (const std::exception& e) {
    throw IoError("config '" + cfg.config + "' is not valid JSON: " + e.what());
  }
  Psdm psdm;
  CapacityModel cap;
  SamplingOptions so;
  std::size_t n = 0;
  double lo = 0.05, hi = 2.0;
  try {
    psdm.ln_a0 = j.at("psdm").at("ln_a0").get<double>();
    psdm.a1 = j.at("psdm").at("a1").get<double>();
    psdm.beta_d = j.at("psdm").at("beta_d").get<double>();
    for (const auto& s : j.at("capacities")) cap.states.push_back({s.at("ln_sc").get<double>(), s.at("beta_c").get<double>()});
    so.correlation = j.value("correlation", so.correlation);
    n = j.value("n", static_cast<std::size_t>(1000));
    lo = j.value("im_lo", lo);
    hi = j.value("im_hi", hi);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config '" + cfg.config + "': " + e.what());
  }
  std::ifstream again(cfg.config);
  std::stringstream text;
  text << again.rdbuf();
  const Provenance prov{config_hash(cfg.canonical() + ";config_text=" + text.str())};
  const fs::path dir = output_dir(cfg);

  const auto ims = log_uniform_grid_sample(n, lo, hi, derive_seed(seed, 0));
  const Dataset ds = sample_damage_states(psdm, cap, ims, derive_seed(seed, 1), so);
  write_text(dir / "analytic_dataset.csv", "# fragility " + prov.version + " config " + prov.config_hash + "\n" + to_csv(ds));

  const auto grid = im_grid(cfg);
  CsvWriter cf(prov, {"im", "k", "value"});
  for (double im : grid) {
    for (int k = 1; k <= static_cast<int>(cap.states.size()); ++k) {
      cf.row({num(im), std::to_string(k), num(closed_form_fragility(psdm, cap, im, k))});
    }
  }
  write_text(dir / "closed_form.csv", cf.str());
  Json body;
  body["n"] = ds.size();
  body["correlation"] = so.correlation;
  body["acceptance_rate"] = capacity_acceptance_rate(cap, so.correlation, so.probe, derive_seed(seed, 2));
  Json counts = Json::array();
  for (auto c : ds.counts()) counts.push_back(c);
  body["counts"] = counts;
  write_text(dir / "analytic.json", stamp(body, prov).dump(2) + "\n");
  log << "sampled " << ds.size() << " damage states\n";
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ordinal-regression seismic fragility engine"};
  app.set_version_flag("--version", engine_version());
  app.require_subcommand(1);
  RunConfig cfg;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool models, bool input) {
    if (input) sub->add_option("--input,-i", cfg.input, "CSV with columns im,ds");
    sub->add_option("--categories,-K", cfg.categories, "Number of damage states")->capture_default_str();
    if (models) {
      sub->add_option("--models,-m", cfg.models, "Model names (e.g. cum, seq+vh+cs, mlogit) or 'all'")
          ->delimiter(',');
    }
    sub->add_option("--link", cfg.link, "probit, logit or cloglog")->capture_default_str();
    sub->add_flag("--unsafe", cfg.unsafe, "Allow cum+cs (may yield negative probabilities)");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--out,-o", cfg.out_dir, std::string("Output directory (default $") + kOutDirEnv + " or .)");
  };
  auto add_mcmc = [&](CLI::App* sub) {
    sub->add_option("--chains", cfg.chains)->capture_default_str();
    sub->add_option("--warmup", cfg.warmup)->capture_default_str();
    sub->add_option("--iters", cfg.iters)->capture_default_str();
    sub->add_option("--thin", cfg.thin)->capture_default_str();
  };
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--im", cfg.im, "Explicit im grid")->delimiter(',');
    sub->add_option("--grid-lo", cfg.grid_lo)->capture_default_str();
    sub->add_option("--grid-hi", cfg.grid_hi)->capture_default_str();
    sub->add_option("--grid-n", cfg.grid_n)->capture_default_str();
  };

  auto* fit = app.add_subcommand("fit", "Fit models and write reports");
  add_common(fit, true, true);
  fit->add_option("--mode", cfg.mode, "mle or bayes")->capture_default_str();
  add_mcmc(fit);

  auto* compare = app.add_subcommand("compare", "PSIS-LOO comparison table");
  add_common(compare, true, true);
  add_mcmc(compare);

  auto* diagnose = app.add_subcommand("diagnose", "Surrogate residuals and the parallel-slope check");
  add_common(diagnose, true, true);
  diagnose->add_option("--replicates", cfg.replicates)->capture_default_str();
  diagnose->add_option("--bins", cfg.bins)->capture_default_str();
  diagnose->add_option("--split-low", cfg.split_low)->delimiter(',');
  diagnose->add_option("--split-high", cfg.split_high)->delimiter(',');

  auto* curves = app.add_subcommand("curves", "Fragility and category-probability grids");
  add_common(curves, true, true);
  curves->add_option("--mode", cfg.mode, "mle or bayes")->capture_default_str();
  add_mcmc(curves);
  add_grid(curves);
  curves->add_option("--level", cfg.level)->capture_default_str();
  curves->add_option("--convention", cfg.convention, "gt: P(DS > k), geq: P(DS >= k)")->capture_default_str();
  curves->add_option("--facets", cfg.facets, "im values for category-probability bars")->delimiter(',');

  auto* simulate = app.add_subcommand("simulate", "Simulate a dataset from a model");
  add_common(simulate, true, false);
  simulate->add_option("--params", cfg.params, "Natural-scale parameters (tau..., beta..., gamma)")
      ->delimiter(',')
      ->required();
  simulate->add_option("--n", cfg.n)->capture_default_str();
  simulate->add_option("--im-lo", cfg.im_lo)->capture_default_str();
  simulate->add_option("--im-hi", cfg.im_hi)->capture_default_str();
  simulate->add_option("--output", cfg.output, "Output CSV path");

  auto* analytic = app.add_subcommand("analytic", "Demand/capacity sampling and closed-form curves");
  analytic->add_option("--config", cfg.config, "JSON with psdm, capacities, correlation, n")->required();
  analytic->add_option("--seed", seed, "Random seed");
  analytic->add_option("--out,-o", cfg.out_dir, "Output directory");
  add_grid(analytic);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands()) {
    cfg.command = sub->get_name();
    if (sub->count("--seed") > 0) cfg.seed = seed;
  }

  try {
    if (cfg.command == "fit") return cmd_fit(cfg, out);
    if (cfg.command == "compare") return cmd_compare(cfg, out);
    if (cfg.command == "diagnose") return cmd_diagnose(cfg, out);
    if (cfg.command == "curves") return cmd_curves(cfg, out);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "analytic") return cmd_analytic(cfg, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace fragility::cli
