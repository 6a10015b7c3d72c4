#include "fragility/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fragility/error.hpp"
#include "fragility/stats.hpp"

#ifndef FRAGILITY_VERSION
#define FRAGILITY_VERSION "0.0.0"
#endif

namespace fragility {

std::string engine_version() { return FRAGILITY_VERSION; }

std::string config_hash(std::string_view canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) { return format_double(v); }

CsvWriter::CsvWriter(const Provenance& prov, std::vector<std::string> header) : width_(header.size()) {
  out_ = "# fragility " + prov.version + " config " + prov.config_hash + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + header[i];
  out_ += '\n';
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw InvalidArgument("CSV row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ += (i ? "," : "") + cells[i];
  out_ += '\n';
  return *this;
}

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const ModelSpec& spec) {
  Json j;
  j["name"] = spec.name();
  j["family"] = std::string(to_string(spec.family));
  j["link"] = std::string(to_string(spec.link));
  j["cs"] = spec.cs;
  j["vh"] = spec.vh;
  j["categories"] = spec.categories;
  j["n_params"] = spec.num_params();
  return j;
}

Json to_json(const std::vector<Warning>& warnings) {
  Json arr = Json::array();
  for (const auto& w : warnings) arr.push_back({{"code", w.code}, {"message", w.message}});
  return arr;
}

Json fit_to_json(const MleFit& fit, const InfoCriteria* ic) {
  Json j;
  j["model"] = to_json(fit.spec);
  Json est = Json::array();
  const auto z = fit.z_values();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    est.push_back({{"parameter", fit.names[i]},
                   {"estimate", number_or_null(fit.estimate_vector[i])},
                   {"std_error", number_or_null(fit.se[i])},
                   {"z_value", number_or_null(z[i])}});
  }
  j["estimates"] = est;
  Json cov = Json::array();
  for (Eigen::Index r = 0; r < fit.cov.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < fit.cov.cols(); ++c) row.push_back(number_or_null(fit.cov(r, c)));
    cov.push_back(row);
  }
  j["cov"] = cov;
  j["loglik"] = number_or_null(fit.loglik);
  j["n_obs"] = fit.n_obs;
  if (ic) {
    j["aic"] = ic->aic;
    j["bic"] = ic->bic;
    j["mcfadden_r2"] = ic->mcfadden_r2;
    j["coxsnell_r2"] = ic->coxsnell_r2;
  }
  j["convergence"] = {{"converged", fit.converged},
                      {"iterations", fit.iterations},
                      {"gradient_norm", number_or_null(fit.gradient_norm)},
                      {"message", fit.message}};
  j["warnings"] = to_json(fit.warnings);
  return j;
}

Json convergence_to_json(const PosteriorDraws& draws, const std::vector<ConvergenceStat>& stats) {
  Json j;
  j["model"] = to_json(draws.spec);
  j["chains"] = draws.chains;
  j["iters"] = draws.iters;
  j["seed"] = draws.seed;
  j["acceptance"] = draws.acceptance;
  const auto m = draws.posterior_mean();
  Json params = Json::array();
  for (std::size_t p = 0; p < stats.size(); ++p) {
    const auto s = draws.series(p);
    params.push_back({{"parameter", stats[p].name},
                      {"mean", m[p]},
                      {"sd", std::sqrt(variance(s))},
                      {"q2.5", quantile(s, 0.025)},
                      {"q97.5", quantile(s, 0.975)},
                      {"rhat", number_or_null(stats[p].rhat)},
                      {"ess", number_or_null(stats[p].ess)},
                      {"degenerate", stats[p].degenerate}});
  }
  j["parameters"] = params;
  j["warnings"] = to_json(draws.warnings);
  return j;
}

Json comparison_to_json(const std::vector<ComparisonRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back({{"model", r.model},
                   {"n_params", r.n_params},
                   {"elpd_loo", r.elpd_loo},
                   {"se_elpd", r.se_elpd},
                   {"elpd_diff", r.elpd_diff},
                   {"se_diff", r.se_diff},
                   {"rank", r.rank},
                   {"significant", r.significant},
                   {"pareto_k", {{"good", r.pareto_k.good},
                                 {"warn", r.pareto_k.warn},
                                 {"bad", r.pareto_k.bad},
                                 {"max", number_or_null(r.pareto_k.max)}}}});
  }
  return arr;
}

Json stamp(Json body, const Provenance& prov) {
  Json j;
  j["engine_version"] = prov.version;
  j["config_hash"] = prov.config_hash;
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j;
}

std::string fit_table(const MleFit& fit) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %9s\n", "", "estimate", "std.error", "z_value");
  os << buf;
  const auto z = fit.z_values();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-10s %10.3f %10.3f %9.3f\n", fit.names[i].c_str(), fit.estimate_vector[i],
                  fit.se[i], z[i]);
    os << buf;
  }
  return os.str();
}

std::string draws_csv(const PosteriorDraws& draws, const Provenance& prov) {
  CsvWriter w(prov, {"chain", "iter", "param", "value"});
  for (int c = 0; c < draws.chains; ++c) {
    for (int it = 0; it < draws.iters; ++it) {
      const auto d = draws.draw(static_cast<std::size_t>(c) * static_cast<std::size_t>(draws.iters) +
                                static_cast<std::size_t>(it));
      for (std::size_t p = 0; p < d.size(); ++p) {
        w.row({std::to_string(c + 1), std::to_string(it + 1), draws.names[p], num(d[p])});
      }
    }
  }
  return w.str();
}

std::string bands_csv(std::span<const BandRow> rows, BandQuantity quantity, const Provenance& prov, int k_shift) {
  CsvWriter w(prov, {"im", "k", "stat", "value"});
  for (const auto& r : rows) {
    if (r.quantity != quantity) continue;
    const std::string k = std::to_string(r.k + k_shift);
    w.row({num(r.im), k, "median", num(r.median)});
    w.row({num(r.im), k, "lower", num(r.lower)});
    w.row({num(r.im), k, "upper", num(r.upper)});
  }
  return w.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows, const Provenance& prov) {
  CsvWriter w(prov, {"model", "n_params", "elpd_loo", "se_elpd", "elpd_diff", "se_diff", "rank", "significant",
                     "k_good", "k_warn", "k_bad"});
  for (const auto& r : rows) {
    w.row({r.model, std::to_string(r.n_params), num(r.elpd_loo), num(r.se_elpd), num(r.elpd_diff), num(r.se_diff),
           std::to_string(r.rank), r.significant ? "true" : "false", std::to_string(r.pareto_k.good),
           std::to_string(r.pareto_k.warn), std::to_string(r.pareto_k.bad)});
  }
  return w.str();
}

std::string residuals_csv(const std::vector<SurrogateResiduals>& res, const Dataset& ds, const Provenance& prov) {
  CsvWriter w(prov, {"index", "ln_im", "ds", "residual", "replicate"});
  for (const auto& r : res) {
    for (std::size_t i = 0; i < r.r.size(); ++i) {
      w.row({std::to_string(i + 1), num(ds.log_im(i)), std::to_string(ds.state(i)), num(r.r[i]),
             std::to_string(r.replicate + 1)});
    }
  }
  return w.str();
}

std::string qq_csv(const std::vector<QqPoint>& qq, const Provenance& prov) {
  CsvWriter w(prov, {"theoretical", "sample"});
  for (const auto& p : qq) w.row({num(p.theoretical), num(p.sample)});
  return w.str();
}

std::string trend_csv(const std::vector<TrendBin>& bins, const Provenance& prov) {
  CsvWriter w(prov, {"bin_center", "mean_residual", "sd_residual", "count"});
  for (const auto& b : bins) w.row({num(b.center), num(b.mean), num(b.sd), std::to_string(b.count)});
  return w.str();
}

std::string dcheck_csv(const ParallelCheck& check, const Provenance& prov) {
  CsvWriter w(prov, {"ln_im", "D"});
  for (std::size_t i = 0; i < check.d.size(); ++i) w.row({num(check.ln_im[i]), num(check.d[i])});
  return w.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace fragility
