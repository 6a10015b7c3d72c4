#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fragility/analytic.hpp"
#include "fragility/bayes.hpp"
#include "fragility/diagnostics.hpp"
#include "fragility/evaluation.hpp"
#include "fragility/mle.hpp"

namespace fragility {

using Json = nlohmann::ordered_json;

std::string engine_version();

// 64-bit FNV-1a of a canonical config string, as 16 hex digits.
std::string config_hash(std::string_view canonical);

// Stamp carried by every output file.
struct Provenance {
  std::string config_hash;
  std::string version = engine_version();
};

// Small CSV builder; numbers use shortest round-trip formatting.
class CsvWriter {
 public:
  CsvWriter(const Provenance& prov, std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

 private:
  std::string out_;
  std::size_t width_;
};

std::string num(double v);

Json to_json(const ModelSpec& spec);
Json to_json(const std::vector<Warning>& warnings);
Json fit_to_json(const MleFit& fit, const InfoCriteria* ic = nullptr);
Json convergence_to_json(const PosteriorDraws& draws, const std::vector<ConvergenceStat>& stats);
Json comparison_to_json(const std::vector<ComparisonRow>& rows);
Json stamp(Json body, const Provenance& prov);

// Console table: parameter, estimate, std.error, z_value.
std::string fit_table(const MleFit& fit);

std::string draws_csv(const PosteriorDraws& draws, const Provenance& prov);
std::string bands_csv(std::span<const BandRow> rows, BandQuantity quantity, const Provenance& prov, int k_shift = 0);
std::string comparison_csv(const std::vector<ComparisonRow>& rows, const Provenance& prov);
std::string residuals_csv(const std::vector<SurrogateResiduals>& res, const Dataset& ds, const Provenance& prov);
std::string qq_csv(const std::vector<QqPoint>& qq, const Provenance& prov);
std::string trend_csv(const std::vector<TrendBin>& bins, const Provenance& prov);
std::string dcheck_csv(const ParallelCheck& check, const Provenance& prov);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fragility
