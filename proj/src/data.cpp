#include "fragility/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "fragility/error.hpp"
#include "fragility/models.hpp"
#include "fragility/rng.hpp"

namespace fragility {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

Dataset::Dataset(std::vector<Observation> observations, int categories)
    : obs_(std::move(observations)), categories_(categories) {
  if (categories_ < 2) throw InvalidArgument("a dataset needs K >= 2 categories");
  if (obs_.empty()) throw InvalidArgument("a dataset needs at least one observation");
  log_im_.reserve(obs_.size());
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(h, &categories_, sizeof categories_);
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const auto& o = obs_[i];
    if (!(o.im > 0.0) || !std::isfinite(o.im)) {
      throw InvalidArgument("observation " + std::to_string(i + 1) + ": im must be a positive finite number");
    }
    if (o.ds < 1 || o.ds > categories_) {
      throw InvalidArgument("observation " + std::to_string(i + 1) + ": damage state " + std::to_string(o.ds) +
                            " outside 1.." + std::to_string(categories_));
    }
    log_im_.push_back(std::log(o.im));
    h = fnv1a(h, &o.im, sizeof o.im);
    h = fnv1a(h, &o.ds, sizeof o.ds);
  }
  digest_ = h;
}

std::vector<std::size_t> Dataset::counts() const {
  std::vector<std::size_t> c(static_cast<std::size_t>(categories_), 0);
  for (const auto& o : obs_) ++c[static_cast<std::size_t>(o.ds - 1)];
  return c;
}

Dataset Dataset::without(std::size_t index) const {
  std::vector<Observation> rest;
  rest.reserve(obs_.size() - 1);
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (i != index) rest.push_back(obs_[i]);
  }
  return Dataset(std::move(rest), categories_);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Observation> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(obs_.at(i));
  return Dataset(std::move(out), categories_);
}

Dataset parse_csv(const std::string& text, int categories, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t row = 0;
  std::vector<Observation> obs;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      std::string h;
      for (char c : t) {
        if (!std::isspace(static_cast<unsigned char>(c))) h += c;
      }
      if (h != "im,ds") throw IoError(source + ": expected header 'im,ds', got '" + t + "'");
      header_seen = true;
      continue;
    }
    ++row;
    const auto comma = t.find(',');
    if (comma == std::string::npos) {
      throw IoError(source + ": row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                    "): expected two comma-separated fields");
    }
    const std::string a = trim(t.substr(0, comma));
    const std::string b = trim(t.substr(comma + 1));
    Observation o;
    auto [pa, ea] = std::from_chars(a.data(), a.data() + a.size(), o.im);
    if (ea != std::errc() || pa != a.data() + a.size()) {
      throw IoError(source + ": row " + std::to_string(row) + ": cannot parse im '" + a + "'");
    }
    auto [pb, eb] = std::from_chars(b.data(), b.data() + b.size(), o.ds);
    if (eb != std::errc() || pb != b.data() + b.size()) {
      throw IoError(source + ": row " + std::to_string(row) + ": cannot parse damage state '" + b + "'");
    }
    if (!(o.im > 0.0) || !std::isfinite(o.im)) {
      throw IoError(source + ": row " + std::to_string(row) + ": im = " + a + " is not positive (ln(im) undefined)");
    }
    if (o.ds < 1 || o.ds > categories) {
      throw IoError(source + ": row " + std::to_string(row) + ": damage state " + b + " outside 1.." +
                    std::to_string(categories));
    }
    obs.push_back(o);
  }
  if (!header_seen) throw IoError(source + ": empty file");
  if (obs.empty()) throw IoError(source + ": no observations after the header");
  return Dataset(std::move(obs), categories);
}

Dataset load_csv(const std::filesystem::path& path, int categories) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), categories, path.string());
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

std::string to_csv(const Dataset& ds) {
  std::string out = "im,ds\n";
  for (const auto& o : ds.observations()) {
    out += format_double(o.im);
    out += ',';
    out += std::to_string(o.ds);
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_csv(ds);
}

std::vector<double> empirical_cum_freq(const Dataset& ds) {
  const auto c = ds.counts();
  const double n = static_cast<double>(ds.size());
  std::vector<double> out;
  std::size_t acc = 0;
  for (std::size_t k = 0; k + 1 < c.size(); ++k) {
    acc += c[k];
    out.push_back(static_cast<double>(acc) / n);
  }
  return out;
}

Dataset simulate_dataset(const ModelSpec& spec, const ParamSet& params, std::span<const double> im_values,
                         std::uint64_t seed) {
  spec.validate();
  validate_params(spec, params);
  if (im_values.empty()) throw InvalidArgument("simulate_dataset needs at least one im value");
  Rng rng(seed);
  std::vector<Observation> obs;
  obs.reserve(im_values.size());
  for (double im : im_values) {
    if (!(im > 0.0)) throw InvalidArgument("simulate_dataset: im values must be positive");
    const auto p = category_probs(spec, params, std::log(im));
    obs.push_back({im, sample_category(p, rng.uniform())});
  }
  return Dataset(std::move(obs), spec.categories);
}

std::vector<double> log_uniform_grid_sample(std::size_t n, double lo, double hi, std::uint64_t seed) {
  if (!(lo > 0.0 && hi > lo)) throw InvalidArgument("log-uniform range needs 0 < lo < hi");
  Rng rng(seed);
  const double a = std::log(lo), b = std::log(hi);
  std::vector<double> out(n);
  for (auto& v : out) v = std::exp(a + (b - a) * rng.uniform());
  return out;
}

}  // namespace fragility
