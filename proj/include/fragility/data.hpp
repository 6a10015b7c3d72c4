#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fragility {

struct ModelSpec;
struct ParamSet;

// One (intensity measure, damage state) pair. Damage states are 1..K with
// 1 = no damage and K = the most severe state.
struct Observation {
  double im = 0.0;
  int ds = 1;
};

// Immutable set of observations sharing the same number of ordered
// categories K. The covariate used by every model is ln(im).
class Dataset {
 public:
  Dataset(std::vector<Observation> observations, int categories);

  std::size_t size() const { return obs_.size(); }
  int categories() const { return categories_; }
  std::span<const Observation> observations() const { return obs_; }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }

  std::span<const double> log_im() const { return log_im_; }
  double log_im(std::size_t i) const { return log_im_[i]; }
  int state(std::size_t i) const { return obs_[i].ds; }

  // Number of observations per category, index 0 = category 1.
  std::vector<std::size_t> counts() const;

  // Order-sensitive fingerprint, used to check that two fits saw the same data.
  std::uint64_t digest() const { return digest_; }

  Dataset without(std::size_t index) const;
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Observation> obs_;
  std::vector<double> log_im_;
  int categories_;
  std::uint64_t digest_;
};

// CSV with header `im,ds`; lines starting with '#' are ignored. Rows that fail
// validation abort the load with the offending row number.
Dataset load_csv(const std::filesystem::path& path, int categories = 5);
Dataset parse_csv(const std::string& text, int categories = 5, const std::string& source = "<memory>");

// Writes `im,ds` rows with shortest round-trip float formatting.
std::string to_csv(const Dataset& ds);
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Cumulative proportions #{ds <= k}/n for k = 1..K-1.
std::vector<double> empirical_cum_freq(const Dataset& ds);

// One categorical draw per im value from the model's category probabilities.
Dataset simulate_dataset(const ModelSpec& spec, const ParamSet& params,
                         std::span<const double> im_values, std::uint64_t seed);

// im values drawn log-uniformly on [lo, hi].
std::vector<double> log_uniform_grid_sample(std::size_t n, double lo, double hi, std::uint64_t seed);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace fragility
