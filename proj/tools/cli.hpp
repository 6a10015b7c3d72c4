#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fragility::cli {

struct RunConfig {
  std::string command;
  std::string input;
  int categories = 5;
  std::vector<std::string> models;
  std::string link = "probit";
  std::string mode = "mle";
  int chains = 4;
  int warmup = 1000;
  int iters = 1000;
  int thin = 1;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool unsafe = false;

  // diagnose
  int replicates = 1;
  int bins = 10;
  std::vector<int> split_low{1, 2, 3};
  std::vector<int> split_high{3, 4, 5};

  // curves
  std::vector<double> im;
  double grid_lo = 0.05;
  double grid_hi = 2.0;
  int grid_n = 50;
  double level = 0.95;
  std::string convention = "gt";
  std::vector<double> facets{0.2, 0.4, 0.6, 0.8, 1.0, 1.2};

  // simulate
  std::vector<double> params;
  std::size_t n = 442;
  double im_lo = 0.05;
  double im_hi = 2.0;
  std::string output;

  // analytic
  std::string config;

  // Every option in a fixed order; hashed into the output stamp.
  std::string canonical() const;
};

// Output directory used when --out is absent.
inline constexpr const char* kOutDirEnv = "FRAGILITY_OUT_DIR";

int cmd_fit(const RunConfig& cfg, std::ostream& log);
int cmd_compare(const RunConfig& cfg, std::ostream& log);
int cmd_diagnose(const RunConfig& cfg, std::ostream& log);
int cmd_curves(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_analytic(const RunConfig& cfg, std::ostream& log);

// Parses argv, dispatches, and maps errors to exit codes (0 ok, 1
// computational failure, 2 usage or I/O).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fragility::cli
