#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fragility/data.hpp"
#include "fragility/error.hpp"
#include "fragility/models.hpp"
#include "support.hpp"

using namespace fragility;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("fragility_test_" + name);
  std::ofstream(p) << body;
  return p;
}

Dataset from_counts(const std::vector<int>& counts) {
  std::vector<Observation> obs;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (int i = 0; i < counts[k]; ++i) obs.push_back({0.1 + 0.01 * i, static_cast<int>(k + 1)});
  }
  return Dataset(obs, static_cast<int>(counts.size()));
}

}  // namespace

TEST_CASE("load_csv reads rows in order") {
  const auto ds = load_csv(temp_file("two.csv", "im,ds\n0.2,1\n0.4,3\n"), 5);
  REQUIRE(ds.size() == 2);
  CHECK(ds.categories() == 5);
  CHECK(ds[0].im == 0.2);
  CHECK(ds[1].ds == 3);
  CHECK(ds.log_im(1) == doctest::Approx(std::log(0.4)));
}

TEST_CASE("load_csv names the offending row") {
  const auto bad = temp_file("zero.csv", "im,ds\n0.2,1\n0,2\n");
  CHECK_THROWS_WITH_AS(load_csv(bad, 5), doctest::Contains("row 2"), IoError);
  CHECK_THROWS_AS(load_csv(temp_file("ds.csv", "im,ds\n0.2,6\n"), 5), IoError);
  CHECK_THROWS_AS(load_csv(temp_file("neg.csv", "im,ds\n-0.2,1\n"), 5), IoError);
  CHECK_THROWS_AS(load_csv(temp_file("empty.csv", ""), 5), IoError);
  CHECK_THROWS_AS(load_csv(temp_file("hdr.csv", "pga,state\n0.2,1\n"), 5), IoError);
  CHECK_THROWS_WITH_AS(load_csv("/nonexistent/x.csv", 5), doctest::Contains("/nonexistent/x.csv"), IoError);
}

TEST_CASE("a 442-row file loads completely") {
  std::string body = "im,ds\n";
  for (int i = 0; i < 442; ++i) body += std::to_string(0.05 + 0.004 * i) + "," + std::to_string(1 + i % 5) + "\n";
  CHECK(load_csv(temp_file("442.csv", body), 5).size() == 442);
}

TEST_CASE("csv round trip is byte-identical") {
  const std::string text = "im,ds\n0.1,1\n0.30000000000000004,2\n1.5,5\n0.0123456789,4\n";
  const auto path = temp_file("rt.csv", text);
  const auto ds = load_csv(path, 5);
  CHECK(to_csv(ds) == text);
  const auto out = std::filesystem::temp_directory_path() / "fragility_test_rt_out.csv";
  write_csv(ds, out);
  std::ifstream in(out);
  const std::string back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(back == text);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  const double v = 1.0 / 3.0;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("empirical cumulative frequencies") {
  auto f = empirical_cum_freq(from_counts({10, 10, 10, 10, 10}));
  REQUIRE(f.size() == 4);
  CHECK(f[0] == doctest::Approx(0.2));
  CHECK(f[3] == doctest::Approx(0.8));
  f = empirical_cum_freq(from_counts({7, 0, 0, 0, 0}));
  for (double v : f) CHECK(v == 1.0);
  f = empirical_cum_freq(from_counts({2, 1, 1}));
  REQUIRE(f.size() == 2);
  CHECK(f[0] == 0.5);
  CHECK(f[1] == 0.75);
}

TEST_CASE("dataset rejects invalid observations") {
  CHECK_THROWS_AS(Dataset({}, 5), InvalidArgument);
  CHECK_THROWS_AS(Dataset({{0.0, 1}}, 5), InvalidArgument);
  CHECK_THROWS_AS(Dataset({{0.1, 6}}, 5), InvalidArgument);
  CHECK_THROWS_AS(Dataset({{0.1, 1}}, 1), InvalidArgument);
}

TEST_CASE("digest tracks content and order") {
  const Dataset a({{0.1, 1}, {0.2, 2}}, 3);
  const Dataset b({{0.2, 2}, {0.1, 1}}, 3);
  CHECK(a.digest() == Dataset({{0.1, 1}, {0.2, 2}}, 3).digest());
  CHECK(a.digest() != b.digest());
  CHECK(a.without(0).size() == 1);
  CHECK(a.without(0)[0].ds == 2);
}

TEST_CASE("simulation with an unreachable first threshold stays in category 1") {
  ModelSpec spec = testing::cum_probit(3);
  ParamSet p;
  p.tau = {40.0, 41.0};
  p.beta = {0.0};
  const std::vector<double> ims(200, 0.5);
  const auto ds = simulate_dataset(spec, p, ims, 3);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds.state(i) == 1);
}

TEST_CASE("simulated frequencies agree with the cumulative probit law") {
  const auto spec = testing::cum_probit();
  const auto p = testing::reference_params();
  const auto ims = log_uniform_grid_sample(442, 0.05, 2.0, 21);
  const auto ds = simulate_dataset(spec, p, ims, 22);
  std::vector<double> expected(5, 0.0);
  for (double im : ims) {
    const double x = std::log(im);
    double prev = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double c = testing::phi_oracle(p.tau[static_cast<std::size_t>(k)] - p.beta[0] * x);
      expected[static_cast<std::size_t>(k)] += c - prev;
      prev = c;
    }
    expected[4] += 1.0 - prev;
  }
  const auto counts = ds.counts();
  double chi2 = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    const double d = static_cast<double>(counts[k]) - expected[k];
    chi2 += d * d / expected[k];
  }
  CHECK(chi2 < 13.2767);  // chi-square 0.99 quantile, 4 df
}

TEST_CASE("frequencies converge at n = 1e5") {
  const auto spec = testing::cum_probit();
  const auto p = testing::reference_params();
  const std::vector<double> ims(100000, 0.4);
  const auto ds = simulate_dataset(spec, p, ims, 5);
  const auto probs = category_probs(spec, p, std::log(0.4));
  const auto counts = ds.counts();
  for (std::size_t k = 0; k < 5; ++k) {
    const double f = static_cast<double>(counts[k]) / 1e5;
    CHECK(std::fabs(f - probs[k]) <= 3.0 * std::sqrt(probs[k] * (1 - probs[k]) / 1e5));
  }
}

TEST_CASE("simulation is seeded and validates parameters") {
  const auto spec = testing::cum_probit();
  const auto ims = log_uniform_grid_sample(50, 0.05, 2.0, 1);
  CHECK(to_csv(simulate_dataset(spec, testing::reference_params(), ims, 9)) ==
        to_csv(simulate_dataset(spec, testing::reference_params(), ims, 9)));
  auto bad = testing::reference_params();
  bad.tau = {0.5, 0.1, 0.6, 0.7};
  CHECK_THROWS_AS(simulate_dataset(spec, bad, ims, 9), InvalidArgument);
}
