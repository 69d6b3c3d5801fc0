#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "trustpath/errors.hpp"
#include "trustpath/sweep.hpp"

using namespace trustpath;

namespace {

Config fast_config() {
  return load_config("", {"scenario.iphones=5", "scenario.pixels=5", "scenario.lambdas=2",
                          "scenario.arena_m=70", "logs.tasks_per_pair=30",
                          "model.embedding_dim=16", "model.layer_dims=[8,8]",
                          "model.mlp_hidden=16", "model.epochs=40"});
}

SweepSpec spec(SweepParameter p, std::vector<double> values, std::vector<std::uint64_t> seeds) {
  SweepSpec s;
  s.parameter = p;
  s.values = std::move(values);
  s.seeds = std::move(seeds);
  return s;
}

}  // namespace

TEST(Monotone, WeakOrderWithSlack) {
  EXPECT_TRUE(weakly_monotone({3, 3, 2, 0}, Trend::NonIncreasing));
  EXPECT_FALSE(weakly_monotone({3, 3.1, 2}, Trend::NonIncreasing));
  EXPECT_TRUE(weakly_monotone({0.1, 0.1 + 1e-13, 0.1}, Trend::NonDecreasing));
  EXPECT_TRUE(weakly_monotone({}, Trend::NonDecreasing));
  EXPECT_TRUE(weakly_monotone({1}, Trend::NonIncreasing));
  EXPECT_FALSE(weakly_monotone({1, 0.5}, Trend::NonDecreasing));
}

TEST(Parameter, NamesRoundTrip) {
  for (auto p : {SweepParameter::CTf, SweepParameter::CEc, SweepParameter::Plr,
                 SweepParameter::Tfsr, SweepParameter::STfSoft, SweepParameter::STfHard,
                 SweepParameter::Size, SweepParameter::Density})
    EXPECT_EQ(sweep_parameter_from_string(to_string(p)), p);
  EXPECT_EQ(sweep_parameter_from_string("size_bits"), SweepParameter::Size);
  EXPECT_THROW(sweep_parameter_from_string("temperature"), ConfigError);
  EXPECT_TRUE(retrains(SweepParameter::Plr));
  EXPECT_FALSE(retrains(SweepParameter::CTf));
}

TEST(SweepSpec, Validation) {
  EXPECT_THROW(spec(SweepParameter::CTf, {}, {1}).validate(), ConfigError);
  EXPECT_THROW(spec(SweepParameter::CTf, {0.1}, {}).validate(), ConfigError);
  EXPECT_THROW(spec(SweepParameter::CTf, {0.1}, {1, 1}).validate(), ConfigError);
  EXPECT_THROW(spec(SweepParameter::Plr, {1.5}, {1}).validate(), ConfigError);
  EXPECT_NO_THROW(spec(SweepParameter::Density, {2339, 32946}, {1, 2}).validate());
  // Task values are checked against the task contract before any work starts.
  EXPECT_THROW(run_sweep(spec(SweepParameter::CTf, {2.0}, {1}), fast_config()), ConfigError);
}

TEST(Sweep, RowsAndSummaries) {
  const auto r = run_sweep(spec(SweepParameter::CTf, {0.1, 0.5, 0.9}, {1, 2, 3}), fast_config());
  ASSERT_EQ(r.runs.size(), 9u);
  ASSERT_EQ(r.means.size(), 3u);
  ASSERT_EQ(r.stds.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    double m = 0.0;
    std::vector<double> xs;
    for (const auto& row : r.runs)
      if (row.value == r.means[k].value) xs.push_back(row.trusted_terminals);
    ASSERT_EQ(xs.size(), 3u);
    for (double x : xs) m += x;
    m /= 3.0;
    double var = 0.0;
    for (double x : xs) var += (x - m) * (x - m);
    EXPECT_NEAR(r.means[k].trusted_terminals, m, 1e-12);
    EXPECT_NEAR(r.stds[k].trusted_terminals, std::sqrt(var / 2.0), 1e-12);
    EXPECT_FALSE(r.means[k].seed.has_value());
  }

  std::ostringstream csv;
  write_sweep_csv(csv, r);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kind,parameter,value,seed,avg_voc,trusted_terminals,trusted_ecs,rounds,runtime_s");
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 15u);
}

TEST(Sweep, TrustThresholdCountsMonotonePerSeed) {
  const std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (auto p : {SweepParameter::CTf, SweepParameter::CEc}) {
    const auto r = run_sweep(spec(p, grid, {4, 5}), fast_config());
    for (std::uint64_t seed : {4u, 5u}) {
      std::vector<double> terminals, ecs;
      for (const auto& row : r.runs)
        if (row.seed == seed) {
          terminals.push_back(row.trusted_terminals);
          ecs.push_back(row.trusted_ecs);
        }
      EXPECT_TRUE(weakly_monotone(p == SweepParameter::CTf ? terminals : ecs,
                                  Trend::NonIncreasing))
          << to_string(p) << " seed " << seed;
    }
  }
}

TEST(Sweep, DeterministicApartFromRuntime) {
  auto s = spec(SweepParameter::Plr, {0.0, 0.2}, {7});
  const auto a = run_sweep(s, fast_config());
  const auto b = run_sweep(s, fast_config());
  ASSERT_EQ(a.runs.size(), b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].avg_voc, b.runs[i].avg_voc);
    EXPECT_EQ(a.runs[i].trusted_terminals, b.runs[i].trusted_terminals);
    EXPECT_EQ(a.runs[i].rounds, b.runs[i].rounds);
  }
}
