#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "trustpath/collab_graph.hpp"
#include "trustpath/errors.hpp"
#include "trustpath/presets.hpp"
#include "trustpath/scenario.hpp"

using namespace trustpath;
using namespace trustpath::scenario;

TEST(Generate, DefaultDeskScale) {
  const auto sc = generate_scenario(ScenarioParams{}, 1);
  EXPECT_EQ(sc.topology.count(DeviceKind::Terminal), 20u);
  EXPECT_EQ(sc.topology.count(DeviceKind::EdgeCompute), 3u);
  EXPECT_EQ(sc.owner, DeviceId{0});
  EXPECT_NO_THROW(sc.validate());
  EXPECT_TRUE(owner_reaches_edge(sc.topology, sc.owner));
  for (const auto& d : sc.topology.devices()) {
    const auto& model = sc.models.at(d.id);
    if (model == "iphone") {
      EXPECT_EQ(d.price_per_s, presets::kIphonePricePerS);
    } else if (model == "pixel") {
      EXPECT_EQ(d.price_per_s, presets::kPixelPricePerS);
    } else {
      EXPECT_EQ(model, "lambda");
      EXPECT_EQ(d.price_per_s, presets::kLambdaPricePerS);
      EXPECT_EQ(d.cpu_hz, presets::kLambdaCpuHz);
      EXPECT_TRUE(d.is_edge());
    }
    EXPECT_GE(d.position.x, 0.0);
    EXPECT_LE(d.position.x, 100.0);
  }
  for (const auto& [a, b] : sc.topology.links()) {
    const auto pa = sc.topology.device(a).position, pb = sc.topology.device(b).position;
    EXPECT_LE(std::hypot(pa.x - pb.x, pa.y - pb.y), 32.0);
  }
}

TEST(Generate, SameSeedSameScenario) {
  const nlohmann::json a = generate_scenario(ScenarioParams{}, 7);
  const nlohmann::json b = generate_scenario(ScenarioParams{}, 7);
  const nlohmann::json c = generate_scenario(ScenarioParams{}, 8);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_NE(a.dump(), c.dump());
}

TEST(Generate, BehaviorWithinConfiguredRanges) {
  ScenarioParams p;
  p.plr = {0.1, 0.2};
  p.tfsr = {0.7, 0.8};
  p.ec_success = {0.6, 0.6};
  const auto sc = generate_scenario(p, 3);
  for (const auto& d : sc.topology.devices()) {
    const auto& b = sc.behavior.at(d.id);
    if (d.is_edge()) {
      EXPECT_EQ(b.ec_success, 0.6);
    } else {
      EXPECT_GE(b.plr, 0.1);
      EXPECT_LE(b.plr, 0.2);
      EXPECT_GE(b.tfsr, 0.7);
      EXPECT_LE(b.tfsr, 0.8);
    }
  }
}

TEST(Generate, UnreachableRequirementsFail) {
  ScenarioParams p;
  p.link_radius_m = 0.001;
  p.max_retries = 3;
  EXPECT_THROW(generate_scenario(p, 1), ConfigError);
  p = ScenarioParams{};
  p.lambdas = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = ScenarioParams{};
  p.plr = {0.5, 0.2};
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Scenario, JsonAndFileRoundTrip) {
  const auto sc = generate_scenario(ScenarioParams{}, 4);
  const nlohmann::json j = sc;
  EXPECT_EQ(nlohmann::json(j.get<Scenario>()).dump(), j.dump());
  const auto path = std::filesystem::temp_directory_path() / "trustpath_scenario_test.json";
  save_scenario(path.string(), sc);
  EXPECT_EQ(nlohmann::json(load_scenario(path.string())).dump(), j.dump());
  std::filesystem::remove(path);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST(Scenario, ValidateCatchesMissingPieces) {
  auto sc = generate_scenario(ScenarioParams{}, 4);
  auto broken = sc;
  broken.profiles.erase(DeviceId{3});
  EXPECT_THROW(broken.validate(), ConfigError);
  broken = sc;
  broken.owner = DeviceId{22};  // an edge device
  EXPECT_THROW(broken.validate(), ConfigError);
}

TEST(Logs, RecordCountsPerPair) {
  const auto sc = generate_scenario(ScenarioParams{}, 2);
  const LogParams lp{25, 40};
  const auto log = synthesize_logs(sc, lp, 9);
  std::map<std::pair<DeviceId, DeviceId>, std::size_t> fwd, comp;
  for (const auto& r : log.forward) {
    ++fwd[{r.src, r.dst}];
    EXPECT_EQ(r.packets_total, 40u);
    EXPECT_NO_THROW(r.validate());
  }
  for (const auto& r : log.compute) ++comp[{r.src, r.dst}];
  std::size_t tt = 0, te = 0;
  for (const auto& [a, b] : sc.topology.links()) {
    const bool ea = sc.topology.device(a).is_edge(), eb = sc.topology.device(b).is_edge();
    if (!ea && !eb) {
      tt += 2;
      EXPECT_EQ((fwd[{a, b}]), 25u);
      EXPECT_EQ((fwd[{b, a}]), 25u);
    } else if (ea != eb) {
      ++te;
      EXPECT_EQ((comp[{ea ? b : a, ea ? a : b}]), 25u);
    }
  }
  EXPECT_EQ(fwd.size(), tt);
  EXPECT_EQ(comp.size(), te);
  const auto again = synthesize_logs(sc, lp, 9);
  ASSERT_EQ(again.forward.size(), log.forward.size());
  for (std::size_t i = 0; i < log.forward.size(); ++i)
    EXPECT_EQ(again.forward[i].packets_forwarded, log.forward[i].packets_forwarded);
}

TEST(Logs, PerfectBehaviorGivesFullTrust) {
  ScenarioParams p;
  p.plr = {0.0, 0.0};
  p.tfsr = {1.0, 1.0};
  p.ec_success = {1.0, 1.0};
  const auto sc = generate_scenario(p, 5);
  const auto log = synthesize_logs(sc, LogParams{10, 50}, 1);
  const auto g = collab::build_graph(sc.kinds(), log.forward, log.compute, {});
  ASSERT_FALSE(g.edges().empty());
  for (const auto& e : g.edges()) EXPECT_EQ(e.weight, 1.0);
}

TEST(Logs, EdgeSuccessLawOfLargeNumbers) {
  ScenarioParams p;
  p.ec_success = {0.75, 0.75};
  const auto sc = generate_scenario(p, 6);
  const auto log = synthesize_logs(sc, LogParams{1000, 10}, 3);
  const auto g = collab::build_graph(sc.kinds(), log.forward, log.compute, {});
  std::size_t checked = 0;
  for (const auto& e : g.edges()) {
    if (!sc.topology.device(e.dst).is_edge()) continue;
    EXPECT_EQ(e.frequency, 1000u);
    EXPECT_NEAR(e.weight, 0.75, 0.03);
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(Logs, HigherLossNeverLowersLossCounts) {
  auto sc = generate_scenario(ScenarioParams{}, 2);
  auto worse = sc;
  for (auto& [id, b] : worse.behavior) b.plr = std::min(1.0, b.plr + 0.1);
  const auto a = synthesize_logs(sc, LogParams{5, 50}, 4);
  const auto b = synthesize_logs(worse, LogParams{5, 50}, 4);
  ASSERT_EQ(a.forward.size(), b.forward.size());
  for (std::size_t i = 0; i < a.forward.size(); ++i)
    EXPECT_GE(b.forward[i].packets_lost, a.forward[i].packets_lost);
}

TEST(Logs, RejectsZeroCounts) {
  const auto sc = generate_scenario(ScenarioParams{}, 2);
  EXPECT_THROW(synthesize_logs(sc, LogParams{0, 10}, 1), ConfigError);
}
