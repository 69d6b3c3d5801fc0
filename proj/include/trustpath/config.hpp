#pragma once

// One declarative JSON file configures every stage. Unknown keys are errors.
//
//   {
//     "seeds":     {"scenario": 1, "logs": 2, "training": 3},
//     "scenario":  {...ScenarioParams...},
//     "logs":      {"tasks_per_pair": 200, "packets_per_task": 100},
//     "trust":     {"alpha1": 0.6, "alpha2": 0.4},
//     "model":     {...ModelConfig...},
//     "task":      {"preset": "face_recognition", "owner": 0, "c_tf": 0.2, ...},
//     "planner":   {"max_rounds": 1000, "schedule": "sync", "seed": 0, "trace": false,
//                   "oracle_node_bound": 12},
//     "evaluator": {"mode": "local", "endpoint": {...}},
//     "sweep":     {"parameter": "c_tf", "values": [...], "seeds": [...],
//                   "swept_fraction": 0.8}
//   }
//
// Overrides use dotted paths, e.g. `model.epochs=50` or `task.preset="virus_scanning"`;
// the value is parsed as JSON and falls back to a plain string.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trustpath/collab_graph.hpp"
#include "trustpath/evaluator_protocol.hpp"
#include "trustpath/pathfinder.hpp"
#include "trustpath/scenario.hpp"
#include "trustpath/trust_gnn.hpp"

namespace trustpath {

struct Seeds {
  std::uint64_t scenario{1};
  std::uint64_t logs{2};
  std::uint64_t training{3};
};

/// Task as configured: a named preset with optional field overrides.
struct TaskConfig {
  std::string preset{"face_recognition"};
  std::optional<DeviceId> owner;                         // defaults to the scenario's owner
  nlohmann::json overrides = nlohmann::json::object();  // Task keys except owner

  Task resolve(DeviceId scenario_owner) const;
};

struct PlannerConfig {
  planner::PlanOptions options;
  std::size_t oracle_node_bound{12};
};

enum class EvaluatorMode { Local, External };

struct EvaluatorConfig {
  EvaluatorMode mode{EvaluatorMode::Local};
  resource::EvaluatorEndpoint endpoint;
};

struct SweepConfig {
  std::string parameter{"c_tf"};
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  double swept_fraction{0.8};  // share of non-owner terminals given the swept PLR/TFSR
};

struct Config {
  Seeds seeds;
  scenario::ScenarioParams scenario;
  scenario::LogParams logs;
  collab::TrustWeights trust;
  gnn::ModelConfig model;
  TaskConfig task;
  PlannerConfig planner;
  EvaluatorConfig evaluator;
  SweepConfig sweep;

  void validate() const;
};

nlohmann::json to_json_config(const Config& c);
/// Strict: unknown keys and wrongly typed values raise ConfigError.
Config config_from_json(const nlohmann::json& j);

/// Applies `path=value` to a JSON document, creating objects along the path.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads `path` (empty means defaults only), applies overrides and parses.
Config load_config(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace trustpath
