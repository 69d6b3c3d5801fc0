#pragma once

// Synthetic scenarios: device placement, private resource profiles and the
// ground-truth behavior that drives synthetic collaboration logs.

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"
#include "trustpath/collab_log.hpp"
#include "trustpath/domain.hpp"
#include "trustpath/resource_agent.hpp"

namespace trustpath::scenario {

struct Range {
  double lo{};
  double hi{};
};

struct ScenarioParams {
  std::size_t iphones{10};
  std::size_t pixels{10};
  std::size_t lambdas{3};
  double arena_m{100.0};
  double link_radius_m{32.0};
  std::size_t max_retries{200};

  Range terminal_storage_bits{8e8, 1.6e10};
  Range ec_storage_bits{3.072e13, 3.072e13};
  Range ec_compute_seconds{600.0, 20000.0};
  double willing_probability{0.95};
  double healthy_probability{0.95};

  Range plr{0.0, 0.3};
  Range tfsr{0.5, 1.0};
  Range ec_success{0.5, 1.0};

  void validate() const;
};

/// Ground truth per device. Terminals use plr/tfsr, edge devices ec_success.
struct Behavior {
  double plr{};
  double tfsr{1.0};
  double ec_success{1.0};
};

struct Scenario {
  std::uint64_t seed{};
  DeviceId owner;
  RadioEnv env;
  Topology topology;
  std::map<DeviceId, std::string> models;  // "iphone", "pixel", "lambda" or custom
  std::map<DeviceId, resource::ResourceProfile> profiles;
  std::map<DeviceId, Behavior> behavior;

  std::map<DeviceId, DeviceKind> kinds() const;
  /// Throws ConfigError unless the owner is a terminal whose connected
  /// component contains an edge device and every device has a profile and behavior.
  void validate() const;
};

/// Terminals get ids 0.. (iPhones first), edge devices follow. Device 0 owns
/// the task. Placement is redrawn until the topology is connected.
Scenario generate_scenario(const ScenarioParams& params, std::uint64_t seed);

struct LogParams {
  std::size_t tasks_per_pair{200};
  std::size_t packets_per_task{100};
};

/// Forward records for every ordered terminal pair sharing a link and compute
/// records for every terminal linked to an edge device. Losses and forwards are
/// drawn from the receiving device's true PLR and TFSR.
collab::CollaborationLog synthesize_logs(const Scenario& scenario, const LogParams& params,
                                         std::uint64_t seed);

bool owner_reaches_edge(const Topology& topology, DeviceId owner);

void to_json(nlohmann::json& j, const Range& r);
void from_json(const nlohmann::json& j, Range& r);
void to_json(nlohmann::json& j, const ScenarioParams& p);
void from_json(const nlohmann::json& j, ScenarioParams& p);
void to_json(nlohmann::json& j, const LogParams& p);
void from_json(const nlohmann::json& j, LogParams& p);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const Scenario& s);

}  // namespace trustpath::scenario
