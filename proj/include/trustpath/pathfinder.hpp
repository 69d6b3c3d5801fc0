#pragma once

// Round-based distributed path planning on the filtered topology.
//
// Every trusted agent remembers the best average VoC it has seen for a path
// from the task owner to itself. The owner opens with an empty prefix; a
// terminal that improves its best value offers its path to each trusted
// neighbor not already on it, adding its own relay value priced for that
// neighbor. Edge devices close a path with their compute value and never relay.
// The run ends once a round delivers no messages.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "trustpath/domain.hpp"

namespace trustpath::planner {

/// Participation per device after thresholds and resource checks. Devices that
/// are absent count as untrusted; the owner always participates.
using Gates = std::map<DeviceId, bool>;

struct PlanMessage {
  DeviceId sender;
  DeviceId receiver;
  double prefix_sum{};             // VoC of hops 1..prefix_hops, sender's hop priced for receiver
  std::size_t prefix_hops{};       // number of valued hops so far
  std::vector<DeviceId> prefix_path;  // owner .. sender
};

struct AgentState {
  DeviceId device;
  DeviceKind kind{DeviceKind::Terminal};
  bool trusted{};
  bool has_path{};
  double best_avg{};   // meaningful once has_path
  double best_sum{};
  std::size_t hop_count{};
  std::optional<DeviceId> predecessor;
  std::vector<DeviceId> path;  // owner .. device for the best known prefix
};

/// Read-only context shared by all agents.
struct PlanContext {
  const Topology* topology{};
  const RadioEnv* env{};
  const Task* task{};
  const Gates* gates{};

  bool trusted(DeviceId id) const;
};

struct StepResult {
  AgentState state;
  std::vector<PlanMessage> outbox;  // ordered by receiver id
  bool changed{};
};

/// Average VoC a receiver would hold after adopting `msg`. Terminals have not
/// yet been valued (their fee depends on the next hop), so their candidate is
/// prefix_sum / prefix_hops with an empty prefix counting as 1. Edge devices
/// add their own compute value.
double candidate_average(const PlanContext& ctx, DeviceId receiver, const PlanMessage& msg);

/// Initial state of every agent: the owner holds the empty path.
AgentState initial_state(const PlanContext& ctx, DeviceId device);

/// Pure transition. The inbox is processed in ascending sender order; a message
/// is adopted only if it strictly raises the candidate average, and messages
/// whose prefix already contains the receiver are dropped. Terminals emit one
/// message per eligible neighbor when their state changed; the owner emits on
/// `opening`.
StepResult agent_step(const AgentState& state, std::vector<PlanMessage> inbox,
                      const PlanContext& ctx, bool opening = false);

enum class Schedule { Synchronous, RandomAsync };

struct PlanOptions {
  std::size_t max_rounds{1000};  // synchronous rounds or asynchronous deliveries
  Schedule schedule{Schedule::Synchronous};
  std::uint64_t seed{0};         // asynchronous delivery order
  bool trace{false};
};

struct RoundTrace {
  std::size_t round{};
  std::vector<PlanMessage> delivered;
};

struct PlanOutcome {
  std::vector<PathResult> candidates;  // one per reached edge device, ascending id
  std::optional<PathResult> final;
  std::size_t rounds{};
  bool converged{};
  std::size_t messages{};
  std::vector<RoundTrace> trace;
};

PlanOutcome run_planning(const Topology& g_new, const RadioEnv& env, const Task& task,
                         const Gates& gates, const PlanOptions& options = {});

/// Highest average; ties go to the shorter path, then the smaller id sequence.
std::optional<PathResult> select_final(const std::vector<PathResult>& candidates);
/// True when `a` should be preferred over `b` under select_final's order.
bool better_path(const PathResult& a, const PathResult& b);

/// Exhaustive search over all simple owner-to-edge paths through trusted
/// devices. Throws OracleBoundError when the topology has more than
/// `node_bound` devices.
std::optional<PathResult> brute_force_optimal(const Topology& g_new, const RadioEnv& env,
                                              const Task& task, const Gates& gates,
                                              std::size_t node_bound = 12);

/// Checks the structural path contract (owner first, simple, linked, trusted,
/// edge device last, terminal relays) and that the values match evaluate_path.
bool path_is_valid(const Topology& g_new, const RadioEnv& env, const Task& task,
                   const Gates& gates, const PathResult& path);

void to_json(nlohmann::json& j, const PlanMessage& m);
void to_json(nlohmann::json& j, const RoundTrace& t);
void to_json(nlohmann::json& j, const PlanOutcome& o);
void from_json(const nlohmann::json& j, PlanOutcome& o);

}  // namespace trustpath::planner
