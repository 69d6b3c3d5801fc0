#pragma once

// End-to-end driver: logs -> trust graph -> GNN -> threshold filter -> resource
// gates -> distributed planning, with an exhaustive cross-check on small
// instances.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trustpath/collab_log.hpp"
#include "trustpath/config.hpp"
#include "trustpath/pathfinder.hpp"
#include "trustpath/scenario.hpp"
#include "trustpath/trust_gnn.hpp"
#include "trustpath/trust_train.hpp"

namespace trustpath {

/// Historical stage output reusable across tasks.
struct TrustStage {
  collab::CollaborationLog log;
  collab::DirectTrustGraph graph;
  gnn::TrainResult training;
  std::map<DeviceId, double> t_his;  // owner's view of every other device
};

/// Predicted reliability of every device from the owner's point of view,
/// embedding over the full trust graph.
std::map<DeviceId, double> historical_reliability(const gnn::TrustModel& model,
                                                  const collab::DirectTrustGraph& graph,
                                                  DeviceId owner);

TrustStage run_trust_stage(const scenario::Scenario& scenario, const Config& config);
/// Same, with externally supplied logs (no synthesis).
TrustStage run_trust_stage(const scenario::Scenario& scenario, collab::CollaborationLog log,
                           const Config& config);

struct GateRecord {
  DeviceId device;
  DeviceKind kind{};
  double t_his{};
  int t_res{};
  std::string reason;
  double trust{};  // t_his * t_res
  bool trusted{};
};

struct PlanStage {
  Topology g_new;
  std::vector<GateRecord> gates;  // devices of g_new, ascending id
  planner::Gates gate_map;
  planner::PlanOutcome outcome;
  std::optional<PathResult> oracle;  // present when the instance is small enough
  bool oracle_run{};
};

/// A device participates iff it survived the threshold filter, its resource
/// verdict is 1 and t_his * t_res meets the task's threshold for its kind. The
/// owner always participates.
PlanStage run_plan_stage(const scenario::Scenario& scenario, const Task& task,
                         const std::map<DeviceId, double>& t_his, const Config& config);

struct PipelineReport {
  std::uint64_t scenario_seed{};
  Task task;
  std::size_t terminals{};
  std::size_t edge_devices{};
  std::size_t links{};
  std::size_t forward_records{};
  std::size_t compute_records{};
  std::size_t trust_edges{};

  std::size_t epochs_run{};
  double initial_loss{};
  double final_loss{};
  gnn::EvalMetrics test;
  gnn::EvalMetrics baseline;

  std::size_t terminals_after_filter{};
  std::size_t edge_devices_after_filter{};
  std::size_t trusted_terminals{};  // excluding the owner
  std::size_t trusted_edge_devices{};
  std::vector<GateRecord> gates;

  planner::PlanOutcome plan;
  bool oracle_run{};
  std::optional<PathResult> oracle;
  std::optional<bool> oracle_agrees;  // distributed avg equals the optimum
};

struct StageTiming {
  std::string stage;
  double seconds{};
};

struct PipelineRun {
  PipelineReport report;
  std::vector<StageTiming> timings;  // kept apart so reports stay byte-stable
};

/// Errors are rethrown as StageError tagged with the failing stage.
PipelineRun run_pipeline(const scenario::Scenario& scenario, const Task& task,
                         const Config& config);
PipelineRun run_pipeline(const Config& config);

void to_json(nlohmann::json& j, const GateRecord& g);
void from_json(const nlohmann::json& j, GateRecord& g);
void to_json(nlohmann::json& j, const PipelineReport& r);
void from_json(const nlohmann::json& j, PipelineReport& r);
nlohmann::json timings_json(const std::vector<StageTiming>& timings);

}  // namespace trustpath
