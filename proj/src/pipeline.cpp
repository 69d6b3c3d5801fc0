#include "trustpath/pipeline.hpp"

#include <chrono>

#include <fmt/format.h>

#include "trustpath/errors.hpp"
#include "trustpath/evaluator_protocol.hpp"
#include "trustpath/resource_agent.hpp"

namespace trustpath {
namespace {

template <class F>
auto staged(const char* stage, std::vector<StageTiming>* timings, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto record = [&] {
    if (timings)
      timings->push_back(
          {stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record();
    } else {
      auto r = f();
      record();
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const IngestError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

gnn::EvalMetrics metrics_from_json(const nlohmann::json& j) {
  return {j.at("rmse").get<double>(), j.at("mae").get<double>(), j.at("count").get<std::size_t>()};
}

nlohmann::json metrics_json(const gnn::EvalMetrics& m) {
  return {{"rmse", m.rmse}, {"mae", m.mae}, {"count", m.count}};
}

TrustStage trust_stage(const scenario::Scenario& sc, collab::CollaborationLog log,
                       const Config& config, std::vector<StageTiming>* timings) {
  TrustStage out;
  out.log = std::move(log);
  out.graph = staged("graph", timings, [&] {
    return collab::build_graph(sc.kinds(), out.log.forward, out.log.compute, config.trust);
  });
  out.training = staged("train", timings,
                        [&] { return gnn::train(out.graph, config.model, config.seeds.training); });
  out.t_his = staged("reliability", timings, [&] {
    return historical_reliability(out.training.model, out.graph, sc.owner);
  });
  return out;
}

PlanStage plan_stage(const scenario::Scenario& sc, const Task& task,
                     const std::map<DeviceId, double>& t_his, const Config& config,
                     std::vector<StageTiming>* timings) {
  PlanStage out;
  auto reliability = [&](DeviceId id) {
    auto it = t_his.find(id);
    return it == t_his.end() ? 0.0 : it->second;
  };
  out.g_new = staged("filter", timings,
                     [&] { return gnn::filter_topology(sc.topology, task, reliability); });

  staged("gates", timings, [&] {
    for (const auto& d : out.g_new.devices()) {
      GateRecord g;
      g.device = d.id;
      g.kind = d.kind;
      if (d.id == task.owner) {
        g.t_his = 1.0;
        g.t_res = 1;
        g.reason = "owner";
        g.trust = 1.0;
        g.trusted = true;
      } else {
        g.t_his = reliability(d.id);
        const auto& profile = sc.profiles.at(d.id);
        resource::ResourceVerdict v;
        if (config.evaluator.mode == EvaluatorMode::External)
          v = resource::external_evaluate(config.evaluator.endpoint,
                                          resource::build_prompt(profile, task, d));
        else
          v = resource::evaluate_local(profile, task, d);
        g.t_res = v.t_res;
        g.reason = v.reason;
        g.trust = resource::compose_trust(g.t_his, v);
        const double threshold = d.is_edge() ? task.c_ec : task.c_tf;
        g.trusted = g.t_res == 1 && g.trust >= threshold;
      }
      out.gate_map[d.id] = g.trusted;
      out.gates.push_back(std::move(g));
    }
  });

  out.outcome = staged("plan", timings, [&] {
    return planner::run_planning(out.g_new, sc.env, task, out.gate_map, config.planner.options);
  });

  if (out.g_new.size() <= config.planner.oracle_node_bound) {
    out.oracle = staged("oracle", timings, [&] {
      return planner::brute_force_optimal(out.g_new, sc.env, task, out.gate_map,
                                          config.planner.oracle_node_bound);
    });
    out.oracle_run = true;
  }
  return out;
}

}  // namespace

std::map<DeviceId, double> historical_reliability(const gnn::TrustModel& model,
                                                  const collab::DirectTrustGraph& graph,
                                                  DeviceId owner) {
  std::map<DeviceId, double> out;
  const auto emb = gnn::embed(model, graph);
  for (const auto& [id, kind] : graph.nodes()) {
    if (id == owner) continue;
    out[id] = gnn::predict_pair(model, emb, owner, id).t_his;
  }
  return out;
}

TrustStage run_trust_stage(const scenario::Scenario& sc, const Config& config) {
  auto log = staged("logs", nullptr, [&] {
    return scenario::synthesize_logs(sc, config.logs, config.seeds.logs);
  });
  return trust_stage(sc, std::move(log), config, nullptr);
}

TrustStage run_trust_stage(const scenario::Scenario& sc, collab::CollaborationLog log,
                           const Config& config) {
  return trust_stage(sc, std::move(log), config, nullptr);
}

PlanStage run_plan_stage(const scenario::Scenario& sc, const Task& task,
                         const std::map<DeviceId, double>& t_his, const Config& config) {
  return plan_stage(sc, task, t_his, config, nullptr);
}

PipelineRun run_pipeline(const scenario::Scenario& sc, const Task& task, const Config& config) {
  PipelineRun run;
  auto* timings = &run.timings;
  staged("validate", timings, [&] {
    sc.validate();
    task.validate();
    if (!sc.topology.contains(task.owner) || sc.topology.device(task.owner).is_edge())
      throw ConfigError(fmt::format("task owner {} is not a terminal of the scenario",
                                    task.owner.value));
  });
  auto log = staged("logs", timings, [&] {
    return scenario::synthesize_logs(sc, config.logs, config.seeds.logs);
  });
  // Reliability is always taken from the task owner's point of view.
  scenario::Scenario view = sc;
  view.owner = task.owner;
  const auto trust = trust_stage(view, std::move(log), config, timings);
  const auto plan = plan_stage(view, task, trust.t_his, config, timings);

  auto& r = run.report;
  r.scenario_seed = sc.seed;
  r.task = task;
  r.terminals = sc.topology.count(DeviceKind::Terminal);
  r.edge_devices = sc.topology.count(DeviceKind::EdgeCompute);
  r.links = sc.topology.links().size();
  r.forward_records = trust.log.forward.size();
  r.compute_records = trust.log.compute.size();
  r.trust_edges = trust.graph.edges().size();
  const auto& curve = trust.training.curve;
  r.epochs_run = curve.empty() ? 0 : curve.back().epoch;
  r.initial_loss = curve.empty() ? 0.0 : curve.front().train_loss;
  r.final_loss = curve.empty() ? 0.0 : curve.back().train_loss;
  r.test = trust.training.test;
  r.baseline = trust.training.baseline;
  r.terminals_after_filter = plan.g_new.count(DeviceKind::Terminal);
  r.edge_devices_after_filter = plan.g_new.count(DeviceKind::EdgeCompute);
  for (const auto& g : plan.gates) {
    if (!g.trusted || g.device == task.owner) continue;
    (g.kind == DeviceKind::Terminal ? r.trusted_terminals : r.trusted_edge_devices)++;
  }
  r.gates = plan.gates;
  r.plan = plan.outcome;
  r.oracle_run = plan.oracle_run;
  r.oracle = plan.oracle;
  if (plan.oracle_run) {
    const double got = plan.outcome.final ? plan.outcome.final->avg_voc : -1.0;
    const double best = plan.oracle ? plan.oracle->avg_voc : -1.0;
    r.oracle_agrees = got == best;
  }
  return run;
}

PipelineRun run_pipeline(const Config& config) {
  const auto sc = staged("scenario", nullptr, [&] {
    return scenario::generate_scenario(config.scenario, config.seeds.scenario);
  });
  const Task task = config.task.resolve(sc.owner);
  return run_pipeline(sc, task, config);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const GateRecord& g) {
  j = nlohmann::json{{"id", g.device},   {"kind", to_string(g.kind)}, {"t_his", g.t_his},
                     {"t_res", g.t_res}, {"reason", g.reason},        {"trust", g.trust},
                     {"trusted", g.trusted}};
}

void from_json(const nlohmann::json& j, GateRecord& g) {
  g.device = j.at("id").get<DeviceId>();
  g.kind = device_kind_from_string(j.at("kind").get<std::string>());
  g.t_his = j.at("t_his").get<double>();
  g.t_res = j.at("t_res").get<int>();
  g.reason = j.at("reason").get<std::string>();
  g.trust = j.at("trust").get<double>();
  g.trusted = j.at("trusted").get<bool>();
}

void to_json(nlohmann::json& j, const PipelineReport& r) {
  j = nlohmann::json{
      {"scenario", {{"seed", r.scenario_seed},
                    {"terminals", r.terminals},
                    {"edge_devices", r.edge_devices},
                    {"links", r.links}}},
      {"task", r.task},
      {"logs", {{"forward_records", r.forward_records}, {"compute_records", r.compute_records}}},
      {"trust_graph", {{"edges", r.trust_edges}}},
      {"training", {{"epochs_run", r.epochs_run},
                    {"initial_loss", r.initial_loss},
                    {"final_loss", r.final_loss},
                    {"test", metrics_json(r.test)},
                    {"baseline", metrics_json(r.baseline)}}},
      {"filter", {{"terminals_before", r.terminals},
                  {"edge_devices_before", r.edge_devices},
                  {"terminals_after", r.terminals_after_filter},
                  {"edge_devices_after", r.edge_devices_after_filter}}},
      {"gates", {{"trusted_terminals", r.trusted_terminals},
                 {"trusted_edge_devices", r.trusted_edge_devices},
                 {"devices", r.gates}}},
      {"plan", r.plan},
      {"oracle", {{"run", r.oracle_run},
                  {"path", r.oracle ? nlohmann::json(*r.oracle) : nlohmann::json(nullptr)},
                  {"agrees", r.oracle_agrees ? nlohmann::json(*r.oracle_agrees)
                                             : nlohmann::json(nullptr)}}},
  };
}

void from_json(const nlohmann::json& j, PipelineReport& r) {
  r = PipelineReport{};
  const auto& sc = j.at("scenario");
  r.scenario_seed = sc.at("seed").get<std::uint64_t>();
  r.terminals = sc.at("terminals").get<std::size_t>();
  r.edge_devices = sc.at("edge_devices").get<std::size_t>();
  r.links = sc.at("links").get<std::size_t>();
  r.task = j.at("task").get<Task>();
  r.forward_records = j.at("logs").at("forward_records").get<std::size_t>();
  r.compute_records = j.at("logs").at("compute_records").get<std::size_t>();
  r.trust_edges = j.at("trust_graph").at("edges").get<std::size_t>();
  const auto& tr = j.at("training");
  r.epochs_run = tr.at("epochs_run").get<std::size_t>();
  r.initial_loss = tr.at("initial_loss").get<double>();
  r.final_loss = tr.at("final_loss").get<double>();
  r.test = metrics_from_json(tr.at("test"));
  r.baseline = metrics_from_json(tr.at("baseline"));
  const auto& f = j.at("filter");
  r.terminals_after_filter = f.at("terminals_after").get<std::size_t>();
  r.edge_devices_after_filter = f.at("edge_devices_after").get<std::size_t>();
  const auto& g = j.at("gates");
  r.trusted_terminals = g.at("trusted_terminals").get<std::size_t>();
  r.trusted_edge_devices = g.at("trusted_edge_devices").get<std::size_t>();
  r.gates = g.at("devices").get<std::vector<GateRecord>>();
  r.plan = j.at("plan").get<planner::PlanOutcome>();
  const auto& o = j.at("oracle");
  r.oracle_run = o.at("run").get<bool>();
  if (!o.at("path").is_null()) r.oracle = o.at("path").get<PathResult>();
  if (!o.at("agrees").is_null()) r.oracle_agrees = o.at("agrees").get<bool>();
}

nlohmann::json timings_json(const std::vector<StageTiming>& timings) {
  nlohmann::json stages = nlohmann::json::array();
  double total = 0.0;
  for (const auto& t : timings) {
    stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    total += t.seconds;
  }
  return {{"stages", std::move(stages)}, {"total_seconds", total}};
}

}  // namespace trustpath
