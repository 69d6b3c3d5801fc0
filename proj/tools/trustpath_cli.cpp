// trustpath: command-line front end.
//
// Exit codes: 0 success, 2 configuration or input error, 3 stage failure,
// 4 planner did not converge within max_rounds.

#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "trustpath/collab_log.hpp"
#include "trustpath/config.hpp"
#include "trustpath/errors.hpp"
#include "trustpath/model_io.hpp"
#include "trustpath/pipeline.hpp"
#include "trustpath/scenario.hpp"
#include "trustpath/sweep.hpp"
#include "trustpath/trust_train.hpp"

namespace {

using namespace trustpath;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitStage = 3;
constexpr int kExitNoConvergence = 4;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;

  Config load() const { return load_config(config, sets); }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON configuration file");
  cmd->add_option("--set", c.sets, "Override a configuration value, e.g. model.epochs=50");
  cmd->add_option("-o,--out", c.out, "Output file (default: stdout)");
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct PlanInputs {
  scenario::Scenario sc;
  collab::CollaborationLog log;
  gnn::TrustModel model;
  collab::DirectTrustGraph graph;
};

PlanInputs load_plan_inputs(const std::string& scenario_path, const std::string& logs_path,
                            const std::string& model_path, const Config& cfg) {
  PlanInputs in;
  in.sc = scenario::load_scenario(scenario_path);
  in.log = collab::read_log_file(logs_path);
  in.model = gnn::load_model(model_path);
  in.graph = collab::build_graph(in.sc.kinds(), in.log.forward, in.log.compute, cfg.trust);
  return in;
}

int run(int argc, char** argv) {
  CLI::App app{"Trusted multi-hop collaborator selection toolkit"};
  app.require_subcommand(1);

  Common gen_opts;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic scenario");
  add_common(gen, gen_opts);

  Common logs_opts;
  std::string logs_scenario;
  auto* logs = app.add_subcommand("logs", "Synthesize collaboration logs for a scenario");
  add_common(logs, logs_opts);
  logs->add_option("-s,--scenario", logs_scenario, "Scenario JSON")->required();

  Common train_opts;
  std::string train_scenario, train_logs, train_curve, train_metrics;
  auto* train = app.add_subcommand("train", "Train the trust model on collaboration logs");
  add_common(train, train_opts);
  train->add_option("-s,--scenario", train_scenario, "Scenario JSON")->required();
  train->add_option("-l,--logs", train_logs, "Collaboration log (.jsonl or .csv)")->required();
  train->add_option("--curve", train_curve, "Write the loss curve as CSV");
  train->add_option("--metrics", train_metrics, "Write held-out metrics as JSON");

  Common plan_opts;
  std::string plan_scenario, plan_logs, plan_model;
  auto* plan = app.add_subcommand("plan", "Filter, gate and plan with a trained model");
  add_common(plan, plan_opts);
  plan->add_option("-s,--scenario", plan_scenario, "Scenario JSON")->required();
  plan->add_option("-l,--logs", plan_logs, "Collaboration log")->required();
  plan->add_option("-m,--model", plan_model, "Model checkpoint")->required();

  Common oracle_opts;
  std::string oracle_scenario, oracle_logs, oracle_model;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum on the gated topology");
  add_common(oracle, oracle_opts);
  oracle->add_option("-s,--scenario", oracle_scenario, "Scenario JSON")->required();
  oracle->add_option("-l,--logs", oracle_logs, "Collaboration log")->required();
  oracle->add_option("-m,--model", oracle_model, "Model checkpoint")->required();

  Common pipe_opts;
  std::string pipe_scenario, pipe_timings;
  auto* pipe = app.add_subcommand("pipeline", "Run every stage end to end");
  add_common(pipe, pipe_opts);
  pipe->add_option("-s,--scenario", pipe_scenario, "Use this scenario instead of generating one");
  pipe->add_option("--timings", pipe_timings, "Write per-stage wall-clock timings as JSON");

  Common sweep_opts;
  std::string sweep_param, sweep_values, sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over a grid and seeds");
  add_common(sweep, sweep_opts);
  sweep->add_option("-p,--parameter", sweep_param, "Parameter to sweep");
  sweep->add_option("--values", sweep_values, "Comma-separated grid values");
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated scenario seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*gen) {
    const auto cfg = gen_opts.load();
    const auto sc = scenario::generate_scenario(cfg.scenario, cfg.seeds.scenario);
    emit(gen_opts.out, dump(sc));
    return kExitOk;
  }
  if (*logs) {
    const auto cfg = logs_opts.load();
    const auto sc = scenario::load_scenario(logs_scenario);
    const auto log = scenario::synthesize_logs(sc, cfg.logs, cfg.seeds.logs);
    std::ostringstream text;
    collab::write_log(text, log, collab::format_for_path(logs_opts.out));
    emit(logs_opts.out, text.str());
    return kExitOk;
  }
  if (*train) {
    const auto cfg = train_opts.load();
    const auto sc = scenario::load_scenario(train_scenario);
    const auto log = collab::read_log_file(train_logs);
    const auto graph = collab::build_graph(sc.kinds(), log.forward, log.compute, cfg.trust);
    const auto result = gnn::train(graph, cfg.model, cfg.seeds.training);
    emit(train_opts.out, gnn::checkpoint_json(result.model).dump() + "\n");
    if (!train_curve.empty()) {
      std::ostringstream csv;
      gnn::write_curve_csv(csv, result.curve);
      emit(train_curve, csv.str());
    }
    const nlohmann::json metrics{
        {"test", {{"rmse", result.test.rmse}, {"mae", result.test.mae}, {"count", result.test.count}}},
        {"baseline", {{"rmse", result.baseline.rmse}, {"mae", result.baseline.mae}}},
        {"best_epoch", result.best_epoch},
        {"early_stopped", result.early_stopped}};
    if (!train_metrics.empty()) emit(train_metrics, dump(metrics));
    else std::cerr << metrics.dump() << '\n';
    return kExitOk;
  }
  if (*plan || *oracle) {
    const bool is_plan = plan->parsed();
    const auto& opts = is_plan ? plan_opts : oracle_opts;
    const auto cfg = opts.load();
    const auto in = is_plan ? load_plan_inputs(plan_scenario, plan_logs, plan_model, cfg)
                            : load_plan_inputs(oracle_scenario, oracle_logs, oracle_model, cfg);
    const Task task = cfg.task.resolve(in.sc.owner);
    const auto t_his = historical_reliability(in.model, in.graph, task.owner);
    auto view = in.sc;
    view.owner = task.owner;
    if (is_plan) {
      const auto stage = run_plan_stage(view, task, t_his, cfg);
      emit(opts.out, dump({{"task", task},
                           {"gates", stage.gates},
                           {"plan", stage.outcome},
                           {"oracle", stage.oracle ? nlohmann::json(*stage.oracle)
                                                   : nlohmann::json(nullptr)}}));
      return stage.outcome.converged ? kExitOk : kExitNoConvergence;
    }
    auto cfg_no_plan = cfg;
    cfg_no_plan.planner.oracle_node_bound = 0;  // skip the embedded cross-check
    const auto stage = run_plan_stage(view, task, t_his, cfg_no_plan);
    const auto best = planner::brute_force_optimal(stage.g_new, view.env, task, stage.gate_map,
                                                   cfg.planner.oracle_node_bound);
    emit(opts.out, dump({{"task", task},
                         {"devices", stage.g_new.size()},
                         {"optimum", best ? nlohmann::json(*best) : nlohmann::json(nullptr)}}));
    return kExitOk;
  }
  if (*pipe) {
    const auto cfg = pipe_opts.load();
    PipelineRun result;
    if (pipe_scenario.empty()) {
      result = run_pipeline(cfg);
    } else {
      const auto sc = scenario::load_scenario(pipe_scenario);
      result = run_pipeline(sc, cfg.task.resolve(sc.owner), cfg);
    }
    emit(pipe_opts.out, dump(result.report));
    if (!pipe_timings.empty()) emit(pipe_timings, dump(timings_json(result.timings)));
    return result.report.plan.converged ? kExitOk : kExitNoConvergence;
  }
  if (*sweep) {
    auto sets = sweep_opts.sets;
    if (!sweep_param.empty()) sets.push_back("sweep.parameter=\"" + sweep_param + "\"");
    if (!sweep_values.empty()) sets.push_back("sweep.values=[" + sweep_values + "]");
    if (!sweep_seeds.empty()) sets.push_back("sweep.seeds=[" + sweep_seeds + "]");
    const auto cfg = load_config(sweep_opts.config, sets);
    const auto result = run_sweep(SweepSpec::from_config(cfg.sweep), cfg);
    std::ostringstream csv;
    write_sweep_csv(csv, result);
    emit(sweep_opts.out, csv.str());
    return kExitOk;
  }
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const trustpath::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.input_error() ? kExitInput : kExitStage;
  } catch (const trustpath::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitInput;
  } catch (const trustpath::IngestError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
}
