#include "trustpath/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "trustpath/errors.hpp"
#include "trustpath/model_io.hpp"
#include "trustpath/presets.hpp"

namespace trustpath {
namespace {

const std::set<std::string> kTaskKeys = {"density",   "size_bits", "c_tf",      "c_ec",
                                         "s_tf_soft", "s_tf_hard", "s_ec_soft", "s_ec_hard"};

void check_keys(const nlohmann::json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(fmt::format("unknown key '{}.{}'", where, key));
  }
}

std::string_view schedule_name(planner::Schedule s) {
  return s == planner::Schedule::Synchronous ? "sync" : "async";
}

}  // namespace

Task TaskConfig::resolve(DeviceId scenario_owner) const {
  Task t = presets::named_task(preset, owner.value_or(scenario_owner));
  for (const auto& [key, v] : overrides.items()) {
    if (!v.is_number()) throw ConfigError(fmt::format("task.{} must be a number", key));
    const double x = v.get<double>();
    if (key == "density") t.density = x;
    else if (key == "size_bits") t.size_bits = x;
    else if (key == "c_tf") t.c_tf = x;
    else if (key == "c_ec") t.c_ec = x;
    else if (key == "s_tf_soft") t.s_tf_soft = x;
    else if (key == "s_tf_hard") t.s_tf_hard = x;
    else if (key == "s_ec_soft") t.s_ec_soft = x;
    else if (key == "s_ec_hard") t.s_ec_hard = x;
    else throw ConfigError(fmt::format("unknown key 'task.{}'", key));
  }
  t.validate();
  return t;
}

void Config::validate() const {
  scenario.validate();
  trust.validate();
  model.validate();
  task.resolve(DeviceId{0});
  if (logs.tasks_per_pair == 0 || logs.packets_per_task == 0)
    throw ConfigError("logs.tasks_per_pair and logs.packets_per_task must be positive");
  if (planner.options.max_rounds == 0) throw ConfigError("planner.max_rounds must be positive");
  if (evaluator.mode == EvaluatorMode::External) evaluator.endpoint.validate();
  if (!(sweep.swept_fraction >= 0.0 && sweep.swept_fraction <= 1.0))
    throw ConfigError("sweep.swept_fraction must be in [0,1]");
}

nlohmann::json to_json_config(const Config& c) {
  nlohmann::json task = c.task.overrides;
  task["preset"] = c.task.preset;
  if (c.task.owner) task["owner"] = *c.task.owner;
  return {
      {"seeds", {{"scenario", c.seeds.scenario}, {"logs", c.seeds.logs},
                 {"training", c.seeds.training}}},
      {"scenario", c.scenario},
      {"logs", c.logs},
      {"trust", {{"alpha1", c.trust.alpha1}, {"alpha2", c.trust.alpha2}}},
      {"model", c.model},
      {"task", task},
      {"planner", {{"max_rounds", c.planner.options.max_rounds},
                   {"schedule", schedule_name(c.planner.options.schedule)},
                   {"seed", c.planner.options.seed},
                   {"trace", c.planner.options.trace},
                   {"oracle_node_bound", c.planner.oracle_node_bound}}},
      {"evaluator", {{"mode", c.evaluator.mode == EvaluatorMode::Local ? "local" : "external"},
                     {"endpoint", c.evaluator.endpoint}}},
      {"sweep", {{"parameter", c.sweep.parameter},
                 {"values", c.sweep.values},
                 {"seeds", c.sweep.seeds},
                 {"swept_fraction", c.sweep.swept_fraction}}},
  };
}

Config config_from_json(const nlohmann::json& j) {
  Config c;
  try {
    check_keys(j, "config",
               {"seeds", "scenario", "logs", "trust", "model", "task", "planner", "evaluator",
                "sweep"});
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      check_keys(s, "seeds", {"scenario", "logs", "training"});
      c.seeds.scenario = s.value("scenario", c.seeds.scenario);
      c.seeds.logs = s.value("logs", c.seeds.logs);
      c.seeds.training = s.value("training", c.seeds.training);
    }
    if (j.contains("scenario")) c.scenario = j["scenario"].get<scenario::ScenarioParams>();
    if (j.contains("logs")) c.logs = j["logs"].get<scenario::LogParams>();
    if (j.contains("trust")) {
      const auto& t = j["trust"];
      check_keys(t, "trust", {"alpha1", "alpha2"});
      c.trust.alpha1 = t.value("alpha1", c.trust.alpha1);
      c.trust.alpha2 = t.value("alpha2", c.trust.alpha2);
    }
    if (j.contains("model")) {
      gnn::ModelConfig m;
      gnn::from_json(j["model"], m);
      c.model = m;
    }
    if (j.contains("task")) {
      const auto& t = j["task"];
      if (!t.is_object()) throw ConfigError("'task' must be an object");
      for (const auto& [key, v] : t.items()) {
        if (key == "preset") c.task.preset = v.get<std::string>();
        else if (key == "owner") c.task.owner = v.get<DeviceId>();
        else if (kTaskKeys.count(key)) c.task.overrides[key] = v;
        else throw ConfigError(fmt::format("unknown key 'task.{}'", key));
      }
    }
    if (j.contains("planner")) {
      const auto& p = j["planner"];
      check_keys(p, "planner", {"max_rounds", "schedule", "seed", "trace", "oracle_node_bound"});
      auto& o = c.planner.options;
      o.max_rounds = p.value("max_rounds", o.max_rounds);
      o.seed = p.value("seed", o.seed);
      o.trace = p.value("trace", o.trace);
      c.planner.oracle_node_bound = p.value("oracle_node_bound", c.planner.oracle_node_bound);
      if (p.contains("schedule")) {
        const auto s = p["schedule"].get<std::string>();
        if (s == "sync") o.schedule = planner::Schedule::Synchronous;
        else if (s == "async") o.schedule = planner::Schedule::RandomAsync;
        else throw ConfigError(fmt::format("planner.schedule must be sync or async, not '{}'", s));
      }
    }
    if (j.contains("evaluator")) {
      const auto& e = j["evaluator"];
      check_keys(e, "evaluator", {"mode", "endpoint"});
      if (e.contains("mode")) {
        const auto m = e["mode"].get<std::string>();
        if (m == "local") c.evaluator.mode = EvaluatorMode::Local;
        else if (m == "external") c.evaluator.mode = EvaluatorMode::External;
        else throw ConfigError(fmt::format("evaluator.mode must be local or external, not '{}'", m));
      }
      if (e.contains("endpoint")) c.evaluator.endpoint = e["endpoint"].get<resource::EvaluatorEndpoint>();
    }
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      check_keys(s, "sweep", {"parameter", "values", "seeds", "swept_fraction"});
      c.sweep.parameter = s.value("parameter", c.sweep.parameter);
      if (s.contains("values")) c.sweep.values = s["values"].get<std::vector<double>>();
      if (s.contains("seeds")) c.sweep.seeds = s["seeds"].get<std::vector<std::uint64_t>>();
      c.sweep.swept_fraction = s.value("swept_fraction", c.sweep.swept_fraction);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("configuration: {}", e.what()));
  }
  c.validate();
  return c;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(fmt::format("override '{}' is not of the form path=value", assignment));
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  auto value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError(fmt::format("override path '{}' has an empty key", path));
    if (!node->is_object()) {
      if (!node->is_null())
        throw ConfigError(fmt::format("override path '{}' crosses a non-object", path));
      *node = nlohmann::json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  nlohmann::json doc = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

}  // namespace trustpath
