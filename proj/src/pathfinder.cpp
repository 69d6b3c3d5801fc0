#include "trustpath/pathfinder.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "trustpath/errors.hpp"

namespace trustpath::planner {
namespace {

bool on_path(const std::vector<DeviceId>& path, DeviceId id) {
  return std::find(path.begin(), path.end(), id) != path.end();
}

std::vector<PlanMessage> offers(const AgentState& s, const PlanContext& ctx) {
  std::vector<PlanMessage> out;
  const auto& topo = *ctx.topology;
  const Device& self = topo.device(s.device);
  for (DeviceId n : topo.neighbors(s.device)) {
    if (!ctx.trusted(n) || on_path(s.path, n)) continue;
    PlanMessage m;
    m.sender = s.device;
    m.receiver = n;
    m.prefix_path = s.path;
    if (s.predecessor) {
      const auto hop = relay_hop_value(topo.device(*s.predecessor), self, topo.device(n),
                                       *ctx.task, *ctx.env);
      m.prefix_sum = s.best_sum + hop.voc;
      m.prefix_hops = s.hop_count + 1;
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

bool PlanContext::trusted(DeviceId id) const {
  if (!topology->contains(id)) return false;
  if (id == task->owner) return true;
  auto it = gates->find(id);
  return it != gates->end() && it->second;
}

double candidate_average(const PlanContext& ctx, DeviceId receiver, const PlanMessage& msg) {
  const Device& dev = ctx.topology->device(receiver);
  if (dev.is_edge()) {
    const double v = compute_hop_value(dev, *ctx.task).voc;
    return (msg.prefix_sum + v) / static_cast<double>(msg.prefix_hops + 1);
  }
  if (msg.prefix_hops == 0) return 1.0;
  return msg.prefix_sum / static_cast<double>(msg.prefix_hops);
}

AgentState initial_state(const PlanContext& ctx, DeviceId device) {
  AgentState s;
  s.device = device;
  s.kind = ctx.topology->device(device).kind;
  s.trusted = ctx.trusted(device);
  if (device == ctx.task->owner) {
    s.has_path = true;
    s.best_avg = 1.0;
    s.path = {device};
  }
  return s;
}

StepResult agent_step(const AgentState& state, std::vector<PlanMessage> inbox,
                      const PlanContext& ctx, bool opening) {
  StepResult r{state, {}, false};
  if (!state.trusted) return r;
  std::stable_sort(inbox.begin(), inbox.end(),
                   [](const PlanMessage& a, const PlanMessage& b) { return a.sender < b.sender; });

  auto& s = r.state;
  for (const auto& msg : inbox) {
    if (msg.receiver != s.device) continue;
    if (on_path(msg.prefix_path, s.device)) continue;
    if (msg.prefix_path.empty() || msg.prefix_path.back() != msg.sender) continue;
    if (s.device == ctx.task->owner) continue;
    const double cand = candidate_average(ctx, s.device, msg);
    if (s.has_path && !(cand > s.best_avg)) continue;
    s.has_path = true;
    s.best_avg = cand;
    s.best_sum = msg.prefix_sum;
    s.hop_count = msg.prefix_hops;
    s.predecessor = msg.sender;
    s.path = msg.prefix_path;
    s.path.push_back(s.device);
    if (s.kind == DeviceKind::EdgeCompute) {
      s.best_sum += compute_hop_value(ctx.topology->device(s.device), *ctx.task).voc;
      s.hop_count = msg.prefix_hops + 1;
    }
    r.changed = true;
  }

  const bool speak = (r.changed && s.kind == DeviceKind::Terminal) ||
                     (opening && s.device == ctx.task->owner);
  if (speak) r.outbox = offers(s, ctx);
  return r;
}

// ---------------------------------------------------------------------------

PlanOutcome run_planning(const Topology& g_new, const RadioEnv& env, const Task& task,
                         const Gates& gates, const PlanOptions& options) {
  PlanContext ctx{&g_new, &env, &task, &gates};
  PlanOutcome out;
  if (!g_new.contains(task.owner)) {
    out.converged = true;
    return out;
  }

  std::map<DeviceId, AgentState> agents;
  for (DeviceId id : g_new.device_ids()) agents.emplace(id, initial_state(ctx, id));

  std::vector<PlanMessage> pending = agent_step(agents.at(task.owner), {}, ctx, true).outbox;
  out.messages = pending.size();

  if (options.schedule == Schedule::Synchronous) {
    while (!pending.empty() && out.rounds < options.max_rounds) {
      ++out.rounds;
      std::map<DeviceId, std::vector<PlanMessage>> inboxes;
      for (auto& m : pending) inboxes[m.receiver].push_back(m);
      if (options.trace) out.trace.push_back({out.rounds, pending});
      pending.clear();
      // Each agent reads only what was sent in the previous round.
      for (auto& [id, inbox] : inboxes) {
        auto step = agent_step(agents.at(id), std::move(inbox), ctx);
        agents.at(id) = std::move(step.state);
        for (auto& m : step.outbox) pending.push_back(std::move(m));
      }
      out.messages += pending.size();
    }
  } else {
    std::mt19937_64 rng(options.seed);
    while (!pending.empty() && out.rounds < options.max_rounds) {
      ++out.rounds;
      std::uniform_int_distribution<std::size_t> pick(0, pending.size() - 1);
      const std::size_t k = pick(rng);
      PlanMessage m = std::move(pending[k]);
      pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(k));
      if (options.trace) out.trace.push_back({out.rounds, {m}});
      const DeviceId to = m.receiver;
      auto step = agent_step(agents.at(to), {std::move(m)}, ctx);
      agents.at(to) = std::move(step.state);
      out.messages += step.outbox.size();
      for (auto& msg : step.outbox) pending.push_back(std::move(msg));
    }
  }
  out.converged = pending.empty();

  for (const auto& [id, s] : agents) {
    if (s.kind != DeviceKind::EdgeCompute || !s.has_path) continue;
    out.candidates.push_back(evaluate_path(g_new, env, task, s.path));
  }
  out.final = select_final(out.candidates);
  return out;
}

bool better_path(const PathResult& a, const PathResult& b) {
  if (a.avg_voc != b.avg_voc) return a.avg_voc > b.avg_voc;
  if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size();
  return a.hops < b.hops;
}

std::optional<PathResult> select_final(const std::vector<PathResult>& candidates) {
  if (candidates.empty()) return std::nullopt;
  const PathResult* best = &candidates.front();
  for (const auto& c : candidates)
    if (better_path(c, *best)) best = &c;
  return *best;
}

// ---------------------------------------------------------------------------

std::optional<PathResult> brute_force_optimal(const Topology& g_new, const RadioEnv& env,
                                              const Task& task, const Gates& gates,
                                              std::size_t node_bound) {
  if (g_new.size() > node_bound)
    throw OracleBoundError(fmt::format(
        "exhaustive search refused: {} devices exceed the bound of {}; shrink the instance or "
        "raise the bound explicitly",
        g_new.size(), node_bound));
  if (!g_new.contains(task.owner)) return std::nullopt;
  PlanContext ctx{&g_new, &env, &task, &gates};

  std::optional<PathResult> best;
  std::vector<DeviceId> path{task.owner};
  std::set<DeviceId> seen{task.owner};
  auto dfs = [&](auto&& self, DeviceId at) -> void {
    for (DeviceId n : g_new.neighbors(at)) {
      if (seen.count(n) || !ctx.trusted(n)) continue;
      path.push_back(n);
      if (g_new.device(n).is_edge()) {
        auto r = evaluate_path(g_new, env, task, path);
        if (!best || better_path(r, *best)) best = std::move(r);
      } else {
        seen.insert(n);
        self(self, n);
        seen.erase(n);
      }
      path.pop_back();
    }
  };
  dfs(dfs, task.owner);
  return best;
}

bool path_is_valid(const Topology& g_new, const RadioEnv& env, const Task& task,
                   const Gates& gates, const PathResult& path) {
  PlanContext ctx{&g_new, &env, &task, &gates};
  if (path.hops.size() < 2 || path.hops.front() != task.owner) return false;
  for (DeviceId id : path.hops)
    if (!ctx.trusted(id)) return false;
  try {
    const auto ref = evaluate_path(g_new, env, task, path.hops);
    return ref.per_hop_voc == path.per_hop_voc && ref.per_hop_fees == path.per_hop_fees &&
           ref.avg_voc == path.avg_voc;
  } catch (const DomainError&) {
    return false;
  }
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const PlanMessage& m) {
  j = nlohmann::json{{"sender", m.sender},
                     {"receiver", m.receiver},
                     {"prefix_sum", m.prefix_sum},
                     {"prefix_hops", m.prefix_hops},
                     {"prefix_path", m.prefix_path}};
}

void to_json(nlohmann::json& j, const RoundTrace& t) {
  j = nlohmann::json{{"round", t.round}, {"messages", t.delivered}};
}

void to_json(nlohmann::json& j, const PlanOutcome& o) {
  j = nlohmann::json{{"final", o.final ? nlohmann::json(*o.final) : nlohmann::json(nullptr)},
                     {"candidates", o.candidates},
                     {"rounds", o.rounds},
                     {"converged", o.converged},
                     {"messages", o.messages}};
  if (!o.trace.empty()) j["trace"] = o.trace;
}

void from_json(const nlohmann::json& j, PlanOutcome& o) {
  o.final.reset();
  if (!j.at("final").is_null()) o.final = j.at("final").get<PathResult>();
  o.candidates = j.at("candidates").get<std::vector<PathResult>>();
  o.rounds = j.at("rounds").get<std::size_t>();
  o.converged = j.at("converged").get<bool>();
  o.messages = j.at("messages").get<std::size_t>();
  o.trace.clear();
  if (j.contains("trace")) {
    for (const auto& t : j.at("trace")) {
      RoundTrace rt;
      rt.round = t.at("round").get<std::size_t>();
      for (const auto& m : t.at("messages")) {
        PlanMessage pm;
        pm.sender = m.at("sender").get<DeviceId>();
        pm.receiver = m.at("receiver").get<DeviceId>();
        pm.prefix_sum = m.at("prefix_sum").get<double>();
        pm.prefix_hops = m.at("prefix_hops").get<std::size_t>();
        pm.prefix_path = m.at("prefix_path").get<std::vector<DeviceId>>();
        rt.delivered.push_back(std::move(pm));
      }
      o.trace.push_back(std::move(rt));
    }
  }
}

}  // namespace trustpath::planner
