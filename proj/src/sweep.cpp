#include "trustpath/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include <fmt/format.h>

#include "trustpath/errors.hpp"
#include "trustpath/pipeline.hpp"

namespace trustpath {
namespace {

struct Named {
  SweepParameter p;
  const char* name;
};
constexpr Named kNames[] = {
    {SweepParameter::CTf, "c_tf"},         {SweepParameter::CEc, "c_ec"},
    {SweepParameter::Plr, "plr"},          {SweepParameter::Tfsr, "tfsr"},
    {SweepParameter::STfSoft, "s_tf_soft"}, {SweepParameter::STfHard, "s_tf_hard"},
    {SweepParameter::Size, "size"},        {SweepParameter::Density, "density"},
};

Task with_value(Task t, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::CTf: t.c_tf = v; break;
    case SweepParameter::CEc: t.c_ec = v; break;
    case SweepParameter::STfSoft: t.s_tf_soft = v; break;
    case SweepParameter::STfHard: t.s_tf_hard = v; break;
    case SweepParameter::Size: t.size_bits = v; break;
    case SweepParameter::Density: t.density = v; break;
    case SweepParameter::Plr:
    case SweepParameter::Tfsr: break;
  }
  t.validate();
  return t;
}

/// Non-owner terminals whose behavior is overwritten, chosen once per seed.
std::vector<DeviceId> swept_devices(const scenario::Scenario& sc, double fraction,
                                    std::uint64_t seed) {
  std::vector<DeviceId> pool;
  for (const auto& d : sc.topology.devices())
    if (!d.is_edge() && d.id != sc.owner) pool.push_back(d.id);
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
  pool.resize(std::min(k, pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

SweepRow summarize(const PlanStage& plan, const Task& task) {
  SweepRow row;
  row.avg_voc = plan.outcome.final ? plan.outcome.final->avg_voc : 0.0;
  for (const auto& g : plan.gates) {
    if (!g.trusted || g.device == task.owner) continue;
    (g.kind == DeviceKind::Terminal ? row.trusted_terminals : row.trusted_ecs) += 1.0;
  }
  row.rounds = static_cast<double>(plan.outcome.rounds);
  return row;
}

std::string fmt_value(double v) { return fmt::format("{}", v); }

}  // namespace

SweepParameter sweep_parameter_from_string(std::string_view name) {
  if (name == "size_bits") return SweepParameter::Size;
  for (const auto& n : kNames)
    if (name == n.name) return n.p;
  throw ConfigError(fmt::format(
      "unknown sweep parameter '{}' (expected c_tf, c_ec, plr, tfsr, s_tf_soft, s_tf_hard, size "
      "or density)",
      name));
}

std::string_view to_string(SweepParameter p) {
  for (const auto& n : kNames)
    if (n.p == p) return n.name;
  return "?";
}

bool retrains(SweepParameter p) { return p == SweepParameter::Plr || p == SweepParameter::Tfsr; }

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep grid is empty");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("sweep seeds must be distinct");
  if (!(swept_fraction >= 0.0 && swept_fraction <= 1.0))
    throw ConfigError("swept_fraction must be in [0,1]");
  if (retrains(parameter))
    for (double v : values)
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(fmt::format("{} value {} outside [0,1]", to_string(parameter), v));
}

SweepSpec SweepSpec::from_config(const SweepConfig& c) {
  SweepSpec s;
  s.parameter = sweep_parameter_from_string(c.parameter);
  s.values = c.values;
  s.seeds = c.seeds;
  s.swept_fraction = c.swept_fraction;
  return s;
}

SweepResult run_sweep(const SweepSpec& spec, const Config& base) {
  spec.validate();
  SweepResult result;
  const std::string pname(to_string(spec.parameter));

  for (std::uint64_t seed : spec.seeds) {
    Config cfg = base;
    const std::uint64_t offset = seed - base.seeds.scenario;
    cfg.seeds.scenario = seed;
    cfg.seeds.logs = base.seeds.logs + offset;
    cfg.seeds.training = base.seeds.training + offset;
    const auto sc = scenario::generate_scenario(cfg.scenario, cfg.seeds.scenario);
    const Task base_task = cfg.task.resolve(sc.owner);
    for (double v : spec.values) with_value(base_task, spec.parameter, v);

    std::optional<TrustStage> shared;
    if (!retrains(spec.parameter)) shared = run_trust_stage(sc, cfg);
    const auto targets = retrains(spec.parameter)
                             ? swept_devices(sc, spec.swept_fraction, seed)
                             : std::vector<DeviceId>{};

    for (double v : spec.values) {
      const auto t0 = std::chrono::steady_clock::now();
      const Task task = with_value(base_task, spec.parameter, v);
      PlanStage plan;
      if (retrains(spec.parameter)) {
        auto variant = sc;
        for (DeviceId id : targets)
          (spec.parameter == SweepParameter::Plr ? variant.behavior[id].plr
                                                 : variant.behavior[id].tfsr) = v;
        const auto trust = run_trust_stage(variant, cfg);
        plan = run_plan_stage(variant, task, trust.t_his, cfg);
      } else {
        plan = run_plan_stage(sc, task, shared->t_his, cfg);
      }
      SweepRow row = summarize(plan, task);
      row.kind = "run";
      row.parameter = pname;
      row.value = v;
      row.seed = seed;
      row.runtime_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.runs.push_back(std::move(row));
    }
  }

  for (double v : spec.values) {
    std::vector<const SweepRow*> rows;
    for (const auto& r : result.runs)
      if (r.value == v) rows.push_back(&r);
    const auto n = static_cast<double>(rows.size());
    SweepRow mean{"mean", pname, v, std::nullopt};
    SweepRow sd{"std", pname, v, std::nullopt};
    auto field = [&](double SweepRow::*f) {
      double m = 0.0;
      for (auto* r : rows) m += r->*f;
      m /= n;
      double var = 0.0;
      for (auto* r : rows) var += (r->*f - m) * (r->*f - m);
      mean.*f = m;
      sd.*f = rows.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    };
    field(&SweepRow::avg_voc);
    field(&SweepRow::trusted_terminals);
    field(&SweepRow::trusted_ecs);
    field(&SweepRow::rounds);
    field(&SweepRow::runtime_s);
    result.means.push_back(mean);
    result.stds.push_back(sd);
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "kind,parameter,value,seed,avg_voc,trusted_terminals,trusted_ecs,rounds,runtime_s\n";
  auto emit = [&](const SweepRow& r) {
    out << fmt::format("{},{},{},{},{},{},{},{},{:.6f}\n", r.kind, r.parameter,
                       fmt_value(r.value), r.seed ? fmt::format("{}", *r.seed) : std::string(),
                       r.avg_voc, r.trusted_terminals, r.trusted_ecs, r.rounds, r.runtime_s);
  };
  for (const auto& r : result.runs) emit(r);
  for (const auto& r : result.means) emit(r);
  for (const auto& r : result.stds) emit(r);
}

bool weakly_monotone(const std::vector<double>& series, Trend trend, double slack) {
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double d = series[i] - series[i - 1];
    if (trend == Trend::NonIncreasing && d > slack) return false;
    if (trend == Trend::NonDecreasing && d < -slack) return false;
  }
  return true;
}

}  // namespace trustpath
