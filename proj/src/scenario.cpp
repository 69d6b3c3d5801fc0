#include "trustpath/scenario.hpp"

#include <deque>
#include <fstream>
#include <random>
#include <set>

#include <fmt/format.h>

#include "trustpath/errors.hpp"
#include "trustpath/presets.hpp"

namespace trustpath::scenario {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream per (seed, a, b) so one pair's draws never shift another's.
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t a, std::uint32_t b) {
  return std::mt19937_64(mix(mix(seed) ^ (std::uint64_t{a} << 32 | b)));
}

double draw(std::mt19937_64& rng, Range r) {
  if (r.hi <= r.lo) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

void check_range(const Range& r, const char* name, double lo, double hi) {
  if (!(r.lo <= r.hi) || r.lo < lo || r.hi > hi)
    throw ConfigError(fmt::format("{} range [{}, {}] invalid", name, r.lo, r.hi));
}

bool connected(const Topology& t) {
  const auto ids = t.device_ids();
  if (ids.empty()) return true;
  std::set<DeviceId> seen{ids.front()};
  std::deque<DeviceId> q{ids.front()};
  while (!q.empty()) {
    const auto v = q.front();
    q.pop_front();
    for (auto n : t.neighbors(v))
      if (seen.insert(n).second) q.push_back(n);
  }
  return seen.size() == ids.size();
}

}  // namespace

void ScenarioParams::validate() const {
  if (iphones + pixels == 0) throw ConfigError("scenario needs at least one terminal");
  if (lambdas == 0) throw ConfigError("scenario needs at least one edge device");
  if (!(arena_m > 0.0)) throw ConfigError("arena_m must be positive");
  if (!(link_radius_m > 0.0)) throw ConfigError("link_radius_m must be positive");
  check_range(terminal_storage_bits, "terminal_storage_bits", 0.0, HUGE_VAL);
  check_range(ec_storage_bits, "ec_storage_bits", 0.0, HUGE_VAL);
  check_range(ec_compute_seconds, "ec_compute_seconds", 0.0, HUGE_VAL);
  check_range(plr, "plr", 0.0, 1.0);
  check_range(tfsr, "tfsr", 0.0, 1.0);
  check_range(ec_success, "ec_success", 0.0, 1.0);
  if (!(willing_probability >= 0.0 && willing_probability <= 1.0))
    throw ConfigError("willing_probability must be in [0,1]");
  if (!(healthy_probability >= 0.0 && healthy_probability <= 1.0))
    throw ConfigError("healthy_probability must be in [0,1]");
}

std::map<DeviceId, DeviceKind> Scenario::kinds() const {
  std::map<DeviceId, DeviceKind> out;
  for (const auto& d : topology.devices()) out[d.id] = d.kind;
  return out;
}

bool owner_reaches_edge(const Topology& topology, DeviceId owner) {
  if (!topology.contains(owner)) return false;
  std::set<DeviceId> seen{owner};
  std::deque<DeviceId> q{owner};
  while (!q.empty()) {
    const auto v = q.front();
    q.pop_front();
    if (topology.device(v).is_edge()) return true;
    for (auto n : topology.neighbors(v))
      if (seen.insert(n).second) q.push_back(n);
  }
  return false;
}

void Scenario::validate() const {
  env.validate();
  if (!topology.contains(owner))
    throw ConfigError(fmt::format("owner {} is not a scenario device", owner.value));
  if (topology.device(owner).is_edge()) throw ConfigError("the task owner must be a terminal");
  for (const auto& d : topology.devices()) {
    try {
      d.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    if (!profiles.count(d.id))
      throw ConfigError(fmt::format("device {} has no resource profile", d.id.value));
    if (!behavior.count(d.id))
      throw ConfigError(fmt::format("device {} has no behavior parameters", d.id.value));
  }
  if (!owner_reaches_edge(topology, owner))
    throw ConfigError(fmt::format("owner {} cannot reach any edge device", owner.value));
}

Scenario generate_scenario(const ScenarioParams& params, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, params.arena_m);
  std::bernoulli_distribution willing(params.willing_probability);
  std::bernoulli_distribution healthy(params.healthy_probability);

  Scenario s;
  s.seed = seed;
  s.owner = DeviceId{0};
  s.env = presets::default_radio();

  const std::size_t terminals = params.iphones + params.pixels;
  const std::size_t total = terminals + params.lambdas;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt > params.max_retries)
      throw ConfigError(fmt::format(
          "no connected placement after {} attempts; enlarge link_radius_m or shrink arena_m",
          params.max_retries));
    Topology t;
    for (std::size_t i = 0; i < total; ++i) {
      Device d;
      d.id = DeviceId{static_cast<std::uint32_t>(i)};
      d.position = {coord(rng), coord(rng)};
      d.tx_power_w = presets::kTerminalTxPowerW;
      if (i < params.iphones) {
        d.price_per_s = presets::kIphonePricePerS;
        d.cpu_hz = presets::kIphoneCpuHz;
      } else if (i < terminals) {
        d.price_per_s = presets::kPixelPricePerS;
        d.cpu_hz = presets::kPixelCpuHz;
      } else {
        d.kind = DeviceKind::EdgeCompute;
        d.price_per_s = presets::kLambdaPricePerS;
        d.cpu_hz = presets::kLambdaCpuHz;
      }
      t.add_device(d);
    }
    const auto devs = t.devices();
    for (std::size_t i = 0; i < devs.size(); ++i)
      for (std::size_t k = i + 1; k < devs.size(); ++k) {
        if (devs[i].is_edge() && devs[k].is_edge()) continue;
        if (distance(devs[i].position, devs[k].position) <= params.link_radius_m)
          t.add_link(devs[i].id, devs[k].id);
      }
    if (connected(t)) {
      s.topology = std::move(t);
      break;
    }
  }

  for (const auto& d : s.topology.devices()) {
    s.models[d.id] = d.id.value < params.iphones ? "iphone" : d.is_edge() ? "lambda" : "pixel";
    resource::ResourceProfile p;
    p.device = d.id;
    Behavior b;
    if (d.is_edge()) {
      p.available_storage_bits = draw(rng, params.ec_storage_bits);
      p.available_compute_seconds = draw(rng, params.ec_compute_seconds);
      b.ec_success = draw(rng, params.ec_success);
    } else {
      p.available_storage_bits = draw(rng, params.terminal_storage_bits);
      b.plr = draw(rng, params.plr);
      b.tfsr = draw(rng, params.tfsr);
    }
    p.willing = willing(rng);
    p.healthy = healthy(rng);
    if (d.id == s.owner) p.willing = p.healthy = true;
    s.profiles[d.id] = p;
    s.behavior[d.id] = b;
  }
  return s;
}

collab::CollaborationLog synthesize_logs(const Scenario& scenario, const LogParams& params,
                                         std::uint64_t seed) {
  if (params.tasks_per_pair == 0) throw ConfigError("tasks_per_pair must be at least 1");
  if (params.packets_per_task == 0) throw ConfigError("packets_per_task must be at least 1");
  collab::CollaborationLog log;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& topo = scenario.topology;

  // One uniform per packet and per task keeps draws coupled across behavior
  // values: a higher PLR never yields fewer losses for the same seed.
  for (const auto& [a, b] : topo.links()) {
    const Device& da = topo.device(a);
    const Device& db = topo.device(b);
    if (!da.is_edge() && !db.is_edge()) {
      for (auto [src, dst] : {std::pair{a, b}, std::pair{b, a}}) {
        const Behavior& truth = scenario.behavior.at(dst);
        auto rng = stream(seed, src.value, dst.value);
        for (std::size_t n = 0; n < params.tasks_per_pair; ++n) {
          collab::ForwardRecord r;
          r.src = src;
          r.dst = dst;
          r.packets_total = params.packets_per_task;
          for (std::size_t p = 0; p < params.packets_per_task; ++p) {
            const double loss_draw = u(rng);
            const double fwd_draw = u(rng);
            if (loss_draw < truth.plr) {
              ++r.packets_lost;
            } else if (fwd_draw < truth.tfsr) {
              ++r.packets_forwarded;
            }
          }
          r.packets_received = r.packets_total - r.packets_lost;
          log.forward.push_back(r);
        }
      }
    } else if (da.is_edge() != db.is_edge()) {
      const DeviceId term = da.is_edge() ? b : a;
      const DeviceId ec = da.is_edge() ? a : b;
      const double p = scenario.behavior.at(ec).ec_success;
      auto rng = stream(seed, term.value, ec.value);
      for (std::size_t n = 0; n < params.tasks_per_pair; ++n)
        log.compute.push_back({term, ec, u(rng) < p ? 1 : 0});
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.lo, r.hi}); }

void from_json(const nlohmann::json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("a range is a two-element array");
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

void to_json(nlohmann::json& j, const ScenarioParams& p) {
  j = nlohmann::json{{"iphones", p.iphones},
                     {"pixels", p.pixels},
                     {"lambdas", p.lambdas},
                     {"arena_m", p.arena_m},
                     {"link_radius_m", p.link_radius_m},
                     {"max_retries", p.max_retries},
                     {"terminal_storage_bits", p.terminal_storage_bits},
                     {"ec_storage_bits", p.ec_storage_bits},
                     {"ec_compute_seconds", p.ec_compute_seconds},
                     {"willing_probability", p.willing_probability},
                     {"healthy_probability", p.healthy_probability},
                     {"plr", p.plr},
                     {"tfsr", p.tfsr},
                     {"ec_success", p.ec_success}};
}

void from_json(const nlohmann::json& j, ScenarioParams& p) {
  for (const auto& [key, v] : j.items()) {
    if (key == "iphones") p.iphones = v.get<std::size_t>();
    else if (key == "pixels") p.pixels = v.get<std::size_t>();
    else if (key == "lambdas") p.lambdas = v.get<std::size_t>();
    else if (key == "arena_m") p.arena_m = v.get<double>();
    else if (key == "link_radius_m") p.link_radius_m = v.get<double>();
    else if (key == "max_retries") p.max_retries = v.get<std::size_t>();
    else if (key == "terminal_storage_bits") p.terminal_storage_bits = v.get<Range>();
    else if (key == "ec_storage_bits") p.ec_storage_bits = v.get<Range>();
    else if (key == "ec_compute_seconds") p.ec_compute_seconds = v.get<Range>();
    else if (key == "willing_probability") p.willing_probability = v.get<double>();
    else if (key == "healthy_probability") p.healthy_probability = v.get<double>();
    else if (key == "plr") p.plr = v.get<Range>();
    else if (key == "tfsr") p.tfsr = v.get<Range>();
    else if (key == "ec_success") p.ec_success = v.get<Range>();
    else throw ConfigError(fmt::format("unknown scenario key '{}'", key));
  }
}

void to_json(nlohmann::json& j, const LogParams& p) {
  j = nlohmann::json{{"tasks_per_pair", p.tasks_per_pair},
                     {"packets_per_task", p.packets_per_task}};
}

void from_json(const nlohmann::json& j, LogParams& p) {
  for (const auto& [key, v] : j.items()) {
    if (key == "tasks_per_pair") p.tasks_per_pair = v.get<std::size_t>();
    else if (key == "packets_per_task") p.packets_per_task = v.get<std::size_t>();
    else throw ConfigError(fmt::format("unknown logs key '{}'", key));
  }
}

void to_json(nlohmann::json& j, const Scenario& s) {
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& d : s.topology.devices()) {
    nlohmann::json e = d;
    if (auto it = s.models.find(d.id); it != s.models.end()) e["model"] = it->second;
    nlohmann::json profile = s.profiles.at(d.id);
    profile.erase("device");
    e["profile"] = std::move(profile);
    const auto& b = s.behavior.at(d.id);
    e["behavior"] = d.is_edge() ? nlohmann::json{{"ec_success", b.ec_success}}
                                : nlohmann::json{{"plr", b.plr}, {"tfsr", b.tfsr}};
    devices.push_back(std::move(e));
  }
  nlohmann::json links = nlohmann::json::array();
  for (const auto& [a, b] : s.topology.links()) links.push_back({a, b});
  j = nlohmann::json{{"seed", s.seed},
                     {"owner", s.owner},
                     {"radio", s.env},
                     {"devices", std::move(devices)},
                     {"links", std::move(links)}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
  try {
    s = Scenario{};
    s.seed = j.value("seed", std::uint64_t{0});
    s.owner = j.at("owner").get<DeviceId>();
    s.env = j.contains("radio") ? j.at("radio").get<RadioEnv>() : presets::default_radio();
    for (const auto& e : j.at("devices")) {
      const Device d = e.get<Device>();
      s.topology.add_device(d);
      if (e.contains("model")) s.models[d.id] = e.at("model").get<std::string>();
      nlohmann::json profile = e.value("profile", nlohmann::json::object());
      profile["device"] = d.id;
      if (!profile.contains("available_storage_bits")) profile["available_storage_bits"] = 0.0;
      s.profiles[d.id] = profile.get<resource::ResourceProfile>();
      Behavior b;
      const auto beh = e.value("behavior", nlohmann::json::object());
      b.plr = beh.value("plr", 0.0);
      b.tfsr = beh.value("tfsr", 1.0);
      b.ec_success = beh.value("ec_success", 1.0);
      if (b.plr < 0 || b.plr > 1 || b.tfsr < 0 || b.tfsr > 1 || b.ec_success < 0 ||
          b.ec_success > 1)
        throw ConfigError(fmt::format("device {} behavior outside [0,1]", d.id.value));
      s.behavior[d.id] = b;
    }
    for (const auto& l : j.at("links")) {
      if (!l.is_array() || l.size() != 2) throw ConfigError("a link is a two-element array");
      s.topology.add_link(l[0].get<DeviceId>(), l[1].get<DeviceId>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed scenario: {}", e.what()));
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("invalid scenario: {}", e.what()));
  }
  s.validate();
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open scenario file '{}'", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  return j.get<Scenario>();
}

void save_scenario(const std::string& path, const Scenario& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write scenario file '{}'", path));
  out << nlohmann::json(s).dump(2) << '\n';
}

}  // namespace trustpath::scenario
