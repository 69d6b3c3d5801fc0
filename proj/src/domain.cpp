#include "trustpath/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "trustpath/errors.hpp"
#include "trustpath/presets.hpp"

namespace trustpath {

std::string to_string(DeviceId id) { return std::to_string(id.value); }

std::string_view to_string(DeviceKind kind) {
  return kind == DeviceKind::Terminal ? "terminal" : "edge";
}

DeviceKind device_kind_from_string(std::string_view text) {
  if (text == "terminal") return DeviceKind::Terminal;
  if (text == "edge") return DeviceKind::EdgeCompute;
  throw ConfigError(fmt::format("unknown device kind '{}'", text));
}

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

void Device::validate() const {
  if (!(tx_power_w > 0.0))
    throw DomainError(fmt::format("device {}: tx_power must be positive", id.value));
  if (!(price_per_s >= 0.0))
    throw DomainError(fmt::format("device {}: price must be non-negative", id.value));
  if (is_edge() && !(cpu_hz > 0.0))
    throw DomainError(fmt::format("device {}: edge device needs cpu_hz > 0", id.value));
}

void Task::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(c_tf) || !unit(c_ec)) throw ConfigError("task trust thresholds must lie in [0,1]");
  if (!(s_tf_soft > 0.0 && s_tf_soft <= s_tf_hard))
    throw ConfigError("task forwarding fee thresholds need 0 < soft <= hard");
  if (!(s_ec_soft > 0.0 && s_ec_soft <= s_ec_hard))
    throw ConfigError("task computing fee thresholds need 0 < soft <= hard");
  if (!(size_bits > 0.0)) throw ConfigError("task size must be positive");
  if (!(density > 0.0)) throw ConfigError("task density must be positive");
}

void RadioEnv::validate() const {
  if (!(bandwidth_hz > 0.0) || !(noise_w > 0.0))
    throw ConfigError("radio bandwidth and noise power must be positive");
}

// ---------------------------------------------------------------------------
// Topology

void Topology::add_device(const Device& device) {
  if (contains(device.id))
    throw DomainError(fmt::format("duplicate device id {}", device.id.value));
  devices_.emplace(device.id, device);
  adjacency_[device.id];
}

void Topology::add_link(DeviceId a, DeviceId b) {
  if (a == b) throw DomainError(fmt::format("self-link on device {}", a.value));
  if (!contains(a) || !contains(b))
    throw DomainError(fmt::format("link {}-{} references an unknown device", a.value, b.value));
  if (has_link(a, b)) return;
  auto insert_sorted = [](std::vector<DeviceId>& list, DeviceId id) {
    list.insert(std::lower_bound(list.begin(), list.end(), id), id);
  };
  insert_sorted(adjacency_[a], b);
  insert_sorted(adjacency_[b], a);
}

const Device& Topology::device(DeviceId id) const {
  auto it = devices_.find(id);
  if (it == devices_.end()) throw DomainError(fmt::format("unknown device {}", id.value));
  return it->second;
}

bool Topology::has_link(DeviceId a, DeviceId b) const {
  auto it = adjacency_.find(a);
  if (it == adjacency_.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), b);
}

const std::vector<DeviceId>& Topology::neighbors(DeviceId id) const {
  auto it = adjacency_.find(id);
  if (it == adjacency_.end()) throw DomainError(fmt::format("unknown device {}", id.value));
  return it->second;
}

std::vector<DeviceId> Topology::device_ids() const {
  std::vector<DeviceId> ids;
  ids.reserve(devices_.size());
  for (const auto& [id, _] : devices_) ids.push_back(id);
  return ids;
}

std::vector<Device> Topology::devices() const {
  std::vector<Device> out;
  out.reserve(devices_.size());
  for (const auto& [_, d] : devices_) out.push_back(d);
  return out;
}

std::vector<std::pair<DeviceId, DeviceId>> Topology::links() const {
  std::vector<std::pair<DeviceId, DeviceId>> out;
  for (const auto& [a, list] : adjacency_)
    for (DeviceId b : list)
      if (a < b) out.emplace_back(a, b);
  return out;
}

std::size_t Topology::count(DeviceKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      devices_.begin(), devices_.end(), [kind](const auto& kv) { return kv.second.kind == kind; }));
}

Topology Topology::induced(const std::function<bool(const Device&)>& keep) const {
  Topology out;
  for (const auto& [id, d] : devices_)
    if (keep(d)) out.add_device(d);
  for (const auto& [a, b] : links())
    if (out.contains(a) && out.contains(b)) out.add_link(a, b);
  return out;
}

// ---------------------------------------------------------------------------
// Formulas

double units::dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double transmission_rate(const Device& sender, Position receiver, const RadioEnv& env) {
  const double d = distance(sender.position, receiver);
  if (!(d > 0.0))
    throw DomainError(fmt::format("device {}: zero transmission distance", sender.id.value));
  const double gain = std::pow(d, -4.0);
  return env.bandwidth_hz * std::log2(1.0 + sender.tx_power_w * gain / env.noise_w);
}

double hop_transfer_time(double size_bits, double rate_bps) {
  if (!(rate_bps > 0.0)) throw DomainError("unreachable link: transmission rate is zero");
  return size_bits / rate_bps;
}

double forwarding_fee(double price_per_s, double t_receive, double t_send) {
  return price_per_s * (t_receive + t_send);
}

double voc(double fee, double soft, double hard) {
  if (!(soft > 0.0) || hard < soft)
    throw ConfigError(fmt::format("invalid fee thresholds soft={} hard={}", soft, hard));
  if (fee < soft) return 1.0;
  if (fee > hard) return 0.0;
  return std::exp(-std::abs((fee - soft) / soft));
}

double computing_time(const Task& task, const Device& ec) {
  if (!ec.is_edge())
    throw DomainError(fmt::format("device {} is not an edge-compute device", ec.id.value));
  return task.density * task.size_bits / ec.cpu_hz;
}

double average_voc(std::span<const double> values) {
  if (values.empty()) throw DomainError("average VoC of an empty hop list");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

HopValue relay_hop_value(const Device& prev, const Device& self, const Device& next,
                         const Task& task, const RadioEnv& env) {
  const double t_in = hop_transfer_time(task.size_bits, transmission_rate(prev, self.position, env));
  const double t_out = hop_transfer_time(task.size_bits, transmission_rate(self, next.position, env));
  const double fee = forwarding_fee(self.price_per_s, t_in, t_out);
  return {fee, voc(fee, task.s_tf_soft, task.s_tf_hard)};
}

HopValue compute_hop_value(const Device& ec, const Task& task) {
  const double fee = computing_time(task, ec) * ec.price_per_s;
  return {fee, voc(fee, task.s_ec_soft, task.s_ec_hard)};
}

PathResult evaluate_path(const Topology& topology, const RadioEnv& env, const Task& task,
                         std::span<const DeviceId> hops) {
  if (hops.size() < 2) throw DomainError("path needs the owner and at least one more device");
  if (hops.front() != task.owner)
    throw DomainError(fmt::format("path starts at {} instead of the task owner {}",
                                  hops.front().value, task.owner.value));
  std::set<DeviceId> seen;
  for (DeviceId id : hops) {
    if (!topology.contains(id))
      throw DomainError(fmt::format("path device {} not in topology", id.value));
    if (!seen.insert(id).second)
      throw DomainError(fmt::format("path visits device {} twice", id.value));
  }
  for (std::size_t k = 1; k < hops.size(); ++k)
    if (!topology.has_link(hops[k - 1], hops[k]))
      throw DomainError(fmt::format("no link between {} and {}", hops[k - 1].value, hops[k].value));

  const Device& last = topology.device(hops.back());
  if (!last.is_edge()) throw DomainError("path does not end at an edge-compute device");

  PathResult result;
  result.hops.assign(hops.begin(), hops.end());
  for (std::size_t k = 1; k + 1 < hops.size(); ++k) {
    const Device& self = topology.device(hops[k]);
    if (self.is_edge())
      throw DomainError(fmt::format("edge device {} cannot relay", self.id.value));
    const HopValue v = relay_hop_value(topology.device(hops[k - 1]), self,
                                       topology.device(hops[k + 1]), task, env);
    result.per_hop_fees.push_back(v.fee);
    result.per_hop_voc.push_back(v.voc);
  }
  const HopValue last_value = compute_hop_value(last, task);
  result.per_hop_fees.push_back(last_value.fee);
  result.per_hop_voc.push_back(last_value.voc);
  result.avg_voc = average_voc(result.per_hop_voc);
  return result;
}

// ---------------------------------------------------------------------------
// Presets

namespace presets {

RadioEnv default_radio() { return RadioEnv{kBandwidthHz, units::dbm_to_watts(kNoiseDbm)}; }

namespace {
Task reference_task(DeviceId owner, double density) {
  Task t;
  t.owner = owner;
  t.density = density;
  t.size_bits = units::megabytes_to_bits(kDefaultTaskMegabytes);
  t.c_tf = 0.2;
  t.c_ec = 0.2;
  t.s_tf_soft = 1.0;
  t.s_tf_hard = 2.0;
  t.s_ec_soft = 2.0;
  t.s_ec_hard = 5.0;
  return t;
}
}  // namespace

Task face_recognition(DeviceId owner) { return reference_task(owner, kFaceRecognitionDensity); }
Task virus_scanning(DeviceId owner) { return reference_task(owner, kVirusScanningDensity); }

Task named_task(std::string_view name, DeviceId owner) {
  if (name == "face_recognition") return face_recognition(owner);
  if (name == "virus_scanning") return virus_scanning(owner);
  throw ConfigError(fmt::format("unknown task preset '{}'", name));
}

}  // namespace presets

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const DeviceId& id) { j = id.value; }
void from_json(const nlohmann::json& j, DeviceId& id) { id.value = j.get<std::uint32_t>(); }

void to_json(nlohmann::json& j, const Device& d) {
  j = nlohmann::json{{"id", d.id},
                     {"kind", to_string(d.kind)},
                     {"x", d.position.x},
                     {"y", d.position.y},
                     {"tx_power_w", d.tx_power_w},
                     {"price_per_s", d.price_per_s},
                     {"cpu_hz", d.cpu_hz}};
}

void from_json(const nlohmann::json& j, Device& d) {
  d.id = j.at("id").get<DeviceId>();
  d.kind = device_kind_from_string(j.at("kind").get<std::string>());
  d.position = {j.at("x").get<double>(), j.at("y").get<double>()};
  d.tx_power_w = j.at("tx_power_w").get<double>();
  d.price_per_s = j.at("price_per_s").get<double>();
  d.cpu_hz = j.value("cpu_hz", 0.0);
}

void to_json(nlohmann::json& j, const Task& t) {
  j = nlohmann::json{{"owner", t.owner},         {"density", t.density},
                     {"size_bits", t.size_bits}, {"c_tf", t.c_tf},
                     {"c_ec", t.c_ec},           {"s_tf_soft", t.s_tf_soft},
                     {"s_tf_hard", t.s_tf_hard}, {"s_ec_soft", t.s_ec_soft},
                     {"s_ec_hard", t.s_ec_hard}};
}

void from_json(const nlohmann::json& j, Task& t) {
  t.owner = j.at("owner").get<DeviceId>();
  t.density = j.at("density").get<double>();
  t.size_bits = j.at("size_bits").get<double>();
  t.c_tf = j.at("c_tf").get<double>();
  t.c_ec = j.at("c_ec").get<double>();
  t.s_tf_soft = j.at("s_tf_soft").get<double>();
  t.s_tf_hard = j.at("s_tf_hard").get<double>();
  t.s_ec_soft = j.at("s_ec_soft").get<double>();
  t.s_ec_hard = j.at("s_ec_hard").get<double>();
}

void to_json(nlohmann::json& j, const RadioEnv& e) {
  j = nlohmann::json{{"bandwidth_hz", e.bandwidth_hz}, {"noise_w", e.noise_w}};
}

void from_json(const nlohmann::json& j, RadioEnv& e) {
  e.bandwidth_hz = j.at("bandwidth_hz").get<double>();
  e.noise_w = j.at("noise_w").get<double>();
}

void to_json(nlohmann::json& j, const PathResult& p) {
  j = nlohmann::json{{"hops", p.hops},
                     {"per_hop_voc", p.per_hop_voc},
                     {"per_hop_fees", p.per_hop_fees},
                     {"avg_voc", p.avg_voc}};
}

void from_json(const nlohmann::json& j, PathResult& p) {
  p.hops = j.at("hops").get<std::vector<DeviceId>>();
  p.per_hop_voc = j.at("per_hop_voc").get<std::vector<double>>();
  p.per_hop_fees = j.at("per_hop_fees").get<std::vector<double>>();
  p.avg_voc = j.at("avg_voc").get<double>();
}

}  // namespace trustpath
