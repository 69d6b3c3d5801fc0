#pragma once

// Physical, economic and task models shared by every stage: link rates,
// transfer and compute times, time-based fees, value of task completion (VoC)
// and whole-path evaluation.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace trustpath {

struct DeviceId {
  std::uint32_t value{};

  friend auto operator<=>(const DeviceId&, const DeviceId&) = default;
};

std::string to_string(DeviceId id);

enum class DeviceKind { Terminal, EdgeCompute };

std::string_view to_string(DeviceKind kind);
DeviceKind device_kind_from_string(std::string_view text);

struct Position {
  double x{};
  double y{};
};

double distance(Position a, Position b);

struct Device {
  DeviceId id;
  DeviceKind kind{DeviceKind::Terminal};
  Position position;
  double tx_power_w{0.1};
  double price_per_s{0.0};
  double cpu_hz{0.0};  // meaningful for edge-compute devices only

  bool is_edge() const { return kind == DeviceKind::EdgeCompute; }
  void validate() const;
};

/// Task descriptor owned by a terminal device. Fee thresholds are in currency,
/// trust thresholds in [0,1].
struct Task {
  DeviceId owner;
  double density{};    // cycles per bit
  double size_bits{};
  double c_tf{};
  double c_ec{};
  double s_tf_soft{};
  double s_tf_hard{};
  double s_ec_soft{};
  double s_ec_hard{};

  void validate() const;
};

struct RadioEnv {
  double bandwidth_hz{5e6};
  double noise_w{1e-11};

  void validate() const;
};

/// Undirected communication topology. Devices are kept sorted by id; neighbor
/// lists are returned in ascending id order.
class Topology {
 public:
  void add_device(const Device& device);
  void add_link(DeviceId a, DeviceId b);

  bool contains(DeviceId id) const { return devices_.count(id) != 0; }
  const Device& device(DeviceId id) const;
  bool has_link(DeviceId a, DeviceId b) const;
  const std::vector<DeviceId>& neighbors(DeviceId id) const;

  std::vector<DeviceId> device_ids() const;
  std::vector<Device> devices() const;
  std::vector<std::pair<DeviceId, DeviceId>> links() const;
  std::size_t size() const { return devices_.size(); }
  std::size_t count(DeviceKind kind) const;

  /// Subgraph induced by the devices accepted by `keep`.
  Topology induced(const std::function<bool(const Device&)>& keep) const;

 private:
  std::map<DeviceId, Device> devices_;
  std::map<DeviceId, std::vector<DeviceId>> adjacency_;
};

struct PathResult {
  std::vector<DeviceId> hops;          // hop 0 is the task owner
  std::vector<double> per_hop_voc;     // hops 1..K
  std::vector<double> per_hop_fees;    // hops 1..K
  double avg_voc{};

  std::size_t hop_count() const { return per_hop_voc.size(); }
};

namespace units {
inline constexpr double kBitsPerByte = 8.0;
inline constexpr double kBytesPerMegabyte = 1e6;
inline constexpr double kBitsPerMegabyte = kBitsPerByte * kBytesPerMegabyte;

constexpr double megabytes_to_bits(double mb) { return mb * kBitsPerMegabyte; }
double dbm_to_watts(double dbm);
}  // namespace units

/// Shannon rate with path-loss gain d^-4.
double transmission_rate(const Device& sender, Position receiver, const RadioEnv& env);
double hop_transfer_time(double size_bits, double rate_bps);
double forwarding_fee(double price_per_s, double t_receive, double t_send);
/// Piecewise value of task completion: 1 below `soft`, exponential decay up to
/// `hard`, 0 above.
double voc(double fee, double soft, double hard);
double computing_time(const Task& task, const Device& ec);
double average_voc(std::span<const double> values);

/// Fee and value of a relay hop `self` receiving from `prev` and sending to `next`.
struct HopValue {
  double fee{};
  double voc{};
};
HopValue relay_hop_value(const Device& prev, const Device& self, const Device& next,
                         const Task& task, const RadioEnv& env);
HopValue compute_hop_value(const Device& ec, const Task& task);

/// Evaluates a full owner-to-EC path; throws DomainError when the path violates
/// the role, connectivity or simplicity contract.
PathResult evaluate_path(const Topology& topology, const RadioEnv& env, const Task& task,
                         std::span<const DeviceId> hops);

void to_json(nlohmann::json& j, const DeviceId& id);
void from_json(const nlohmann::json& j, DeviceId& id);
void to_json(nlohmann::json& j, const Device& d);
void from_json(const nlohmann::json& j, Device& d);
void to_json(nlohmann::json& j, const Task& t);
void from_json(const nlohmann::json& j, Task& t);
void to_json(nlohmann::json& j, const RadioEnv& e);
void from_json(const nlohmann::json& j, RadioEnv& e);
void to_json(nlohmann::json& j, const PathResult& p);
void from_json(const nlohmann::json& j, PathResult& p);

}  // namespace trustpath

template <>
struct std::hash<trustpath::DeviceId> {
  std::size_t operator()(const trustpath::DeviceId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
