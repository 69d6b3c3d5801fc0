#pragma once

// Task-specific resource trust: a binary verdict on whether a device's private
// resources suffice for a task, decided locally by rules or remotely by an
// evaluator speaking the prompt protocol.

#include <array>
#include <string>
#include <string_view>

#include "json.hpp"
#include "trustpath/domain.hpp"

namespace trustpath::resource {

/// Private to the device's own agent; never part of planning messages.
struct ResourceProfile {
  DeviceId device;
  double available_storage_bits{};
  double available_compute_seconds{};  // edge devices only
  bool willing{true};
  bool healthy{true};
};

/// Keys used when a profile is serialized (scenario files only).
inline constexpr std::array<std::string_view, 5> kProfileFields = {
    "device", "available_storage_bits", "available_compute_seconds", "willing", "healthy"};

struct ResourceVerdict {
  int t_res{};
  std::string reason;  // "ok", "storage", "compute-budget", "unwilling", "unhealthy", ...

  friend bool operator==(const ResourceVerdict&, const ResourceVerdict&) = default;
};

namespace reason {
inline constexpr const char* kOk = "ok";
inline constexpr const char* kStorage = "storage";
inline constexpr const char* kComputeBudget = "compute-budget";
inline constexpr const char* kUnwilling = "unwilling";
inline constexpr const char* kUnhealthy = "unhealthy";
inline constexpr const char* kExternalUnavailable = "external-unavailable";
}  // namespace reason

/// Storage must hold the whole task (inclusive); device must be willing and healthy.
ResourceVerdict evaluate_terminal(const ResourceProfile& profile, const Task& task);
/// Terminal checks plus computing_time(task, ec) <= available_compute_seconds.
ResourceVerdict evaluate_ec(const ResourceProfile& profile, const Task& task, const Device& ec);
/// Dispatches on the device kind.
ResourceVerdict evaluate_local(const ResourceProfile& profile, const Task& task,
                               const Device& device);

double compose_trust(double t_his, const ResourceVerdict& verdict);

/// Deterministic, '###'-sectioned prompt carrying every rule input as
/// `key: value` lines and the binary output instruction.
std::string build_prompt(const ResourceProfile& profile, const Task& task, const Device& device);

struct PromptInputs {
  Device device;
  ResourceProfile profile;
  Task task;
};

/// Reads back the `key: value` lines of a prompt produced by build_prompt.
/// Throws ConfigError when a required field is missing or malformed.
PromptInputs parse_prompt(std::string_view prompt);

/// Rule oracle applied to a prompt; used by the bundled stub evaluator.
ResourceVerdict evaluate_prompt(std::string_view prompt);

void to_json(nlohmann::json& j, const ResourceProfile& p);
void from_json(const nlohmann::json& j, ResourceProfile& p);
void to_json(nlohmann::json& j, const ResourceVerdict& v);

}  // namespace trustpath::resource
