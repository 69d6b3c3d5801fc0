#include "trustpath/resource_agent.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "trustpath/errors.hpp"

namespace trustpath::resource {
namespace {

ResourceVerdict pass() { return {1, reason::kOk}; }
ResourceVerdict fail(const char* why) { return {0, why}; }

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double number(const std::map<std::string, std::string, std::less<>>& kv, std::string_view key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError(fmt::format("prompt lacks field '{}'", key));
  double v{};
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(fmt::format("prompt field '{}' is not a number: '{}'", key, s));
  return v;
}

bool boolean(const std::map<std::string, std::string, std::less<>>& kv, std::string_view key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError(fmt::format("prompt lacks field '{}'", key));
  if (it->second == "yes") return true;
  if (it->second == "no") return false;
  throw ConfigError(fmt::format("prompt field '{}' must be yes or no", key));
}

std::string_view yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

ResourceVerdict evaluate_terminal(const ResourceProfile& profile, const Task& task) {
  if (!(profile.available_storage_bits >= task.size_bits)) return fail(reason::kStorage);
  if (!profile.willing) return fail(reason::kUnwilling);
  if (!profile.healthy) return fail(reason::kUnhealthy);
  return pass();
}

ResourceVerdict evaluate_ec(const ResourceProfile& profile, const Task& task, const Device& ec) {
  if (!(profile.available_storage_bits >= task.size_bits)) return fail(reason::kStorage);
  if (!(computing_time(task, ec) <= profile.available_compute_seconds))
    return fail(reason::kComputeBudget);
  if (!profile.willing) return fail(reason::kUnwilling);
  if (!profile.healthy) return fail(reason::kUnhealthy);
  return pass();
}

ResourceVerdict evaluate_local(const ResourceProfile& profile, const Task& task,
                               const Device& device) {
  return device.is_edge() ? evaluate_ec(profile, task, device) : evaluate_terminal(profile, task);
}

double compose_trust(double t_his, const ResourceVerdict& verdict) {
  return t_his * static_cast<double>(verdict.t_res);
}

std::string build_prompt(const ResourceProfile& profile, const Task& task, const Device& device) {
  std::string p;
  p += "### ROLE\n";
  p += fmt::format("You are the resource agent of device {}. Decide whether this device can take "
                   "part in the task below.\n",
                   device.id.value);
  p += "### TASK\n";
  p += fmt::format("owner: {}\n", task.owner.value);
  p += fmt::format("size_bits: {}\n", task.size_bits);
  p += fmt::format("density_cycles_per_bit: {}\n", task.density);
  p += fmt::format("c_tf: {}\nc_ec: {}\n", task.c_tf, task.c_ec);
  p += fmt::format("s_tf_soft: {}\ns_tf_hard: {}\n", task.s_tf_soft, task.s_tf_hard);
  p += fmt::format("s_ec_soft: {}\ns_ec_hard: {}\n", task.s_ec_soft, task.s_ec_hard);
  p += "### DEVICE\n";
  p += fmt::format("device: {}\n", device.id.value);
  p += fmt::format("kind: {}\n", to_string(device.kind));
  if (device.is_edge()) p += fmt::format("cpu_hz: {}\n", device.cpu_hz);
  p += fmt::format("available_storage_bits: {}\n", profile.available_storage_bits);
  if (device.is_edge())
    p += fmt::format("available_compute_seconds: {}\n", profile.available_compute_seconds);
  p += fmt::format("willing: {}\nhealthy: {}\n", yes_no(profile.willing), yes_no(profile.healthy));
  p += "### RULES\n";
  p += "- available_storage_bits must be at least size_bits.\n";
  if (device.is_edge())
    p += "- density_cycles_per_bit * size_bits / cpu_hz must not exceed "
         "available_compute_seconds.\n";
  p += "- The device must be willing and healthy.\n";
  p += "### OUTPUT\n";
  p += "Answer with JSON only: {\"t_res\": 1} if every rule holds, otherwise {\"t_res\": 0}.\n";
  return p;
}

PromptInputs parse_prompt(std::string_view prompt) {
  std::map<std::string, std::string, std::less<>> kv;
  std::string section;
  std::istringstream in{std::string(prompt)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("###", 0) == 0) {
      section = std::string(trim(std::string_view(line).substr(3)));
      continue;
    }
    if (section != "TASK" && section != "DEVICE") continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    kv[std::string(trim(std::string_view(line).substr(0, colon)))] =
        std::string(trim(std::string_view(line).substr(colon + 1)));
  }

  PromptInputs out;
  auto id = [&](std::string_view key) {
    const double v = number(kv, key);
    if (v < 0 || v > 4294967295.0 || v != static_cast<double>(static_cast<std::uint32_t>(v)))
      throw ConfigError(fmt::format("prompt field '{}' is not a device id", key));
    return DeviceId{static_cast<std::uint32_t>(v)};
  };
  auto kind = kv.find("kind");
  if (kind == kv.end()) throw ConfigError("prompt lacks field 'kind'");
  try {
    out.device.kind = device_kind_from_string(kind->second);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  out.device.id = id("device");
  if (out.device.is_edge()) out.device.cpu_hz = number(kv, "cpu_hz");

  out.task.owner = id("owner");
  out.task.size_bits = number(kv, "size_bits");
  out.task.density = number(kv, "density_cycles_per_bit");
  out.task.c_tf = number(kv, "c_tf");
  out.task.c_ec = number(kv, "c_ec");
  out.task.s_tf_soft = number(kv, "s_tf_soft");
  out.task.s_tf_hard = number(kv, "s_tf_hard");
  out.task.s_ec_soft = number(kv, "s_ec_soft");
  out.task.s_ec_hard = number(kv, "s_ec_hard");

  out.profile.device = out.device.id;
  out.profile.available_storage_bits = number(kv, "available_storage_bits");
  if (out.device.is_edge())
    out.profile.available_compute_seconds = number(kv, "available_compute_seconds");
  out.profile.willing = boolean(kv, "willing");
  out.profile.healthy = boolean(kv, "healthy");
  return out;
}

ResourceVerdict evaluate_prompt(std::string_view prompt) {
  const auto in = parse_prompt(prompt);
  return evaluate_local(in.profile, in.task, in.device);
}

void to_json(nlohmann::json& j, const ResourceProfile& p) {
  j = nlohmann::json{{"device", p.device},
                     {"available_storage_bits", p.available_storage_bits},
                     {"available_compute_seconds", p.available_compute_seconds},
                     {"willing", p.willing},
                     {"healthy", p.healthy}};
}

void from_json(const nlohmann::json& j, ResourceProfile& p) {
  p.device = j.at("device").get<DeviceId>();
  p.available_storage_bits = j.at("available_storage_bits").get<double>();
  p.available_compute_seconds = j.value("available_compute_seconds", 0.0);
  p.willing = j.value("willing", true);
  p.healthy = j.value("healthy", true);
  if (p.available_storage_bits < 0 || p.available_compute_seconds < 0)
    throw ConfigError(fmt::format("device {} has a negative resource budget", p.device.value));
}

void to_json(nlohmann::json& j, const ResourceVerdict& v) {
  j = nlohmann::json{{"t_res", v.t_res}, {"reason", v.reason}};
}

}  // namespace trustpath::resource
