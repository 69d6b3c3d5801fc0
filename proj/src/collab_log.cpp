#include "trustpath/collab_log.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "trustpath/errors.hpp"

namespace trustpath::collab {
namespace {

constexpr const char* kCsvHeader =
    "type,src,dst,packets_total,packets_lost,packets_received,packets_forwarded,outcome";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::uint64_t parse_count(const std::string& text, std::size_t line, const char* column) {
  std::uint64_t value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw IngestError(line, fmt::format("line {}: bad {} '{}'", line, column, text));
  return value;
}

bool skippable(const std::string& line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

void check_forward(const ForwardRecord& r, std::size_t line) {
  try {
    r.validate();
  } catch (const DomainError& e) {
    throw IngestError(line, fmt::format("line {}: {}", line, e.what()));
  }
}

void parse_json_line(const std::string& text, std::size_t line, CollaborationLog& log) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(line, fmt::format("line {}: invalid JSON ({})", line, e.what()));
  }
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "forward") {
      ForwardRecord r;
      r.src = j.at("src").get<DeviceId>();
      r.dst = j.at("dst").get<DeviceId>();
      r.packets_total = j.at("packets_total").get<std::uint64_t>();
      r.packets_lost = j.at("packets_lost").get<std::uint64_t>();
      r.packets_received = j.at("packets_received").get<std::uint64_t>();
      r.packets_forwarded = j.at("packets_forwarded").get<std::uint64_t>();
      check_forward(r, line);
      log.forward.push_back(r);
    } else if (type == "compute") {
      ComputeRecord r;
      r.src = j.at("src").get<DeviceId>();
      r.dst = j.at("dst").get<DeviceId>();
      r.outcome = j.at("outcome").get<int>();
      if (r.outcome != 0 && r.outcome != 1)
        throw IngestError(line, fmt::format("line {}: outcome must be 0 or 1", line));
      log.compute.push_back(r);
    } else {
      throw IngestError(line, fmt::format("line {}: unknown record type '{}'", line, type));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(line, fmt::format("line {}: {}", line, e.what()));
  }
}

void parse_csv_line(const std::string& text, std::size_t line, CollaborationLog& log) {
  const auto f = split_csv(text);
  if (f.size() != 8)
    throw IngestError(line, fmt::format("line {}: expected 8 columns, got {}", line, f.size()));
  auto id = [&](const std::string& s, const char* col) {
    const auto v = parse_count(s, line, col);
    if (v > UINT32_MAX) throw IngestError(line, fmt::format("line {}: {} out of range", line, col));
    return DeviceId{static_cast<std::uint32_t>(v)};
  };
  if (f[0] == "forward") {
    ForwardRecord r;
    r.src = id(f[1], "src");
    r.dst = id(f[2], "dst");
    r.packets_total = parse_count(f[3], line, "packets_total");
    r.packets_lost = parse_count(f[4], line, "packets_lost");
    r.packets_received = parse_count(f[5], line, "packets_received");
    r.packets_forwarded = parse_count(f[6], line, "packets_forwarded");
    check_forward(r, line);
    log.forward.push_back(r);
  } else if (f[0] == "compute") {
    ComputeRecord r;
    r.src = id(f[1], "src");
    r.dst = id(f[2], "dst");
    const auto outcome = parse_count(f[7], line, "outcome");
    if (outcome > 1) throw IngestError(line, fmt::format("line {}: outcome must be 0 or 1", line));
    r.outcome = static_cast<int>(outcome);
    log.compute.push_back(r);
  } else {
    throw IngestError(line, fmt::format("line {}: unknown record type '{}'", line, f[0]));
  }
}

}  // namespace

LogFormat format_for_path(const std::string& path) {
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return csv ? LogFormat::Csv : LogFormat::JsonLines;
}

CollaborationLog read_log(std::istream& in, LogFormat format) {
  CollaborationLog log;
  std::string text;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    if (skippable(text)) continue;
    if (format == LogFormat::Csv) {
      if (!header_seen) {
        header_seen = true;
        if (text.rfind("type,", 0) == 0) continue;
      }
      parse_csv_line(text, line, log);
    } else {
      parse_json_line(text, line, log);
    }
  }
  return log;
}

void write_log(std::ostream& out, const CollaborationLog& log, LogFormat format) {
  if (format == LogFormat::Csv) {
    out << kCsvHeader << '\n';
    for (const auto& r : log.forward)
      out << fmt::format("forward,{},{},{},{},{},{},\n", r.src.value, r.dst.value, r.packets_total,
                         r.packets_lost, r.packets_received, r.packets_forwarded);
    for (const auto& r : log.compute)
      out << fmt::format("compute,{},{},,,,,{}\n", r.src.value, r.dst.value, r.outcome);
    return;
  }
  for (const auto& r : log.forward) {
    nlohmann::json j{{"type", "forward"},
                     {"src", r.src},
                     {"dst", r.dst},
                     {"packets_total", r.packets_total},
                     {"packets_lost", r.packets_lost},
                     {"packets_received", r.packets_received},
                     {"packets_forwarded", r.packets_forwarded}};
    out << j.dump() << '\n';
  }
  for (const auto& r : log.compute) {
    nlohmann::json j{{"type", "compute"}, {"src", r.src}, {"dst", r.dst}, {"outcome", r.outcome}};
    out << j.dump() << '\n';
  }
}

CollaborationLog read_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open log file '{}'", path));
  return read_log(in, format_for_path(path));
}

void write_log_file(const std::string& path, const CollaborationLog& log) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write log file '{}'", path));
  write_log(out, log, format_for_path(path));
}

}  // namespace trustpath::collab
