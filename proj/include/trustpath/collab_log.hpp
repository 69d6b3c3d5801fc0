#pragma once

// Line-delimited collaboration logs.
//
// JSON lines: one object per line, either
//   {"type":"forward","src":1,"dst":2,"packets_total":100,"packets_lost":3,
//    "packets_received":97,"packets_forwarded":95}
//   {"type":"compute","src":1,"dst":20,"outcome":1}
//
// CSV: header `type,src,dst,packets_total,packets_lost,packets_received,packets_forwarded,outcome`
// followed by one row per record; columns that do not apply to a record type are empty.
//
// Blank lines and lines starting with '#' are skipped. Malformed lines raise
// IngestError with the 1-based line number.

#include <iosfwd>
#include <string>
#include <vector>

#include "trustpath/collab_graph.hpp"

namespace trustpath::collab {

enum class LogFormat { JsonLines, Csv };

struct CollaborationLog {
  std::vector<ForwardRecord> forward;
  std::vector<ComputeRecord> compute;
};

/// ".csv" selects CSV, anything else JSON lines.
LogFormat format_for_path(const std::string& path);

CollaborationLog read_log(std::istream& in, LogFormat format);
void write_log(std::ostream& out, const CollaborationLog& log, LogFormat format);

CollaborationLog read_log_file(const std::string& path);
void write_log_file(const std::string& path, const CollaborationLog& log);

}  // namespace trustpath::collab
