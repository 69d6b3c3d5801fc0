#pragma once

// HTTP+JSON protocol for remote resource-trust evaluation.
//
//   POST <path>   {"protocol": "resource-trust/1", "prompt": "<build_prompt text>"}
//   200 OK        {"t_res": 0 | 1, "reason": "<optional code>"}
//
// Any transport failure, non-200 status, malformed body or t_res outside {0,1}
// yields t_res = 0 with reason "external-unavailable".

#include <memory>
#include <string>

#include "trustpath/resource_agent.hpp"

namespace trustpath::resource {

inline constexpr const char* kProtocolVersion = "resource-trust/1";

struct EvaluatorEndpoint {
  std::string host{"127.0.0.1"};
  int port{8765};
  std::string path{"/evaluate"};
  double timeout_s{2.0};
  int retries{1};  // extra attempts after the first

  void validate() const;
};

ResourceVerdict external_evaluate(const EvaluatorEndpoint& endpoint, const std::string& prompt);

void to_json(nlohmann::json& j, const EvaluatorEndpoint& e);
void from_json(const nlohmann::json& j, EvaluatorEndpoint& e);

/// In-process evaluator that answers with the rule oracle (evaluate_prompt).
class StubEvaluatorServer {
 public:
  StubEvaluatorServer();
  ~StubEvaluatorServer();
  StubEvaluatorServer(const StubEvaluatorServer&) = delete;
  StubEvaluatorServer& operator=(const StubEvaluatorServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0,
            const std::string& path = "/evaluate");
  /// Serves on the calling thread until stop() is called from elsewhere.
  void listen_blocking(const std::string& host, int port, const std::string& path = "/evaluate");
  void stop();
  int port() const;
  std::size_t requests_served() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace trustpath::resource
