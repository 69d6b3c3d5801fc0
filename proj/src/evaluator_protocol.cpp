#include "trustpath/evaluator_protocol.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"
#include "trustpath/errors.hpp"

namespace trustpath::resource {
namespace {

ResourceVerdict unavailable() { return {0, reason::kExternalUnavailable}; }

std::optional<ResourceVerdict> parse_response(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto it = j.find("t_res");
  if (it == j.end() || !it->is_number_integer()) return std::nullopt;
  const auto t = it->get<long long>();
  if (t != 0 && t != 1) return std::nullopt;
  ResourceVerdict v;
  v.t_res = static_cast<int>(t);
  auto r = j.find("reason");
  v.reason = r != j.end() && r->is_string() ? r->get<std::string>()
                                            : std::string(t == 1 ? reason::kOk : "external-deny");
  return v;
}

std::pair<time_t, time_t> split_seconds(double s) {
  const double whole = std::floor(s);
  return {static_cast<time_t>(whole), static_cast<time_t>((s - whole) * 1e6)};
}

}  // namespace

void EvaluatorEndpoint::validate() const {
  if (host.empty()) throw ConfigError("evaluator host must not be empty");
  if (port <= 0 || port > 65535) throw ConfigError(fmt::format("bad evaluator port {}", port));
  if (path.empty() || path[0] != '/') throw ConfigError("evaluator path must start with '/'");
  if (!(timeout_s > 0.0)) throw ConfigError("evaluator timeout must be positive");
  if (retries < 0) throw ConfigError("evaluator retries must be non-negative");
}

ResourceVerdict external_evaluate(const EvaluatorEndpoint& endpoint, const std::string& prompt) {
  httplib::Client client(endpoint.host, endpoint.port);
  const auto [sec, usec] = split_seconds(endpoint.timeout_s);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  const std::string body =
      nlohmann::json{{"protocol", kProtocolVersion}, {"prompt", prompt}}.dump();

  for (int attempt = 0; attempt <= std::max(endpoint.retries, 0); ++attempt) {
    auto res = client.Post(endpoint.path, body, "application/json");
    if (!res || res->status != 200) continue;
    if (auto v = parse_response(res->body)) return *v;
  }
  return unavailable();
}

void to_json(nlohmann::json& j, const EvaluatorEndpoint& e) {
  j = nlohmann::json{{"host", e.host},
                     {"port", e.port},
                     {"path", e.path},
                     {"timeout_s", e.timeout_s},
                     {"retries", e.retries}};
}

void from_json(const nlohmann::json& j, EvaluatorEndpoint& e) {
  for (const auto& [key, value] : j.items()) {
    if (key == "host") e.host = value.get<std::string>();
    else if (key == "port") e.port = value.get<int>();
    else if (key == "path") e.path = value.get<std::string>();
    else if (key == "timeout_s") e.timeout_s = value.get<double>();
    else if (key == "retries") e.retries = value.get<int>();
    else throw ConfigError(fmt::format("unknown evaluator key '{}'", key));
  }
}

// ---------------------------------------------------------------------------

struct StubEvaluatorServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port{};
  std::atomic<std::size_t> served{0};

  void route(const std::string& path) {
    server.Post(path, [this](const httplib::Request& req, httplib::Response& res) {
      ++served;
      const auto j = nlohmann::json::parse(req.body, nullptr, false);
      if (j.is_discarded() || !j.is_object() || j.value("protocol", "") != kProtocolVersion ||
          !j.contains("prompt") || !j["prompt"].is_string()) {
        res.status = 400;
        res.set_content(R"({"error":"bad request"})", "application/json");
        return;
      }
      try {
        const auto v = evaluate_prompt(j["prompt"].get<std::string>());
        res.set_content(nlohmann::json{{"t_res", v.t_res}, {"reason", v.reason}}.dump(),
                        "application/json");
      } catch (const Error& e) {
        res.status = 422;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });
  }
};

StubEvaluatorServer::StubEvaluatorServer() : impl_(std::make_unique<Impl>()) {}

StubEvaluatorServer::~StubEvaluatorServer() { stop(); }

int StubEvaluatorServer::start(const std::string& host, int port, const std::string& path) {
  if (impl_->thread.joinable()) throw Error("stub evaluator already running");
  impl_->route(path);
  impl_->port = port == 0 ? impl_->server.bind_to_any_port(host)
                          : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (impl_->port <= 0) throw Error(fmt::format("cannot bind stub evaluator on {}:{}", host, port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void StubEvaluatorServer::listen_blocking(const std::string& host, int port,
                                          const std::string& path) {
  impl_->route(path);
  impl_->port = port;
  if (!impl_->server.listen(host, port))
    throw Error(fmt::format("cannot listen on {}:{}", host, port));
}

void StubEvaluatorServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int StubEvaluatorServer::port() const { return impl_->port; }

std::size_t StubEvaluatorServer::requests_served() const { return impl_->served.load(); }

}  // namespace trustpath::resource
