// Stand-alone resource-trust evaluator that answers with the local rule oracle.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "trustpath/evaluator_protocol.hpp"

namespace {
trustpath::resource::StubEvaluatorServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-oracle resource trust evaluator"};
  std::string host = "127.0.0.1";
  int port = 8765;
  std::string path = "/evaluate";
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port");
  app.add_option("--path", path, "Request path");
  CLI11_PARSE(app, argc, argv);

  trustpath::resource::StubEvaluatorServer server;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving " << trustpath::resource::kProtocolVersion << " on " << host << ':' << port
            << path << '\n';
  try {
    server.listen_blocking(host, port, path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
