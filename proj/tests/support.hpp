#pragma once

// Builders and numerical checks shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trustpath/collab_graph.hpp"
#include "trustpath/pathfinder.hpp"
#include "trustpath/presets.hpp"
#include "trustpath/trust_gnn.hpp"

namespace trustpath::testing {

/// Small random trust graph: terminals 0..terminals-1, edge devices after them.
/// Every edge device receives at least one compute edge.
inline collab::DirectTrustGraph random_trust_graph(std::size_t terminals, std::size_t edges_dev,
                                                   double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> freq(1, 30);
  std::map<DeviceId, DeviceKind> nodes;
  for (std::size_t i = 0; i < terminals + edges_dev; ++i)
    nodes[DeviceId{static_cast<std::uint32_t>(i)}] =
        i < terminals ? DeviceKind::Terminal : DeviceKind::EdgeCompute;
  std::vector<collab::TrustEdge> edges;
  auto add = [&](std::size_t s, std::size_t d) {
    edges.push_back({DeviceId{static_cast<std::uint32_t>(s)}, DeviceId{static_cast<std::uint32_t>(d)},
                     u(rng), freq(rng)});
  };
  for (std::size_t s = 0; s < terminals; ++s)
    for (std::size_t d = 0; d < terminals + edges_dev; ++d)
      if (s != d && u(rng) < density) add(s, d);
  for (std::size_t m = terminals; m < terminals + edges_dev; ++m) {
    bool has_in = false;
    for (const auto& e : edges) has_in = has_in || e.dst.value == m;
    if (!has_in) add(static_cast<std::size_t>(rng() % terminals), m);
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const auto& a, const auto& b) { return a.src == b.src && a.dst == b.dst; }),
              edges.end());
  return collab::DirectTrustGraph(std::move(nodes), std::move(edges));
}

inline gnn::ModelConfig small_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> width(1, 4);
  gnn::ModelConfig c;
  c.heads = std::uniform_int_distribution<std::size_t>(1, 2)(rng);
  c.embedding_dim = 2 + width(rng);
  c.layer_dims.clear();
  const std::size_t layers = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
  for (std::size_t l = 0; l < layers; ++l) c.layer_dims.push_back(c.heads * width(rng));
  c.trust_bits = 3;
  c.classes = 4;
  c.mlp_hidden = 2 + width(rng);
  c.l2 = 1e-3;
  c.dropout = 0.0;
  return c;
}

struct GradientCheck {
  double max_relative_error{};
  std::size_t checked{};
  std::string worst;
};

inline constexpr double kFiniteDifferenceStep = 1e-6;
/// Gradients smaller than this are compared on an absolute scale.
inline constexpr double kGradientFloor = 1e-4;

/// Central finite differences against the analytic gradient for every scalar
/// parameter. Perturbations move the model in place and are undone.
inline GradientCheck check_gradients(gnn::TrustModel& model, const collab::DirectTrustGraph& graph,
                                     std::span<const gnn::LabeledEdge> edges) {
  const auto g = gnn::GraphTensors::build(graph, model);
  const auto analytic = gnn::loss_and_gradient(model, g, edges).gradient;
  auto objective = [&] {
    const auto p = gnn::propagate(model, g);
    return gnn::loss(model, gnn::final_embeddings(g, p.final), edges).total;
  };
  std::vector<std::pair<std::string, const gnn::Matrix*>> grads;
  analytic.visit([&](const std::string& name, const gnn::Matrix& m) { grads.emplace_back(name, &m); });

  GradientCheck out;
  std::size_t t = 0;
  model.params.visit([&](const std::string& name, gnn::Matrix& m) {
    const gnn::Matrix& a = *grads[t++].second;
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double saved = m.data()[k];
      m.data()[k] = saved + kFiniteDifferenceStep;
      const double up = objective();
      m.data()[k] = saved - kFiniteDifferenceStep;
      const double down = objective();
      m.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * kFiniteDifferenceStep);
      const double analytic_k = a.data()[k];
      const double denom = std::max({std::abs(numeric), std::abs(analytic_k), kGradientFloor});
      const double rel = std::abs(numeric - analytic_k) / denom;
      ++out.checked;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst = name + "[" + std::to_string(k) + "] analytic=" + std::to_string(analytic_k) +
                    " numeric=" + std::to_string(numeric);
      }
    }
  });
  return out;
}

/// Random small model and graph for gradient checks (at most 6 devices).
struct SmallCase {
  collab::DirectTrustGraph graph;
  gnn::TrustModel model;
  std::vector<gnn::LabeledEdge> edges;
};

inline SmallCase small_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t terminals = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
  const std::size_t ecs = std::uniform_int_distribution<std::size_t>(0, 6 - terminals)(rng);
  SmallCase c;
  c.graph = random_trust_graph(terminals, std::min<std::size_t>(ecs, 1 + ecs / 2), 0.6, seed * 7 + 1);
  const auto config = small_config(rng);
  c.model = gnn::make_model(config, c.graph, seed);
  // Nonzero biases so their gradients are exercised away from the origin.
  std::normal_distribution<double> n(0.0, 0.3);
  c.model.params.visit([&](const std::string& name, gnn::Matrix& m) {
    if (name.find("bias") != std::string::npos)
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  });
  c.edges = gnn::labeled_edges(c.graph);
  return c;
}

// ---------------------------------------------------------------------------
// Planning instances

struct PlanInstance {
  Topology topology;
  RadioEnv env = presets::default_radio();
  Task task;
  planner::Gates gates;
};

inline Device make_terminal(std::uint32_t id, double x, double y, double price) {
  Device d;
  d.id = DeviceId{id};
  d.position = {x, y};
  d.tx_power_w = presets::kTerminalTxPowerW;
  d.price_per_s = price;
  return d;
}

inline Device make_edge(std::uint32_t id, double x, double y, double cpu_hz) {
  Device d = make_terminal(id, x, y, presets::kLambdaPricePerS);
  d.kind = DeviceKind::EdgeCompute;
  d.cpu_hz = cpu_hz;
  return d;
}

/// Face-recognition task with thresholds in the range where hop values vary.
inline Task planning_task(DeviceId owner) {
  Task t = presets::face_recognition(owner);
  t.s_tf_soft = 0.2;
  t.s_tf_hard = 1.5;
  t.s_ec_soft = 1.0;
  t.s_ec_hard = 3.0;
  return t;
}

/// Devices scattered over a 60 m square, linked within 30 m. Device 0 owns the
/// task; the last `ecs` ids are edge devices. Each non-owner is trusted with
/// probability `p_trusted`.
inline PlanInstance random_instance(std::uint64_t seed, std::size_t n, std::size_t ecs,
                                    double p_trusted = 0.85) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 60.0), u(0.0, 1.0);
  PlanInstance inst;
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x = pos(rng), y = pos(rng);
    if (i + ecs >= n)
      inst.topology.add_device(make_edge(i, x, y, 2e9 + 4e9 * u(rng)));
    else
      inst.topology.add_device(make_terminal(i, x, y, 0.005 + 0.025 * u(rng)));
  }
  const auto devices = inst.topology.devices();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double dx = devices[a].position.x - devices[b].position.x;
      const double dy = devices[a].position.y - devices[b].position.y;
      if (std::hypot(dx, dy) <= 30.0 && std::hypot(dx, dy) > 0.0)
        inst.topology.add_link(devices[a].id, devices[b].id);
    }
  inst.task = planning_task(DeviceId{0});
  for (std::uint32_t i = 1; i < n; ++i) inst.gates[DeviceId{i}] = u(rng) < p_trusted;
  return inst;
}

/// owner - t1 - ... - t_{relays} - ec along a line, 10 m apart, all trusted.
inline PlanInstance line_instance(std::size_t relays, double spacing = 10.0) {
  PlanInstance inst;
  std::uint32_t id = 0;
  for (; id <= relays; ++id)
    inst.topology.add_device(make_terminal(id, spacing * id, 0.0, id % 2 ? 0.01 : 0.02));
  inst.topology.add_device(make_edge(id, spacing * id, 0.0, presets::kLambdaCpuHz));
  for (std::uint32_t i = 0; i < id; ++i) inst.topology.add_link(DeviceId{i}, DeviceId{i + 1});
  inst.task = planning_task(DeviceId{0});
  for (std::uint32_t i = 1; i <= id; ++i) inst.gates[DeviceId{i}] = true;
  return inst;
}

/// Star around the owner: one edge device spoke, the rest terminal spokes
/// with no further links, so exactly one path is feasible.
inline PlanInstance star_instance(std::size_t spokes, std::size_t ec_spoke) {
  PlanInstance inst;
  inst.topology.add_device(make_terminal(0, 0.0, 0.0, 0.02));
  for (std::uint32_t k = 1; k <= spokes; ++k) {
    const double angle = 6.283185307179586 * k / static_cast<double>(spokes);
    const double r = 8.0 + k;
    if (k == ec_spoke)
      inst.topology.add_device(make_edge(k, r * std::cos(angle), r * std::sin(angle), 3e9));
    else
      inst.topology.add_device(make_terminal(k, r * std::cos(angle), r * std::sin(angle), 0.01));
    inst.topology.add_link(DeviceId{0}, DeviceId{k});
    inst.gates[DeviceId{k}] = true;
  }
  inst.task = planning_task(DeviceId{0});
  return inst;
}

}  // namespace trustpath::testing
