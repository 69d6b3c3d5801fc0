#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "trustpath/errors.hpp"
#include "trustpath/trust_encoding.hpp"
#include "trustpath/trust_gnn.hpp"

using namespace trustpath;
using namespace trustpath::gnn;
using trustpath::testing::random_trust_graph;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.embedding_dim = 6;
  c.layer_dims = {4, 6};
  c.heads = 2;
  c.trust_bits = 3;
  c.classes = 5;
  c.mlp_hidden = 6;
  return c;
}

collab::DirectTrustGraph pair_graph(double w, std::size_t freq) {
  return collab::DirectTrustGraph(
      {{DeviceId{0}, DeviceKind::Terminal}, {DeviceId{1}, DeviceKind::Terminal}},
      {{DeviceId{0}, DeviceId{1}, w, freq}, {DeviceId{1}, DeviceId{0}, w, freq}});
}

}  // namespace

TEST(Gradient, MatchesFiniteDifferencesOnRandomSmallModels) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto c = trustpath::testing::small_case(seed);
    if (c.edges.empty()) continue;
    const auto r = trustpath::testing::check_gradients(c.model, c.graph, c.edges);
    EXPECT_GT(r.checked, 0u);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed << ": " << r.worst;
  }
}

TEST(Gradient, CoversEveryParameter) {
  auto c = trustpath::testing::small_case(3);
  const auto r = trustpath::testing::check_gradients(c.model, c.graph, c.edges);
  EXPECT_EQ(r.checked, c.model.params.count());
}

TEST(Attention, WeightsSumToOne) {
  const auto graph = random_trust_graph(6, 2, 0.5, 11);
  const auto model = make_model(tiny(), graph, 4);
  const auto g = GraphTensors::build(graph, model);
  const auto p = propagate(model, g);
  std::size_t seen = 0;
  for (const auto& layer : p.layers) {
    for (const auto& node : layer.nodes) {
      for (const auto* role : {&node.in, &node.out}) {
        if (!role->has_value()) continue;
        ASSERT_EQ((*role)->heads.size(), 2u);
        for (const auto& h : (*role)->heads) {
          EXPECT_NEAR(h.weights.sum(), 1.0, 1e-9);
          EXPECT_TRUE((h.weights.array() >= 0.0).all());
          ++seen;
        }
      }
    }
  }
  EXPECT_GT(seen, 0u);
}

TEST(Attention, SingleNeighborGetsWeightOne) {
  const collab::DirectTrustGraph graph(
      {{DeviceId{0}, DeviceKind::Terminal}, {DeviceId{1}, DeviceKind::Terminal}},
      {{DeviceId{0}, DeviceId{1}, 0.7, 3}});
  const auto model = make_model(tiny(), graph, 2);
  const auto g = GraphTensors::build(graph, model);
  const auto trace = layer_forward(model, g, 0, g.features);
  const auto& receiver = trace.nodes[g.at(DeviceId{1})];
  ASSERT_TRUE(receiver.in.has_value());
  for (const auto& h : receiver.in->heads) EXPECT_EQ(h.weights[0], 1.0);
  EXPECT_FALSE(receiver.out.has_value());
}

TEST(Layer, OutputWidthIsConcatenationOfHeads) {
  const auto graph = random_trust_graph(4, 1, 0.7, 3);
  const auto model = make_model(tiny(), graph, 9);
  const auto g = GraphTensors::build(graph, model);
  const auto p = propagate(model, g);
  ASSERT_EQ(p.layers.size(), 2u);
  EXPECT_EQ(p.layers[0].output.rows(), 4);
  EXPECT_EQ(p.layers[1].output.rows(), 6);
  EXPECT_EQ(model.params.layers[1].roles[0].heads[0].aggregate.cols(), 3);
  EXPECT_EQ(p.final.cols(), static_cast<Eigen::Index>(graph.nodes().size()));
}

TEST(Layer, SymmetricPairHasIdenticalOutputs) {
  const auto graph = pair_graph(0.6, 4);
  auto model = make_model(tiny(), graph, 1);
  model.initial[DeviceId{1}] = model.initial[DeviceId{0}];
  const auto emb = embed(model, graph);
  const Vector a = emb.of(DeviceId{0});
  const Vector b = emb.of(DeviceId{1});
  for (Eigen::Index k = 0; k < a.size(); ++k) EXPECT_DOUBLE_EQ(a[k], b[k]);
}

TEST(Layer, PermutationEquivariant) {
  const auto graph = random_trust_graph(5, 2, 0.5, 21);
  const auto model = make_model(tiny(), graph, 6);
  // Reverse the id order.
  const std::uint32_t n = static_cast<std::uint32_t>(graph.nodes().size());
  auto pi = [n](DeviceId id) { return DeviceId{n - 1 - id.value}; };
  std::map<DeviceId, DeviceKind> nodes;
  for (const auto& [id, kind] : graph.nodes()) nodes[pi(id)] = kind;
  std::vector<collab::TrustEdge> edges;
  for (const auto& e : graph.edges()) edges.push_back({pi(e.src), pi(e.dst), e.weight, e.frequency});
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
  const collab::DirectTrustGraph permuted(nodes, edges);
  auto model2 = model;
  model2.initial.clear();
  for (const auto& [id, v] : model.initial) model2.initial[pi(id)] = v;

  const auto e1 = embed(model, graph);
  const auto e2 = embed(model2, permuted);
  for (const auto& [id, kind] : graph.nodes()) {
    EXPECT_LT((e1.of(id) - e2.of(pi(id))).cwiseAbs().maxCoeff(), 1e-10);
  }
  const auto p1 = predict_pair(model, e1, DeviceId{0}, DeviceId{3});
  const auto p2 = predict_pair(model2, e2, pi(DeviceId{0}), pi(DeviceId{3}));
  for (std::size_t c = 0; c < p1.class_distribution.size(); ++c)
    EXPECT_NEAR(p1.class_distribution[c], p2.class_distribution[c], 1e-10);
}

TEST(Model, DeterministicForSeed) {
  const auto graph = random_trust_graph(5, 1, 0.5, 2);
  const auto a = make_model(tiny(), graph, 77);
  const auto b = make_model(tiny(), graph, 77);
  const auto c = make_model(tiny(), graph, 78);
  std::vector<const Matrix*> tb, tc;
  b.params.visit([&](const std::string&, const Matrix& m) { tb.push_back(&m); });
  c.params.visit([&](const std::string&, const Matrix& m) { tc.push_back(&m); });
  std::size_t t = 0;
  bool differs = false;
  a.params.visit([&](const std::string&, const Matrix& m) {
    EXPECT_TRUE(m == *tb[t]);
    differs = differs || m != *tc[t];
    ++t;
  });
  EXPECT_TRUE(differs);
  for (const auto& [id, v] : a.initial) EXPECT_TRUE(v == b.initial.at(id));
}

TEST(Model, BiasesStartAtZero) {
  const auto graph = random_trust_graph(4, 1, 0.5, 2);
  const auto m = make_model(tiny(), graph, 5);
  m.params.visit([](const std::string& name, const Matrix& t) {
    if (name.find("bias") != std::string::npos) {
      EXPECT_EQ(t.cwiseAbs().maxCoeff(), 0.0) << name;
    }
  });
}

TEST(Model, RejectsHeadsThatDoNotDivideWidths) {
  auto c = tiny();
  c.layer_dims = {5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.classes = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(InitEmbeddings, UnitNormAndDeterministic) {
  auto graph = random_trust_graph(6, 2, 0.4, 8);
  // An isolated device still receives a vector.
  auto nodes = graph.nodes();
  nodes[DeviceId{50}] = DeviceKind::Terminal;
  graph = collab::DirectTrustGraph(nodes, graph.edges());
  const auto a = init_embeddings(graph, 16, 3);
  const auto b = init_embeddings(graph, 16, 3);
  ASSERT_EQ(a.size(), graph.nodes().size());
  for (const auto& [id, v] : a) {
    EXPECT_EQ(v.size(), 16);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    EXPECT_TRUE(v == b.at(id));
  }
}

TEST(Prediction, UniformLogitsGiveMiddleOfFirstBin) {
  const auto graph = pair_graph(0.5, 1);
  auto model = make_model(tiny(), graph, 1);
  model.params.mlp.out.setZero();
  model.params.mlp.out_bias.setZero();
  const auto emb = embed(model, graph);
  const auto p = predict_pair(model, emb, DeviceId{0}, DeviceId{1});
  ASSERT_EQ(p.class_distribution.size(), 5u);
  for (double q : p.class_distribution) EXPECT_NEAR(q, 0.2, 1e-15);
  EXPECT_EQ(p.predicted_class, 0u);
  EXPECT_DOUBLE_EQ(p.t_his, 0.1);

  model.config.mode = HistoricalMode::MaxProbability;
  EXPECT_NEAR(predict_pair(model, emb, DeviceId{0}, DeviceId{1}).t_his, 0.2, 1e-15);
}

TEST(Prediction, DirectionMatters) {
  const auto graph = random_trust_graph(4, 0, 0.8, 4);
  const auto model = make_model(tiny(), graph, 3);
  const auto emb = embed(model, graph);
  const auto ab = predict_pair(model, emb, DeviceId{0}, DeviceId{1});
  const auto ba = predict_pair(model, emb, DeviceId{1}, DeviceId{0});
  EXPECT_NE(ab.class_distribution, ba.class_distribution);
}

TEST(Loss, UniformPredictionCostsLogClasses) {
  const auto graph = random_trust_graph(5, 1, 0.6, 6);
  auto model = make_model(tiny(), graph, 2);
  model.config.l2 = 0.0;
  model.params.mlp.out.setZero();
  const auto edges = labeled_edges(graph);
  const auto l = loss(model, graph, edges);
  EXPECT_NEAR(l.data, std::log(5.0), 1e-12);
  EXPECT_EQ(l.penalty, 0.0);
}

TEST(Loss, PenaltyIsExactlyScaledSquaredNorm) {
  const auto graph = random_trust_graph(5, 1, 0.6, 6);
  auto model = make_model(tiny(), graph, 2);
  const auto edges = labeled_edges(graph);
  model.config.l2 = 0.0;
  const double data = loss(model, graph, edges).total;
  model.config.l2 = 0.25;
  double sq = 0.0;
  model.params.visit([&](const std::string&, const Matrix& m) { sq += m.squaredNorm(); });
  const auto l = loss(model, graph, edges);
  EXPECT_DOUBLE_EQ(l.penalty, 0.25 * sq);
  EXPECT_DOUBLE_EQ(l.total, data + 0.25 * sq);
}

TEST(Loss, ConfidentCorrectPredictionCostsNothing) {
  const collab::DirectTrustGraph graph(
      {{DeviceId{0}, DeviceKind::Terminal}, {DeviceId{1}, DeviceKind::Terminal}},
      {{DeviceId{0}, DeviceId{1}, 0.95, 2}});
  auto model = make_model(tiny(), graph, 1);
  model.config.l2 = 0.0;
  model.params.mlp.out.setZero();
  model.params.mlp.out_bias.setZero();
  model.params.mlp.out_bias(trust_class(0.95, 5)) = 1000.0;
  EXPECT_LT(loss(model, graph, labeled_edges(graph)).data, 1e-300);
  EXPECT_THROW(loss(model, graph, std::vector<LabeledEdge>{}), ModelError);
}

TEST(Evaluate, RmseOfBinCenters) {
  const auto graph = random_trust_graph(4, 1, 0.7, 12);
  auto model = make_model(tiny(), graph, 1);
  model.params.mlp.out.setZero();
  model.params.mlp.out_bias.setZero();
  const auto edges = labeled_edges(graph);
  double sq = 0.0, abs = 0.0;
  for (const auto& e : edges) {
    sq += (0.1 - e.label) * (0.1 - e.label);
    abs += std::abs(0.1 - e.label);
  }
  const auto m = evaluate(model, graph, edges);
  EXPECT_EQ(m.count, edges.size());
  EXPECT_NEAR(m.rmse, std::sqrt(sq / edges.size()), 1e-12);
  EXPECT_NEAR(m.mae, abs / edges.size(), 1e-12);
}

namespace {

Topology filter_fixture() {
  Topology t;
  for (std::uint32_t i = 0; i < 6; ++i) {
    Device d;
    d.id = DeviceId{i};
    d.position = {static_cast<double>(i) * 10.0, 0.0};
    if (i >= 4) {
      d.kind = DeviceKind::EdgeCompute;
      d.cpu_hz = 2e9;
      d.price_per_s = 0.1;
    }
    t.add_device(d);
  }
  for (std::uint32_t i = 0; i + 1 < 6; ++i) t.add_link(DeviceId{i}, DeviceId{i + 1});
  t.add_link(DeviceId{0}, DeviceId{4});
  return t;
}

double fixture_reliability(DeviceId id) {
  static const double r[] = {0.0, 0.9, 0.3, 0.6, 0.8, 0.2};
  return r[id.value];
}

Task filter_task(double c_tf, double c_ec) {
  Task task;
  task.owner = DeviceId{0};
  task.density = 100;
  task.size_bits = 1e6;
  task.c_tf = c_tf;
  task.c_ec = c_ec;
  task.s_tf_soft = 1;
  task.s_tf_hard = 2;
  task.s_ec_soft = 1;
  task.s_ec_hard = 2;
  return task;
}

}  // namespace

TEST(Filter, ThresholdsSelectDevices) {
  const auto t = filter_fixture();
  auto kept = filter_topology(t, filter_task(0.0, 0.0), fixture_reliability);
  EXPECT_EQ(kept.size(), 6u);
  kept = filter_topology(t, filter_task(0.6, 0.5), fixture_reliability);
  EXPECT_EQ(kept.device_ids(), (std::vector<DeviceId>{DeviceId{0}, DeviceId{1}, DeviceId{3},
                                                      DeviceId{4}}));
  EXPECT_TRUE(kept.has_link(DeviceId{0}, DeviceId{1}));
  EXPECT_TRUE(kept.has_link(DeviceId{0}, DeviceId{4}));
  EXPECT_FALSE(kept.contains(DeviceId{2}));
  // The owner survives any threshold.
  kept = filter_topology(t, filter_task(1.0, 1.0), fixture_reliability);
  EXPECT_EQ(kept.device_ids(), std::vector<DeviceId>{DeviceId{0}});
}

TEST(Filter, RaisingThresholdNeverAddsDevices) {
  const auto graph = random_trust_graph(6, 2, 0.5, 30);
  const auto model = make_model(tiny(), graph, 4);
  Topology t;
  for (const auto& [id, kind] : graph.nodes()) {
    Device d;
    d.id = id;
    d.kind = kind;
    d.position = {static_cast<double>(id.value), 0.0};
    if (kind == DeviceKind::EdgeCompute) d.cpu_hz = 1e9;
    t.add_device(d);
  }
  auto previous = t.device_ids();
  for (double c : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
    const auto kept = filter_topology(t, model, graph, filter_task(c, 0.0)).device_ids();
    for (auto id : kept) EXPECT_NE(std::find(previous.begin(), previous.end(), id), previous.end());
    previous = kept;
  }
}
