#pragma once

// Role-aware attention GNN over the direct trust graph.
//
// Every layer l maps embeddings of width D_{l-1} to width D_l. A terminal device
// aggregates messages from its in-neighbors (trustee role) and its out-neighbors
// (trustor role) and fuses both through a fully-connected layer; an edge-compute
// device only aggregates as a trustee. A message from neighbor i is
//
//   mu = h_i || W_trust * code(T_dir) || W_freq * code(N / N_max)
//
// and each of Q heads scores it with (mu * W_msg) . (h_recv * W_key), softmaxes
// over the neighborhood, mixes the messages and projects the mixture to D_l / Q
// columns. Head outputs are concatenated. A two-layer perceptron over the
// concatenated final embeddings of an ordered pair yields a distribution over
// trust classes.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "trustpath/collab_graph.hpp"
#include "trustpath/domain.hpp"

namespace trustpath::gnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// How a class distribution becomes a scalar historical reliability.
enum class HistoricalMode {
  BinCenter,       // center of the most probable class
  MaxProbability,  // probability of the most probable class
};

enum class Optimizer {
  GradientDescent,
  Adam,
};

struct ModelConfig {
  std::size_t embedding_dim = 128;
  std::vector<std::size_t> layer_dims{32, 64, 32};
  std::size_t heads = 2;
  std::size_t trust_bits = 4;
  std::size_t classes = 16;
  std::size_t mlp_hidden = 64;
  double leaky_slope = 0.01;
  HistoricalMode mode = HistoricalMode::BinCenter;

  Optimizer optimizer = Optimizer::GradientDescent;
  double learning_rate = 1e-2;
  double l2 = 1e-5;
  double dropout = 0.0;
  std::size_t epochs = 200;
  std::size_t patience = 30;  // epochs without validation improvement; 0 disables
  double test_fraction = 0.2;
  double validation_fraction = 0.1;  // carved out of the training split

  void validate() const;
};

enum class Role : std::size_t { Trustee = 0, Trustor = 1, EdgeTrustee = 2 };
inline constexpr std::size_t kRoleCount = 3;

struct HeadParams {
  Matrix message;    // 3*D_in x D_in
  Matrix key;        // D_in x D_in
  Matrix aggregate;  // 3*D_in x (D_out / Q)
};

struct RoleParams {
  Matrix trust_proj;  // D_in x H_T
  Matrix freq_proj;   // D_in x H_T
  std::vector<HeadParams> heads;
};

struct LayerParams {
  std::array<RoleParams, kRoleCount> roles;
  Matrix fuse;       // D_out x 2*D_out
  Matrix fuse_bias;  // D_out x 1
};

struct MlpParams {
  Matrix hidden;       // H x 2*D_L
  Matrix hidden_bias;  // H x 1
  Matrix out;          // C x H
  Matrix out_bias;     // C x 1
};

/// All trainable tensors. Initial device embeddings are inputs, not parameters.
struct Parameters {
  std::vector<LayerParams> layers;
  MlpParams mlp;

  /// Calls f(name, tensor) for every tensor in a fixed order.
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  Parameters zeros_like() const;
  double squared_norm() const;
  std::size_t count() const;

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F& f);
};

/// Applies f(a_tensor, b_tensor) pairwise; both sets must share a shape.
void zip_parameters(Parameters& a, const Parameters& b,
                    const std::function<void(Matrix&, const Matrix&)>& f);

using EmbeddingTable = std::map<DeviceId, Vector>;

struct TrustModel {
  ModelConfig config;
  Parameters params;
  EmbeddingTable initial;
};

/// Seeded Gaussian vectors smoothed by two rounds of neighbor averaging on the
/// undirected trust graph, then scaled to unit length.
EmbeddingTable init_embeddings(const collab::DirectTrustGraph& graph, std::size_t dim,
                               std::uint64_t seed);

/// Xavier-uniform weights (with the leaky-rectifier gain in front of an
/// activation), zero biases, and seeded initial embeddings.
TrustModel make_model(const ModelConfig& config, const collab::DirectTrustGraph& graph,
                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Dense graph view used by the forward and backward passes.

struct EncodedEdge {
  std::size_t src{};
  std::size_t dst{};
  Vector trust_code;
  Vector freq_code;
};

struct GraphTensors {
  std::vector<DeviceId> ids;
  std::unordered_map<DeviceId, std::size_t> index;
  std::vector<DeviceKind> kinds;
  std::vector<EncodedEdge> edges;
  std::vector<std::vector<std::size_t>> in_edges;   // per node, edge indices
  std::vector<std::vector<std::size_t>> out_edges;  // per node, edge indices
  Matrix features;  // D_0 x N initial embeddings times sqrt(D_0): unit mean square per coordinate

  /// Frequencies are normalized by `n_max`; pass 0 to use the graph maximum.
  static GraphTensors build(const collab::DirectTrustGraph& graph, const TrustModel& model,
                            std::size_t n_max = 0);
  std::size_t size() const { return ids.size(); }
  std::size_t at(DeviceId id) const;
};

struct HeadTrace {
  Vector key;      // W_key^T h_recv
  Vector query;    // W_msg key
  Vector weights;  // softmax attention over neighbors
  Vector mixed;    // sum_i weights_i mu_i
  Vector pre;      // W_agg^T mixed
};

struct RoleTrace {
  Role role{};
  std::vector<std::size_t> edges;
  std::vector<std::size_t> senders;
  Matrix messages;  // 3*D_in x degree
  std::vector<HeadTrace> heads;
};

struct NodeTrace {
  std::optional<RoleTrace> in;
  std::optional<RoleTrace> out;
  Vector fuse_input;  // terminals: aggregate_in || aggregate_out
  Vector fuse_pre;
  Vector mask;        // dropout scaling, empty when inactive
};

struct LayerTrace {
  Matrix input;   // D_in x N
  Matrix output;  // D_out x N
  std::vector<NodeTrace> nodes;
};

struct Dropout {
  double rate{};
  std::mt19937_64* rng{};
};

LayerTrace layer_forward(const TrustModel& model, const GraphTensors& graph, std::size_t layer,
                         const Matrix& input, const Dropout* dropout = nullptr);
/// Accumulates parameter gradients of `layer` into `grads` and returns dL/d(input).
Matrix layer_backward(const TrustModel& model, const GraphTensors& graph, std::size_t layer,
                      const LayerTrace& trace, const Matrix& d_output, Parameters& grads);

struct Propagation {
  std::vector<LayerTrace> layers;
  Matrix final;  // D_L x N
};

Propagation propagate(const TrustModel& model, const GraphTensors& graph,
                      const Dropout* dropout = nullptr);

// ---------------------------------------------------------------------------
// Prediction and loss

struct LabeledEdge {
  DeviceId src;
  DeviceId dst;
  double label{};  // direct trust in [0,1]
};

std::vector<LabeledEdge> labeled_edges(const collab::DirectTrustGraph& graph);

struct TrustPrediction {
  std::vector<double> class_distribution;
  std::size_t predicted_class{};
  double t_his{};
};

/// Final embeddings of every device, keyed by id.
struct FinalEmbeddings {
  std::unordered_map<DeviceId, std::size_t> index;
  Matrix vectors;  // D_L x N

  Vector of(DeviceId id) const;
};

/// `n_max` as in GraphTensors::build.
FinalEmbeddings embed(const TrustModel& model, const collab::DirectTrustGraph& graph,
                      std::size_t n_max = 0);
FinalEmbeddings final_embeddings(const GraphTensors& graph, const Matrix& final);

TrustPrediction predict_pair(const TrustModel& model, const FinalEmbeddings& emb, DeviceId i,
                             DeviceId j);

struct LossBreakdown {
  double data{};
  double penalty{};
  double total{};
};

struct LossGradient {
  LossBreakdown loss;
  Parameters gradient;
  Propagation propagation;
};

/// Mean cross-entropy of the true trust class plus l2 * ||params||^2.
LossBreakdown loss(const TrustModel& model, const FinalEmbeddings& emb,
                   std::span<const LabeledEdge> edges);
LossBreakdown loss(const TrustModel& model, const collab::DirectTrustGraph& message_graph,
                   std::span<const LabeledEdge> edges);
LossGradient loss_and_gradient(const TrustModel& model, const GraphTensors& graph,
                               std::span<const LabeledEdge> edges,
                               const Dropout* dropout = nullptr);

struct EvalMetrics {
  double rmse{};
  double mae{};
  std::size_t count{};
};

EvalMetrics evaluate(const TrustModel& model, const FinalEmbeddings& emb,
                     std::span<const LabeledEdge> held_out);
EvalMetrics evaluate(const TrustModel& model, const collab::DirectTrustGraph& message_graph,
                     std::span<const LabeledEdge> held_out);

// ---------------------------------------------------------------------------
// Threshold filtering

using ReliabilityFn = std::function<double(DeviceId)>;

/// Keeps the owner, terminals with reliability >= c_tf and edge devices with
/// reliability >= c_ec, plus the links among them.
Topology filter_topology(const Topology& topology, const Task& task,
                         const ReliabilityFn& reliability);
Topology filter_topology(const Topology& topology, const TrustModel& model,
                         const collab::DirectTrustGraph& graph, const Task& task);

// ---------------------------------------------------------------------------

template <class Self, class F>
void Parameters::visit_impl(Self& self, F& f) {
  static constexpr const char* kRoleNames[kRoleCount] = {"trustee", "trustor", "edge"};
  for (std::size_t l = 0; l < self.layers.size(); ++l) {
    auto& layer = self.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t r = 0; r < kRoleCount; ++r) {
      auto& role = layer.roles[r];
      const std::string rp = prefix + kRoleNames[r] + ".";
      f(rp + "trust_proj", role.trust_proj);
      f(rp + "freq_proj", role.freq_proj);
      for (std::size_t q = 0; q < role.heads.size(); ++q) {
        const std::string hp = rp + "head" + std::to_string(q) + ".";
        f(hp + "message", role.heads[q].message);
        f(hp + "key", role.heads[q].key);
        f(hp + "aggregate", role.heads[q].aggregate);
      }
    }
    f(prefix + "fuse", layer.fuse);
    f(prefix + "fuse_bias", layer.fuse_bias);
  }
  f(std::string("mlp.hidden"), self.mlp.hidden);
  f(std::string("mlp.hidden_bias"), self.mlp.hidden_bias);
  f(std::string("mlp.out"), self.mlp.out);
  f(std::string("mlp.out_bias"), self.mlp.out_bias);
}

}  // namespace trustpath::gnn
