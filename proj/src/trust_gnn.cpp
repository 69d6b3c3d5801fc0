#include "trustpath/trust_gnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "trustpath/errors.hpp"
#include "trustpath/trust_encoding.hpp"

namespace trustpath::gnn {
namespace {

Vector leaky(const Vector& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

Vector leaky_grad(const Vector& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double log_sum_exp(const Vector& logits) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

Matrix xavier(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double gain = 1.0) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  return m;
}

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

std::size_t layer_input_dim(const ModelConfig& cfg, std::size_t layer) {
  return layer == 0 ? cfg.embedding_dim : cfg.layer_dims[layer - 1];
}

Role in_role_of(DeviceKind kind) {
  return kind == DeviceKind::Terminal ? Role::Trustee : Role::EdgeTrustee;
}

struct MlpTrace {
  Vector input;
  Vector hidden_pre;
  Vector hidden;
  Vector logits;
};

MlpTrace mlp_forward(const TrustModel& model, const Vector& a, const Vector& b) {
  const auto& mlp = model.params.mlp;
  MlpTrace t;
  t.input.resize(a.size() + b.size());
  t.input << a, b;
  t.hidden_pre = mlp.hidden * t.input + mlp.hidden_bias.col(0);
  t.hidden = leaky(t.hidden_pre, model.config.leaky_slope);
  t.logits = mlp.out * t.hidden + mlp.out_bias.col(0);
  return t;
}

TrustPrediction to_prediction(const ModelConfig& cfg, const Vector& logits) {
  const Vector p = softmax(logits);
  TrustPrediction out;
  out.class_distribution.assign(p.data(), p.data() + p.size());
  // First maximal index wins ties.
  std::size_t best = 0;
  for (std::size_t c = 1; c < out.class_distribution.size(); ++c)
    if (out.class_distribution[c] > out.class_distribution[best]) best = c;
  out.predicted_class = best;
  out.t_his = cfg.mode == HistoricalMode::BinCenter ? bin_center(best, cfg.classes)
                                                    : out.class_distribution[best];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration and parameters

void ModelConfig::validate() const {
  if (embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  if (layer_dims.empty()) throw ConfigError("at least one propagation layer is required");
  if (heads == 0) throw ConfigError("at least one attention head is required");
  for (auto d : layer_dims)
    if (d == 0 || d % heads != 0)
      throw ConfigError(fmt::format("layer width {} must be a positive multiple of {} heads", d,
                                    heads));
  if (trust_bits == 0 || trust_bits > 16) throw ConfigError("trust_bits must be in [1,16]");
  if (classes < 2) throw ConfigError("need at least two trust classes");
  if (mlp_hidden == 0) throw ConfigError("mlp_hidden must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must be in [0,1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must be in (0,1)");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must be in [0,1)");
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  z.visit([](const std::string&, Matrix& m) { m.setZero(); });
  return z;
}

double Parameters::squared_norm() const {
  double s = 0.0;
  visit([&s](const std::string&, const Matrix& m) { s += m.squaredNorm(); });
  return s;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  visit([&n](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

void zip_parameters(Parameters& a, const Parameters& b,
                    const std::function<void(Matrix&, const Matrix&)>& f) {
  std::vector<const Matrix*> rhs;
  b.visit([&rhs](const std::string&, const Matrix& m) { rhs.push_back(&m); });
  std::size_t i = 0;
  a.visit([&](const std::string& name, Matrix& m) {
    if (i >= rhs.size() || rhs[i]->rows() != m.rows() || rhs[i]->cols() != m.cols())
      throw ModelError(fmt::format("parameter shape mismatch at {}", name));
    f(m, *rhs[i++]);
  });
  if (i != rhs.size()) throw ModelError("parameter sets differ in tensor count");
}

EmbeddingTable init_embeddings(const collab::DirectTrustGraph& graph, std::size_t dim,
                               std::uint64_t seed) {
  if (graph.nodes().empty()) throw ModelError("cannot embed an empty trust graph");
  if (dim == 0) throw ModelError("embedding dimension must be positive");

  std::vector<DeviceId> ids;
  std::unordered_map<DeviceId, std::size_t> at;
  for (const auto& [id, _] : graph.nodes()) {
    at[id] = ids.size();
    ids.push_back(id);
  }
  std::vector<std::set<std::size_t>> adj(ids.size());
  for (const auto& e : graph.edges()) {
    adj[at[e.src]].insert(at[e.dst]);
    adj[at[e.dst]].insert(at[e.src]);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(idx(dim), idx(ids.size()));
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = normal(rng);

  for (int round = 0; round < 2; ++round) {
    Matrix next(x.rows(), x.cols());
    for (std::size_t v = 0; v < ids.size(); ++v) {
      Vector acc = x.col(idx(v));
      for (auto u : adj[v]) acc += x.col(idx(u));
      next.col(idx(v)) = acc / static_cast<double>(adj[v].size() + 1);
    }
    x = std::move(next);
  }

  EmbeddingTable table;
  for (std::size_t v = 0; v < ids.size(); ++v) {
    Vector col = x.col(idx(v));
    const double n = col.norm();
    if (n > 0.0) {
      col /= n;
    } else {
      col.setZero();
      col[0] = 1.0;
    }
    table.emplace(ids[v], std::move(col));
  }
  return table;
}

TrustModel make_model(const ModelConfig& config, const collab::DirectTrustGraph& graph,
                      std::uint64_t seed) {
  config.validate();
  TrustModel model;
  model.config = config;
  model.initial = init_embeddings(graph, config.embedding_dim, seed);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  // Weights feeding a leaky rectifier use the matching Xavier gain.
  const double gain = std::sqrt(2.0 / (1.0 + config.leaky_slope * config.leaky_slope));
  const auto bits = idx(config.trust_bits);
  for (std::size_t l = 0; l < config.layer_dims.size(); ++l) {
    const auto d_in = idx(layer_input_dim(config, l));
    const auto d_out = idx(config.layer_dims[l]);
    const auto width = d_out / idx(config.heads);
    LayerParams layer;
    for (auto& role : layer.roles) {
      role.trust_proj = xavier(d_in, bits, rng);
      role.freq_proj = xavier(d_in, bits, rng);
      role.heads.resize(config.heads);
      for (auto& head : role.heads) {
        head.message = xavier(3 * d_in, d_in, rng);
        head.key = xavier(d_in, d_in, rng);
        head.aggregate = xavier(3 * d_in, width, rng, gain);
      }
    }
    layer.fuse = xavier(d_out, 2 * d_out, rng, gain);
    layer.fuse_bias = Matrix::Zero(d_out, 1);
    model.params.layers.push_back(std::move(layer));
  }
  const auto d_last = idx(config.layer_dims.back());
  model.params.mlp.hidden = xavier(idx(config.mlp_hidden), 2 * d_last, rng, gain);
  model.params.mlp.hidden_bias = Matrix::Zero(idx(config.mlp_hidden), 1);
  model.params.mlp.out = xavier(idx(config.classes), idx(config.mlp_hidden), rng);
  model.params.mlp.out_bias = Matrix::Zero(idx(config.classes), 1);
  return model;
}

// ---------------------------------------------------------------------------
// Graph tensors

GraphTensors GraphTensors::build(const collab::DirectTrustGraph& graph, const TrustModel& model,
                                 std::size_t n_max) {
  GraphTensors g;
  const auto dim = idx(model.config.embedding_dim);
  for (const auto& [id, kind] : graph.nodes()) {
    g.index[id] = g.ids.size();
    g.ids.push_back(id);
    g.kinds.push_back(kind);
  }
  g.features.resize(dim, idx(g.ids.size()));
  const double input_scale = std::sqrt(static_cast<double>(dim));
  for (std::size_t v = 0; v < g.ids.size(); ++v) {
    auto it = model.initial.find(g.ids[v]);
    if (it == model.initial.end())
      throw ModelError(fmt::format("device {} has no initial embedding", g.ids[v].value));
    if (it->second.size() != dim)
      throw ModelError(fmt::format("device {} embedding has width {}, expected {}",
                                   g.ids[v].value, it->second.size(), dim));
    g.features.col(idx(v)) = input_scale * it->second;
  }

  if (n_max == 0) n_max = graph.max_frequency();
  g.in_edges.resize(g.ids.size());
  g.out_edges.resize(g.ids.size());
  for (const auto& e : graph.edges()) {
    EncodedEdge enc;
    enc.src = g.index.at(e.src);
    enc.dst = g.index.at(e.dst);
    if (g.kinds[enc.src] != DeviceKind::Terminal)
      throw ModelError(fmt::format("edge device {} cannot act as a trustor", e.src.value));
    enc.trust_code = encode_trust(e.weight, model.config.trust_bits).as_vector();
    enc.freq_code = encode_frequency(e.frequency, n_max, model.config.trust_bits).as_vector();
    g.out_edges[enc.src].push_back(g.edges.size());
    g.in_edges[enc.dst].push_back(g.edges.size());
    g.edges.push_back(std::move(enc));
  }
  return g;
}

std::size_t GraphTensors::at(DeviceId id) const {
  auto it = index.find(id);
  if (it == index.end()) throw ModelError(fmt::format("unknown device {}", id.value));
  return it->second;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

std::optional<RoleTrace> aggregate_forward(const TrustModel& model, const GraphTensors& g,
                                           const LayerParams& layer, Role role, std::size_t node,
                                           const std::vector<std::size_t>& edges, bool incoming,
                                           const Matrix& input, Vector& out) {
  const auto& cfg = model.config;
  const auto& rp = layer.roles[static_cast<std::size_t>(role)];
  const Eigen::Index d_in = input.rows();
  const Eigen::Index width = out.size() / idx(cfg.heads);
  out.setZero();
  if (edges.empty()) return std::nullopt;

  RoleTrace t;
  t.role = role;
  t.edges = edges;
  t.messages.resize(3 * d_in, idx(edges.size()));
  for (std::size_t c = 0; c < edges.size(); ++c) {
    const auto& e = g.edges[edges[c]];
    const std::size_t sender = incoming ? e.src : e.dst;
    t.senders.push_back(sender);
    auto col = t.messages.col(idx(c));
    col.segment(0, d_in) = input.col(idx(sender));
    col.segment(d_in, d_in) = rp.trust_proj * e.trust_code;
    col.segment(2 * d_in, d_in) = rp.freq_proj * e.freq_code;
  }
  for (std::size_t q = 0; q < cfg.heads; ++q) {
    const auto& hp = rp.heads[q];
    HeadTrace h;
    h.key = hp.key.transpose() * input.col(idx(node));
    h.query = hp.message * h.key;
    h.weights = softmax(t.messages.transpose() * h.query);
    h.mixed = t.messages * h.weights;
    h.pre = hp.aggregate.transpose() * h.mixed;
    out.segment(idx(q) * width, width) = leaky(h.pre, cfg.leaky_slope);
    t.heads.push_back(std::move(h));
  }
  return t;
}

void aggregate_backward(const TrustModel& model, const GraphTensors& g, const LayerParams& layer,
                        const RoleTrace& t, std::size_t node, const Matrix& input,
                        const Vector& d_out, LayerParams& grads, Matrix& d_input) {
  const auto& cfg = model.config;
  const auto r = static_cast<std::size_t>(t.role);
  const auto& rp = layer.roles[r];
  auto& rg = grads.roles[r];
  const Eigen::Index d_in = input.rows();
  const Eigen::Index width = d_out.size() / idx(cfg.heads);

  Matrix d_messages = Matrix::Zero(t.messages.rows(), t.messages.cols());
  for (std::size_t q = 0; q < cfg.heads; ++q) {
    const auto& hp = rp.heads[q];
    auto& hg = rg.heads[q];
    const auto& h = t.heads[q];
    const Vector d_pre =
        d_out.segment(idx(q) * width, width).cwiseProduct(leaky_grad(h.pre, cfg.leaky_slope));
    hg.aggregate.noalias() += h.mixed * d_pre.transpose();
    const Vector d_mixed = hp.aggregate * d_pre;
    const Vector d_weights = t.messages.transpose() * d_mixed;
    d_messages.noalias() += d_mixed * h.weights.transpose();
    const Vector d_logits =
        h.weights.cwiseProduct((d_weights.array() - h.weights.dot(d_weights)).matrix());
    d_messages.noalias() += h.query * d_logits.transpose();
    const Vector d_query = t.messages * d_logits;
    hg.message.noalias() += d_query * h.key.transpose();
    const Vector d_key = hp.message.transpose() * d_query;
    hg.key.noalias() += input.col(idx(node)) * d_key.transpose();
    d_input.col(idx(node)).noalias() += hp.key * d_key;
  }
  for (std::size_t c = 0; c < t.edges.size(); ++c) {
    const auto& e = g.edges[t.edges[c]];
    const auto col = d_messages.col(idx(c));
    d_input.col(idx(t.senders[c])) += col.segment(0, d_in);
    rg.trust_proj.noalias() += col.segment(d_in, d_in) * e.trust_code.transpose();
    rg.freq_proj.noalias() += col.segment(2 * d_in, d_in) * e.freq_code.transpose();
  }
}

}  // namespace

LayerTrace layer_forward(const TrustModel& model, const GraphTensors& g, std::size_t layer,
                         const Matrix& input, const Dropout* dropout) {
  const auto& cfg = model.config;
  if (layer >= cfg.layer_dims.size())
    throw ModelError(fmt::format("layer {} out of range", layer));
  if (input.rows() != idx(layer_input_dim(cfg, layer)) || input.cols() != idx(g.size()))
    throw ModelError(fmt::format("layer {} input is {}x{}, expected {}x{}", layer, input.rows(),
                                 input.cols(), layer_input_dim(cfg, layer), g.size()));
  const auto& lp = model.params.layers[layer];
  const auto d_out = idx(cfg.layer_dims[layer]);

  LayerTrace trace;
  trace.input = input;
  trace.output.resize(d_out, idx(g.size()));
  trace.nodes.resize(g.size());
  const bool drop = dropout != nullptr && dropout->rate > 0.0;
  std::bernoulli_distribution keep(drop ? 1.0 - dropout->rate : 1.0);

  for (std::size_t v = 0; v < g.size(); ++v) {
    auto& nt = trace.nodes[v];
    Vector in_agg(d_out);
    nt.in = aggregate_forward(model, g, lp, in_role_of(g.kinds[v]), v, g.in_edges[v], true,
                              input, in_agg);
    Vector out;
    if (g.kinds[v] == DeviceKind::Terminal) {
      Vector out_agg(d_out);
      nt.out = aggregate_forward(model, g, lp, Role::Trustor, v, g.out_edges[v], false, input,
                                 out_agg);
      nt.fuse_input.resize(2 * d_out);
      nt.fuse_input << in_agg, out_agg;
      nt.fuse_pre = lp.fuse * nt.fuse_input + lp.fuse_bias.col(0);
      out = leaky(nt.fuse_pre, cfg.leaky_slope);
    } else {
      out = std::move(in_agg);
    }
    if (drop) {
      nt.mask.resize(d_out);
      for (Eigen::Index k = 0; k < d_out; ++k)
        nt.mask[k] = keep(*dropout->rng) ? 1.0 / (1.0 - dropout->rate) : 0.0;
      out = out.cwiseProduct(nt.mask);
    }
    trace.output.col(idx(v)) = out;
  }
  return trace;
}

Matrix layer_backward(const TrustModel& model, const GraphTensors& g, std::size_t layer,
                      const LayerTrace& trace, const Matrix& d_output, Parameters& grads) {
  const auto& cfg = model.config;
  const auto& lp = model.params.layers[layer];
  auto& lg = grads.layers[layer];
  const auto d_out = idx(cfg.layer_dims[layer]);
  Matrix d_input = Matrix::Zero(trace.input.rows(), trace.input.cols());

  for (std::size_t v = 0; v < g.size(); ++v) {
    const auto& nt = trace.nodes[v];
    Vector d = d_output.col(idx(v));
    if (nt.mask.size() > 0) d = d.cwiseProduct(nt.mask);
    Vector d_in_agg;
    if (g.kinds[v] == DeviceKind::Terminal) {
      const Vector d_pre = d.cwiseProduct(leaky_grad(nt.fuse_pre, cfg.leaky_slope));
      lg.fuse.noalias() += d_pre * nt.fuse_input.transpose();
      lg.fuse_bias.col(0) += d_pre;
      const Vector d_fuse_in = lp.fuse.transpose() * d_pre;
      d_in_agg = d_fuse_in.head(d_out);
      if (nt.out)
        aggregate_backward(model, g, lp, *nt.out, v, trace.input, d_fuse_in.tail(d_out), lg,
                           d_input);
    } else {
      d_in_agg = d;
    }
    if (nt.in) aggregate_backward(model, g, lp, *nt.in, v, trace.input, d_in_agg, lg, d_input);
  }
  return d_input;
}

Propagation propagate(const TrustModel& model, const GraphTensors& g, const Dropout* dropout) {
  Propagation p;
  const Matrix* input = &g.features;
  for (std::size_t l = 0; l < model.config.layer_dims.size(); ++l) {
    p.layers.push_back(layer_forward(model, g, l, *input, dropout));
    input = &p.layers.back().output;
  }
  p.final = *input;
  return p;
}

// ---------------------------------------------------------------------------
// Prediction and loss

std::vector<LabeledEdge> labeled_edges(const collab::DirectTrustGraph& graph) {
  std::vector<LabeledEdge> out;
  out.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) out.push_back({e.src, e.dst, e.weight});
  return out;
}

Vector FinalEmbeddings::of(DeviceId id) const {
  auto it = index.find(id);
  if (it == index.end()) throw ModelError(fmt::format("device {} was not embedded", id.value));
  return vectors.col(idx(it->second));
}

FinalEmbeddings final_embeddings(const GraphTensors& g, const Matrix& final) {
  FinalEmbeddings f;
  f.index = g.index;
  f.vectors = final;
  return f;
}

FinalEmbeddings embed(const TrustModel& model, const collab::DirectTrustGraph& graph,
                      std::size_t n_max) {
  const auto g = GraphTensors::build(graph, model, n_max);
  return final_embeddings(g, propagate(model, g).final);
}

TrustPrediction predict_pair(const TrustModel& model, const FinalEmbeddings& emb, DeviceId i,
                             DeviceId j) {
  return to_prediction(model.config, mlp_forward(model, emb.of(i), emb.of(j)).logits);
}

LossBreakdown loss(const TrustModel& model, const FinalEmbeddings& emb,
                   std::span<const LabeledEdge> edges) {
  if (edges.empty()) throw ModelError("loss over an empty edge set");
  LossBreakdown out;
  for (const auto& e : edges) {
    const Vector logits = mlp_forward(model, emb.of(e.src), emb.of(e.dst)).logits;
    const auto cls = idx(trust_class(e.label, model.config.classes));
    out.data -= logits[cls] - log_sum_exp(logits);
  }
  out.data /= static_cast<double>(edges.size());
  out.penalty = model.config.l2 * model.params.squared_norm();
  out.total = out.data + out.penalty;
  return out;
}

LossBreakdown loss(const TrustModel& model, const collab::DirectTrustGraph& message_graph,
                   std::span<const LabeledEdge> edges) {
  return loss(model, embed(model, message_graph), edges);
}

LossGradient loss_and_gradient(const TrustModel& model, const GraphTensors& g,
                               std::span<const LabeledEdge> edges, const Dropout* dropout) {
  if (edges.empty()) throw ModelError("loss over an empty edge set");
  const auto& cfg = model.config;
  const auto& mlp = model.params.mlp;
  LossGradient out;
  out.propagation = propagate(model, g, dropout);
  out.gradient = model.params.zeros_like();
  auto& mg = out.gradient.mlp;
  const Matrix& final = out.propagation.final;
  const Eigen::Index d_last = final.rows();
  Matrix d_final = Matrix::Zero(final.rows(), final.cols());

  const double scale = 1.0 / static_cast<double>(edges.size());
  for (const auto& e : edges) {
    const std::size_t i = g.at(e.src);
    const std::size_t j = g.at(e.dst);
    const MlpTrace t = mlp_forward(model, final.col(idx(i)), final.col(idx(j)));
    const auto cls = idx(trust_class(e.label, cfg.classes));
    out.loss.data -= t.logits[cls] - log_sum_exp(t.logits);

    Vector d_logits = softmax(t.logits);
    d_logits[cls] -= 1.0;
    d_logits *= scale;
    mg.out.noalias() += d_logits * t.hidden.transpose();
    mg.out_bias.col(0) += d_logits;
    const Vector d_hidden_pre =
        (mlp.out.transpose() * d_logits).cwiseProduct(leaky_grad(t.hidden_pre, cfg.leaky_slope));
    mg.hidden.noalias() += d_hidden_pre * t.input.transpose();
    mg.hidden_bias.col(0) += d_hidden_pre;
    const Vector d_input = mlp.hidden.transpose() * d_hidden_pre;
    d_final.col(idx(i)) += d_input.head(d_last);
    d_final.col(idx(j)) += d_input.tail(d_last);
  }
  out.loss.data *= scale;
  if (!std::isfinite(out.loss.data)) throw ModelError("loss is not finite");

  Matrix d = std::move(d_final);
  for (std::size_t l = cfg.layer_dims.size(); l-- > 0;)
    d = layer_backward(model, g, l, out.propagation.layers[l], d, out.gradient);

  out.loss.penalty = cfg.l2 * model.params.squared_norm();
  out.loss.total = out.loss.data + out.loss.penalty;
  if (cfg.l2 > 0.0)
    zip_parameters(out.gradient, model.params,
                   [&](Matrix& grad, const Matrix& p) { grad.noalias() += 2.0 * cfg.l2 * p; });
  return out;
}

EvalMetrics evaluate(const TrustModel& model, const FinalEmbeddings& emb,
                     std::span<const LabeledEdge> held_out) {
  EvalMetrics m;
  m.count = held_out.size();
  if (held_out.empty()) return m;
  double se = 0.0;
  double ae = 0.0;
  for (const auto& e : held_out) {
    const double err = predict_pair(model, emb, e.src, e.dst).t_his - e.label;
    se += err * err;
    ae += std::abs(err);
  }
  const auto n = static_cast<double>(held_out.size());
  m.rmse = std::sqrt(se / n);
  m.mae = ae / n;
  return m;
}

EvalMetrics evaluate(const TrustModel& model, const collab::DirectTrustGraph& message_graph,
                     std::span<const LabeledEdge> held_out) {
  return evaluate(model, embed(model, message_graph), held_out);
}

// ---------------------------------------------------------------------------
// Threshold filtering

Topology filter_topology(const Topology& topology, const Task& task,
                         const ReliabilityFn& reliability) {
  if (!topology.contains(task.owner))
    throw DomainError(fmt::format("task owner {} is not in the topology", task.owner.value));
  return topology.induced([&](const Device& d) {
    if (d.id == task.owner) return true;
    const double r = reliability(d.id);
    return d.is_edge() ? r >= task.c_ec : r >= task.c_tf;
  });
}

Topology filter_topology(const Topology& topology, const TrustModel& model,
                         const collab::DirectTrustGraph& graph, const Task& task) {
  const auto emb = embed(model, graph);
  return filter_topology(topology, task, [&](DeviceId id) {
    if (!emb.index.count(id) || !emb.index.count(task.owner)) return 0.0;
    return predict_pair(model, emb, task.owner, id).t_his;
  });
}

}  // namespace trustpath::gnn
