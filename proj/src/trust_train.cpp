#include "trustpath/trust_train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "trustpath/errors.hpp"

namespace trustpath::gnn {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::size_t portion(std::size_t n, double fraction) {
  if (fraction <= 0.0 || n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

collab::DirectTrustGraph training_graph(const collab::DirectTrustGraph& graph,
                                        const std::vector<LabeledEdge>& train) {
  std::vector<collab::TrustEdge> keep;
  keep.reserve(train.size());
  for (const auto& e : train) keep.push_back(*graph.find(e.src, e.dst));
  return graph.with_edges(std::move(keep));
}

EvalMetrics constant_baseline(double value, const std::vector<LabeledEdge>& edges) {
  EvalMetrics m;
  m.count = edges.size();
  if (edges.empty()) return m;
  double se = 0.0;
  double ae = 0.0;
  for (const auto& e : edges) {
    se += (value - e.label) * (value - e.label);
    ae += std::abs(value - e.label);
  }
  m.rmse = std::sqrt(se / static_cast<double>(edges.size()));
  m.mae = ae / static_cast<double>(edges.size());
  return m;
}

}  // namespace

EdgeSplit split_edges(const collab::DirectTrustGraph& graph, double test_fraction,
                      double validation_fraction, std::uint64_t seed) {
  auto edges = labeled_edges(graph);
  std::mt19937_64 rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);

  EdgeSplit split;
  const std::size_t n_test = portion(edges.size(), test_fraction);
  const std::size_t n_val = portion(edges.size() - n_test, validation_fraction);
  if (n_test + n_val >= edges.size())
    throw ModelError(fmt::format("{} labeled edges cannot fill the train/validation/test split",
                                 edges.size()));
  auto it = edges.begin();
  split.test.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
  it += static_cast<std::ptrdiff_t>(n_test);
  split.validation.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
  it += static_cast<std::ptrdiff_t>(n_val);
  split.train.assign(it, edges.end());
  return split;
}

void apply_update(TrustModel& model, const Parameters& gradient, OptimizerState& state) {
  const double lr = model.config.learning_rate;
  ++state.step;
  if (model.config.optimizer == Optimizer::GradientDescent) {
    zip_parameters(model.params, gradient, [lr](Matrix& p, const Matrix& g) { p -= lr * g; });
    return;
  }
  if (state.step == 1) {
    state.first = model.params.zeros_like();
    state.second = model.params.zeros_like();
  }
  zip_parameters(state.first, gradient, [](Matrix& m, const Matrix& g) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
  });
  zip_parameters(state.second, gradient, [](Matrix& v, const Matrix& g) {
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseAbs2();
  });
  const auto t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  std::vector<const Matrix*> first;
  std::vector<const Matrix*> second;
  state.first.visit([&](const std::string&, const Matrix& m) { first.push_back(&m); });
  state.second.visit([&](const std::string&, const Matrix& m) { second.push_back(&m); });
  std::size_t i = 0;
  model.params.visit([&](const std::string&, Matrix& p) {
    const auto& m = *first[i];
    const auto& v = *second[i];
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
    ++i;
  });
}

TrainResult train(const collab::DirectTrustGraph& graph, const ModelConfig& config,
                  std::uint64_t seed) {
  config.validate();
  TrainResult result;
  result.split = split_edges(graph, config.test_fraction, config.validation_fraction, seed);
  result.message_graph = training_graph(graph, result.split.train);
  result.model = make_model(config, graph, seed);

  // Frequencies are normalized against the full graph so that codes match at inference.
  const std::size_t n_max = std::max<std::size_t>(graph.max_frequency(), 1);
  const auto tensors = GraphTensors::build(result.message_graph, result.model, n_max);
  std::mt19937_64 dropout_rng(seed ^ 0xd1b54a32d192ed03ULL);
  const Dropout dropout{config.dropout, &dropout_rng};
  const Dropout* active = config.dropout > 0.0 ? &dropout : nullptr;
  const bool has_val = !result.split.validation.empty();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  OptimizerState opt;
  Parameters best = result.model.params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0;; ++epoch) {
    auto step = loss_and_gradient(result.model, tensors, result.split.train, active);
    if (!std::isfinite(step.loss.total))
      throw ModelError(fmt::format("training diverged at epoch {} (loss {})", epoch,
                                   step.loss.total));

    EpochMetrics m{epoch, step.loss.total, nan, nan, nan};
    if (has_val) {
      const Matrix clean = active ? propagate(result.model, tensors).final
                                  : step.propagation.final;
      const auto emb = final_embeddings(tensors, clean);
      m.val_loss = loss(result.model, emb, result.split.validation).total;
      const auto ev = evaluate(result.model, emb, result.split.validation);
      m.rmse = ev.rmse;
      m.mae = ev.mae;
      if (m.val_loss < best_val) {
        best_val = m.val_loss;
        best = result.model.params;
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    result.curve.push_back(m);

    if (config.patience > 0 && has_val && since_best >= config.patience) {
      result.early_stopped = true;
      result.model.params = best;
      break;
    }
    if (epoch == config.epochs) break;
    apply_update(result.model, step.gradient, opt);
  }
  if (!result.early_stopped) result.best_epoch = config.epochs;

  const auto emb = embed(result.model, result.message_graph, n_max);
  result.test = evaluate(result.model, emb, result.split.test);
  double mean = 0.0;
  for (const auto& e : result.split.train) mean += e.label;
  mean /= static_cast<double>(result.split.train.size());
  result.baseline = constant_baseline(mean, result.split.test);
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<EpochMetrics>& curve) {
  out << "epoch,train_loss,val_loss,rmse,mae\n";
  for (const auto& m : curve)
    out << fmt::format("{},{},{},{},{}\n", m.epoch, m.train_loss, m.val_loss, m.rmse, m.mae);
}

}  // namespace trustpath::gnn
