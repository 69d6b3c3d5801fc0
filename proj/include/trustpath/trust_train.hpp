#pragma once

// Full-batch training of the trust GNN with a train/validation/test edge split.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "trustpath/collab_graph.hpp"
#include "trustpath/trust_gnn.hpp"

namespace trustpath::gnn {

struct EpochMetrics {
  std::size_t epoch{};
  double train_loss{};
  double val_loss{};
  double rmse{};  // on the validation edges
  double mae{};
};

struct EdgeSplit {
  std::vector<LabeledEdge> train;
  std::vector<LabeledEdge> validation;
  std::vector<LabeledEdge> test;
};

/// Seeded shuffle, then `test_fraction` of the edges to test and
/// `validation_fraction` of the remainder to validation. Every split that is
/// requested receives at least one edge.
EdgeSplit split_edges(const collab::DirectTrustGraph& graph, double test_fraction,
                      double validation_fraction, std::uint64_t seed);

struct TrainResult {
  TrustModel model;
  std::vector<EpochMetrics> curve;  // entry e is the state after e updates
  EdgeSplit split;
  collab::DirectTrustGraph message_graph;  // nodes of the input, training edges only
  EvalMetrics test;
  EvalMetrics baseline;  // constant prediction at the mean training label
  std::size_t best_epoch{};
  bool early_stopped{};
};

/// Trains on the training split. Messages propagate over training edges only so
/// held-out labels never leak into the embeddings. Throws ModelError when a
/// split is empty or the loss stops being finite.
TrainResult train(const collab::DirectTrustGraph& graph, const ModelConfig& config,
                  std::uint64_t seed);

/// One optimizer update of `model` given a gradient. `state` carries moment
/// estimates across calls and is initialised on first use.
struct OptimizerState {
  std::size_t step{};
  Parameters first;
  Parameters second;
};
void apply_update(TrustModel& model, const Parameters& gradient, OptimizerState& state);

void write_curve_csv(std::ostream& out, const std::vector<EpochMetrics>& curve);

}  // namespace trustpath::gnn
