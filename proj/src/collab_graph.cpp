#include "trustpath/collab_graph.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "trustpath/errors.hpp"

namespace trustpath::collab {

void ForwardRecord::validate() const {
  if (packets_total == 0) throw DomainError("forward record with zero packets sent");
  if (packets_lost > packets_total) throw DomainError("forward record loses more than it sent");
  if (packets_received != packets_total - packets_lost)
    throw DomainError("forward record: received != total - lost");
  if (packets_forwarded > packets_received)
    throw DomainError("forward record forwards more than it received");
}

void ComputeRecord::validate() const {
  if (outcome != 0 && outcome != 1) throw DomainError("compute record outcome must be 0 or 1");
}

void TrustWeights::validate() const {
  if (alpha1 < 0.0 || alpha1 > 1.0 || alpha2 < 0.0 || alpha2 > 1.0 ||
      std::abs(alpha1 + alpha2 - 1.0) > 1e-12)
    throw ConfigError("trust weights must lie in [0,1] and sum to 1");
}

LinkQuality plr_tfsr(const ForwardRecord& rec) {
  rec.validate();
  LinkQuality q;
  q.plr = static_cast<double>(rec.packets_lost) / static_cast<double>(rec.packets_total);
  q.tfsr = rec.packets_received == 0 ? 0.0
                                     : static_cast<double>(rec.packets_forwarded) /
                                           static_cast<double>(rec.packets_received);
  return q;
}

std::optional<double> direct_trust_terminal(std::span<const ForwardRecord> records,
                                            const TrustWeights& weights) {
  weights.validate();
  if (records.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& rec : records) {
    const LinkQuality q = plr_tfsr(rec);
    sum += weights.alpha1 * (1.0 - q.plr) + weights.alpha2 * q.tfsr;
  }
  return sum / static_cast<double>(records.size());
}

std::optional<double> direct_trust_ec(std::span<const ComputeRecord> records) {
  if (records.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& rec : records) {
    rec.validate();
    sum += rec.outcome;
  }
  return sum / static_cast<double>(records.size());
}

DirectTrustGraph::DirectTrustGraph(std::map<DeviceId, DeviceKind> nodes,
                                   std::vector<TrustEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end(), [](const TrustEdge& a, const TrustEdge& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
}

const TrustEdge* DirectTrustGraph::find(DeviceId src, DeviceId dst) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(src, dst),
                             [](const TrustEdge& e, const std::pair<DeviceId, DeviceId>& key) {
                               return std::pair(e.src, e.dst) < key;
                             });
  if (it == edges_.end() || it->src != src || it->dst != dst) return nullptr;
  return &*it;
}

std::size_t DirectTrustGraph::max_frequency() const {
  std::size_t n = 0;
  for (const auto& e : edges_) n = std::max(n, e.frequency);
  return n;
}

DeviceKind DirectTrustGraph::kind(DeviceId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ModelError(fmt::format("device {} not in trust graph", id.value));
  return it->second;
}

DirectTrustGraph DirectTrustGraph::with_edges(std::vector<TrustEdge> keep) const {
  return DirectTrustGraph(nodes_, std::move(keep));
}

DirectTrustGraph build_graph(const std::map<DeviceId, DeviceKind>& nodes,
                             std::span<const ForwardRecord> forward,
                             std::span<const ComputeRecord> compute, const TrustWeights& weights) {
  weights.validate();
  auto check = [&](std::size_t index, const char* what, DeviceId src, DeviceId dst,
                   DeviceKind expected_dst) {
    auto s = nodes.find(src);
    auto d = nodes.find(dst);
    if (s == nodes.end())
      throw IngestError(index, fmt::format("{} record {}: unknown device {}", what, index, src.value));
    if (d == nodes.end())
      throw IngestError(index, fmt::format("{} record {}: unknown device {}", what, index, dst.value));
    if (s->second != DeviceKind::Terminal)
      throw IngestError(index, fmt::format("{} record {}: source {} is not a terminal", what,
                                           index, src.value));
    if (d->second != expected_dst)
      throw IngestError(index, fmt::format("{} record {}: target {} has the wrong device kind",
                                           what, index, dst.value));
    if (src == dst)
      throw IngestError(index, fmt::format("{} record {}: self collaboration", what, index));
  };

  std::map<std::pair<DeviceId, DeviceId>, std::vector<ForwardRecord>> fwd;
  for (std::size_t i = 0; i < forward.size(); ++i) {
    const auto& r = forward[i];
    check(i, "forward", r.src, r.dst, DeviceKind::Terminal);
    try {
      r.validate();
    } catch (const DomainError& e) {
      throw IngestError(i, fmt::format("forward record {}: {}", i, e.what()));
    }
    fwd[{r.src, r.dst}].push_back(r);
  }
  std::map<std::pair<DeviceId, DeviceId>, std::vector<ComputeRecord>> cmp;
  for (std::size_t i = 0; i < compute.size(); ++i) {
    const auto& r = compute[i];
    check(i, "compute", r.src, r.dst, DeviceKind::EdgeCompute);
    if (r.outcome != 0 && r.outcome != 1)
      throw IngestError(i, fmt::format("compute record {}: outcome must be 0 or 1", i));
    cmp[{r.src, r.dst}].push_back(r);
  }

  std::vector<TrustEdge> edges;
  for (const auto& [key, recs] : fwd)
    edges.push_back({key.first, key.second, *direct_trust_terminal(recs, weights), recs.size()});
  for (const auto& [key, recs] : cmp)
    edges.push_back({key.first, key.second, *direct_trust_ec(recs), recs.size()});
  return DirectTrustGraph(nodes, std::move(edges));
}

void to_json(nlohmann::json& j, const TrustEdge& e) {
  j = nlohmann::json{
      {"src", e.src}, {"dst", e.dst}, {"weight", e.weight}, {"frequency", e.frequency}};
}

}  // namespace trustpath::collab
