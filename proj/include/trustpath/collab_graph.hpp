#pragma once

// Direct-trust extraction from historical collaboration records and the
// resulting directed trust graph.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "trustpath/domain.hpp"

namespace trustpath::collab {

/// One forwarding task of `dst` on behalf of `src`, as packet counters.
struct ForwardRecord {
  DeviceId src;
  DeviceId dst;
  std::uint64_t packets_total{};
  std::uint64_t packets_lost{};
  std::uint64_t packets_received{};
  std::uint64_t packets_forwarded{};

  void validate() const;
};

/// One computing task executed by edge device `dst` for `src`; outcome is 0 or 1.
struct ComputeRecord {
  DeviceId src;
  DeviceId dst;
  int outcome{};

  void validate() const;
};

struct TrustWeights {
  double alpha1{0.6};  // weight on link quality (1 - PLR)
  double alpha2{0.4};  // weight on forwarding success (TFSR)

  void validate() const;
};

struct LinkQuality {
  double plr{};
  double tfsr{};
};

/// Packet loss rate and forwarding success rate of a single record. A record
/// that received nothing has demonstrated no forwarding, so its TFSR is 0.
LinkQuality plr_tfsr(const ForwardRecord& rec);

/// Mean per-record score; nullopt when there are no records (no edge).
std::optional<double> direct_trust_terminal(std::span<const ForwardRecord> records,
                                            const TrustWeights& weights);
std::optional<double> direct_trust_ec(std::span<const ComputeRecord> records);

struct TrustEdge {
  DeviceId src;
  DeviceId dst;
  double weight{};          // direct trust in [0,1]
  std::size_t frequency{};  // number of records for the ordered pair
};

/// Immutable directed trust graph. Edges are sorted by (src, dst).
class DirectTrustGraph {
 public:
  DirectTrustGraph() = default;
  DirectTrustGraph(std::map<DeviceId, DeviceKind> nodes, std::vector<TrustEdge> edges);

  const std::map<DeviceId, DeviceKind>& nodes() const { return nodes_; }
  const std::vector<TrustEdge>& edges() const { return edges_; }
  const TrustEdge* find(DeviceId src, DeviceId dst) const;
  std::size_t max_frequency() const;
  bool contains(DeviceId id) const { return nodes_.count(id) != 0; }
  DeviceKind kind(DeviceId id) const;

  /// Same nodes, edges restricted to `keep`.
  DirectTrustGraph with_edges(std::vector<TrustEdge> keep) const;

 private:
  std::map<DeviceId, DeviceKind> nodes_;
  std::vector<TrustEdge> edges_;
};

/// Groups records by ordered pair and builds one edge per pair. Throws
/// IngestError carrying the record index when an endpoint is unknown or has the
/// wrong kind (forward records target terminals, compute records target edge
/// devices, sources are terminals).
DirectTrustGraph build_graph(const std::map<DeviceId, DeviceKind>& nodes,
                             std::span<const ForwardRecord> forward,
                             std::span<const ComputeRecord> compute, const TrustWeights& weights);

void to_json(nlohmann::json& j, const TrustEdge& e);

}  // namespace trustpath::collab
