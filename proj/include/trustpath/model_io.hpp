#pragma once

// Versioned JSON checkpoints.
//
//   {"format": "trustpath-model", "version": 1,
//    "config": {...ModelConfig...},
//    "tensors": [{"name": "layer0.trustee.trust_proj", "rows": R, "cols": C,
//                 "data": [column-major values]}, ...],
//    "embeddings": [{"id": 3, "vector": [...]}, ...]}
//
// Tensors appear in Parameters::visit order and are checked against the shapes
// implied by the stored configuration on load.

#include <string>

#include "json.hpp"
#include "trustpath/trust_gnn.hpp"

namespace trustpath::gnn {

inline constexpr int kCheckpointVersion = 1;

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys raise ConfigError.
void from_json(const nlohmann::json& j, ModelConfig& c);

nlohmann::json checkpoint_json(const TrustModel& model);
TrustModel model_from_checkpoint(const nlohmann::json& j);

void save_model(const std::string& path, const TrustModel& model);
TrustModel load_model(const std::string& path);

}  // namespace trustpath::gnn
