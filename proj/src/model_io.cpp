#include "trustpath/model_io.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "trustpath/errors.hpp"

namespace trustpath::gnn {
namespace {

std::string_view mode_name(HistoricalMode m) {
  return m == HistoricalMode::BinCenter ? "bin_center" : "max_probability";
}

std::string_view optimizer_name(Optimizer o) {
  return o == Optimizer::GradientDescent ? "gd" : "adam";
}

}  // namespace

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"embedding_dim", c.embedding_dim},
                     {"layer_dims", c.layer_dims},
                     {"heads", c.heads},
                     {"trust_bits", c.trust_bits},
                     {"classes", c.classes},
                     {"mlp_hidden", c.mlp_hidden},
                     {"leaky_slope", c.leaky_slope},
                     {"historical_mode", mode_name(c.mode)},
                     {"optimizer", optimizer_name(c.optimizer)},
                     {"learning_rate", c.learning_rate},
                     {"l2", c.l2},
                     {"dropout", c.dropout},
                     {"epochs", c.epochs},
                     {"patience", c.patience},
                     {"test_fraction", c.test_fraction},
                     {"validation_fraction", c.validation_fraction}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (!j.is_object()) throw ConfigError("model configuration must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "embedding_dim") c.embedding_dim = value.get<std::size_t>();
      else if (key == "layer_dims") c.layer_dims = value.get<std::vector<std::size_t>>();
      else if (key == "heads") c.heads = value.get<std::size_t>();
      else if (key == "trust_bits") c.trust_bits = value.get<std::size_t>();
      else if (key == "classes") c.classes = value.get<std::size_t>();
      else if (key == "mlp_hidden") c.mlp_hidden = value.get<std::size_t>();
      else if (key == "leaky_slope") c.leaky_slope = value.get<double>();
      else if (key == "historical_mode") {
        const auto s = value.get<std::string>();
        if (s == "bin_center") c.mode = HistoricalMode::BinCenter;
        else if (s == "max_probability") c.mode = HistoricalMode::MaxProbability;
        else throw ConfigError(fmt::format("unknown historical_mode '{}'", s));
      } else if (key == "optimizer") {
        const auto s = value.get<std::string>();
        if (s == "gd") c.optimizer = Optimizer::GradientDescent;
        else if (s == "adam") c.optimizer = Optimizer::Adam;
        else throw ConfigError(fmt::format("unknown optimizer '{}'", s));
      } else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "l2") c.l2 = value.get<double>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "patience") c.patience = value.get<std::size_t>();
      else if (key == "test_fraction") c.test_fraction = value.get<double>();
      else if (key == "validation_fraction") c.validation_fraction = value.get<double>();
      else throw ConfigError(fmt::format("unknown model key '{}'", key));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("model.{}: {}", key, e.what()));
    }
  }
}

nlohmann::json checkpoint_json(const TrustModel& model) {
  nlohmann::json tensors = nlohmann::json::array();
  model.params.visit([&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"data", std::vector<double>(m.data(), m.data() + m.size())}});
  });
  nlohmann::json emb = nlohmann::json::array();
  for (const auto& [id, v] : model.initial)
    emb.push_back({{"id", id}, {"vector", std::vector<double>(v.data(), v.data() + v.size())}});
  return {{"format", "trustpath-model"},
          {"version", kCheckpointVersion},
          {"config", model.config},
          {"tensors", std::move(tensors)},
          {"embeddings", std::move(emb)}};
}

TrustModel model_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format") != "trustpath-model") throw ModelError("not a trustpath model checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ModelError(fmt::format("unsupported checkpoint version {}", version));

    TrustModel model;
    model.config = j.at("config").get<ModelConfig>();
    model.config.validate();

    // Shapes come from a freshly initialized model with the same configuration.
    collab::DirectTrustGraph probe({{DeviceId{0}, DeviceKind::Terminal}}, {});
    model.params = make_model(model.config, probe, 0).params;

    const auto& tensors = j.at("tensors");
    std::size_t i = 0;
    model.params.visit([&](const std::string& name, Matrix& m) {
      if (i >= tensors.size()) throw ModelError(fmt::format("checkpoint lacks tensor {}", name));
      const auto& t = tensors[i++];
      if (t.at("name") != name)
        throw ModelError(fmt::format("tensor {} found where {} was expected",
                                     t.at("name").get<std::string>(), name));
      if (t.at("rows").get<Eigen::Index>() != m.rows() ||
          t.at("cols").get<Eigen::Index>() != m.cols())
        throw ModelError(fmt::format("tensor {} has the wrong shape", name));
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != static_cast<std::size_t>(m.size()))
        throw ModelError(fmt::format("tensor {} has {} values, expected {}", name, data.size(),
                                     m.size()));
      m = Eigen::Map<const Matrix>(data.data(), m.rows(), m.cols());
    });
    if (i != tensors.size()) throw ModelError("checkpoint has extra tensors");

    for (const auto& e : j.at("embeddings")) {
      const auto v = e.at("vector").get<std::vector<double>>();
      if (v.size() != model.config.embedding_dim)
        throw ModelError("embedding width does not match the configuration");
      model.initial[e.at("id").get<DeviceId>()] =
          Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(fmt::format("malformed checkpoint: {}", e.what()));
  }
}

void save_model(const std::string& path, const TrustModel& model) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write model file '{}'", path));
  out << checkpoint_json(model).dump() << '\n';
}

TrustModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open model file '{}'", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  return model_from_checkpoint(j);
}

}  // namespace trustpath::gnn
