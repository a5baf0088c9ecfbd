#include "genderbias/model.hpp"

#include <sstream>

namespace genderbias {

namespace {

std::string shape_to_string(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << "]";
  return os.str();
}

Index require_count(const nlohmann::json& metadata, const char* key) {
  if (!metadata.contains(key) || !metadata[key].is_number_integer()) {
    throw ValidationError(ValidationErrorKind::kBadConfig,
                          std::string("metadata lacks integer field '") + key + "'");
  }
  return metadata[key].get<Index>();
}

}  // namespace

ModelConfig ModelConfig::from_metadata(const nlohmann::json& metadata) {
  ModelConfig c;
  c.hidden_dim = require_count(metadata, "hidden_dim");
  c.num_layers = require_count(metadata, "num_layers");
  c.num_heads = require_count(metadata, "num_heads");
  c.intermediate_dim = require_count(metadata, "intermediate_dim");
  c.vocab_size = require_count(metadata, "vocab_size");
  c.max_positions = require_count(metadata, "max_positions");
  c.layer_norm_eps = 1e-12;
  if (metadata.contains("layer_norm_eps")) {
    if (!metadata["layer_norm_eps"].is_number()) {
      throw ValidationError(ValidationErrorKind::kBadConfig, "layer_norm_eps is not a number");
    }
    c.layer_norm_eps = metadata["layer_norm_eps"].get<double>();
  }
  c.head_dim = c.num_heads > 0 ? c.hidden_dim / c.num_heads : 0;
  c.validate();
  return c;
}

nlohmann::json ModelConfig::to_metadata() const {
  return {{"hidden_dim", hidden_dim},         {"num_layers", num_layers},
          {"num_heads", num_heads},           {"intermediate_dim", intermediate_dim},
          {"vocab_size", vocab_size},         {"max_positions", max_positions},
          {"layer_norm_eps", layer_norm_eps}};
}

void ModelConfig::validate() const {
  if (hidden_dim <= 0 || num_layers <= 0 || num_heads <= 0 || head_dim <= 0 ||
      intermediate_dim <= 0 || vocab_size <= 0 || max_positions <= 0) {
    throw ValidationError(ValidationErrorKind::kBadConfig, "all model dimensions must be positive");
  }
  if (hidden_dim != num_heads * head_dim) {
    throw ValidationError(ValidationErrorKind::kBadConfig,
                          "hidden_dim " + std::to_string(hidden_dim) + " != num_heads " +
                              std::to_string(num_heads) + " x head_dim " +
                              std::to_string(head_dim));
  }
  if (!(layer_norm_eps > 0.0)) {
    throw ValidationError(ValidationErrorKind::kBadConfig, "layer_norm_eps must be positive");
  }
}

std::string layer_tensor_name(Index layer, const std::string& suffix) {
  return "layer." + std::to_string(layer) + "." + suffix;
}

std::vector<TensorSpec> canonical_inventory(const ModelConfig& c) {
  const Index h = c.hidden_dim;
  std::vector<TensorSpec> inv = {
      {"embeddings.word", {c.vocab_size, h}},
      {"embeddings.position", {c.max_positions, h}},
      {"embeddings.token_type", {2, h}},
      {"embeddings.ln.gamma", {h}},
      {"embeddings.ln.beta", {h}},
  };
  for (Index i = 0; i < c.num_layers; ++i) {
    for (const char* proj : {"wq", "wk", "wv", "wo"}) {
      inv.push_back({layer_tensor_name(i, std::string("attn.") + proj + ".weight"), {h, h}});
      inv.push_back({layer_tensor_name(i, std::string("attn.") + proj + ".bias"), {h}});
    }
    inv.push_back({layer_tensor_name(i, "attn.ln.gamma"), {h}});
    inv.push_back({layer_tensor_name(i, "attn.ln.beta"), {h}});
    inv.push_back({layer_tensor_name(i, "ffn.w1.weight"), {h, c.intermediate_dim}});
    inv.push_back({layer_tensor_name(i, "ffn.w1.bias"), {c.intermediate_dim}});
    inv.push_back({layer_tensor_name(i, "ffn.w2.weight"), {c.intermediate_dim, h}});
    inv.push_back({layer_tensor_name(i, "ffn.w2.bias"), {h}});
    inv.push_back({layer_tensor_name(i, "ffn.ln.gamma"), {h}});
    inv.push_back({layer_tensor_name(i, "ffn.ln.beta"), {h}});
  }
  return inv;
}

WeightStore::WeightStore(ModelConfig config, std::map<std::string, Matrix> tensors)
    : config_(std::move(config)), tensors_(std::move(tensors)) {}

const Matrix& WeightStore::get_tensor(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw UnknownTensorError(name);
  return it->second;
}

LayerWeights WeightStore::layer(Index i) const {
  auto t = [&](const char* suffix) -> const Matrix& {
    return get_tensor(layer_tensor_name(i, suffix));
  };
  return LayerWeights{t("attn.wq.weight"), t("attn.wq.bias"), t("attn.wk.weight"),
                      t("attn.wk.bias"),   t("attn.wv.weight"), t("attn.wv.bias"),
                      t("attn.wo.weight"), t("attn.wo.bias"),   t("attn.ln.gamma"),
                      t("attn.ln.beta"),   t("ffn.w1.weight"),  t("ffn.w1.bias"),
                      t("ffn.w2.weight"),  t("ffn.w2.bias"),    t("ffn.ln.gamma"),
                      t("ffn.ln.beta")};
}

RawContainer WeightStore::to_container() const {
  RawContainer raw;
  raw.metadata = config_.to_metadata();
  for (const auto& spec : canonical_inventory(config_)) {
    const Matrix& m = get_tensor(spec.name);
    raw.tensors.emplace(spec.name, spec.shape.size() == 1 ? to_raw_vector(m) : to_raw_tensor(m));
  }
  return raw;
}

WeightStore validate_and_build(const RawContainer& raw) {
  const ModelConfig config = ModelConfig::from_metadata(raw.metadata);
  std::map<std::string, Matrix> tensors;
  for (const auto& spec : canonical_inventory(config)) {
    const auto it = raw.tensors.find(spec.name);
    if (it == raw.tensors.end()) {
      throw ValidationError(ValidationErrorKind::kMissingTensor, "missing tensor '" + spec.name + "'");
    }
    const RawTensor& t = it->second;
    if (t.shape != spec.shape) {
      throw ValidationError(ValidationErrorKind::kShapeMismatch,
                            "tensor '" + spec.name + "' expected shape " +
                                shape_to_string(spec.shape) + ", got " + shape_to_string(t.shape));
    }
    const Index rows = spec.shape.size() == 1 ? 1 : spec.shape[0];
    const Index cols = spec.shape.size() == 1 ? spec.shape[0] : spec.shape[1];
    Matrix m = Eigen::Map<const Matrix>(t.values.data(), rows, cols);
    if (!m.allFinite()) {
      throw ValidationError(ValidationErrorKind::kNonFinite,
                            "tensor '" + spec.name + "' has non-finite entries");
    }
    tensors.emplace(spec.name, std::move(m));
  }
  return WeightStore(config, std::move(tensors));
}

WeightStore load_weight_store(const std::filesystem::path& path) {
  return validate_and_build(read_container(path));
}

}  // namespace genderbias
