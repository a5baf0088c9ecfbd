#pragma once

// Typed view over a validated encoder checkpoint.

#include "genderbias/container.hpp"
#include "genderbias/tensor_ops.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace genderbias {

struct ModelConfig {
  Index hidden_dim = 768;
  Index num_layers = 12;
  Index num_heads = 12;
  Index head_dim = 64;
  Index intermediate_dim = 3072;
  Index vocab_size = 30522;
  Index max_positions = 512;
  double layer_norm_eps = 1e-12;

  /// Reads the container metadata; head_dim is derived, layer_norm_eps defaults to 1e-12.
  static ModelConfig from_metadata(const nlohmann::json& metadata);
  nlohmann::json to_metadata() const;

  /// Throws ValidationError unless all counts are positive and hidden = heads * head_dim.
  void validate() const;

  /// Detection positions: embedding output plus five per layer.
  Index num_positions() const { return 1 + 5 * num_layers; }
};

enum class ValidationErrorKind { kBadConfig, kMissingTensor, kShapeMismatch, kNonFinite };

class ValidationError : public std::runtime_error {
 public:
  ValidationError(ValidationErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ValidationErrorKind kind() const noexcept { return kind_; }

 private:
  ValidationErrorKind kind_;
};

class UnknownTensorError : public std::out_of_range {
 public:
  explicit UnknownTensorError(const std::string& name)
      : std::out_of_range("unknown tensor '" + name + "'") {}
};

struct TensorSpec {
  std::string name;
  std::vector<Index> shape;
};

/// The full canonical inventory for `config`, in a fixed order.
std::vector<TensorSpec> canonical_inventory(const ModelConfig& config);

struct LayerWeights {
  const Matrix& wq;
  const Matrix& bq;
  const Matrix& wk;
  const Matrix& bk;
  const Matrix& wv;
  const Matrix& bv;
  const Matrix& wo;
  const Matrix& bo;
  const Matrix& attn_ln_gamma;
  const Matrix& attn_ln_beta;
  const Matrix& w1;
  const Matrix& b1;
  const Matrix& w2;
  const Matrix& b2;
  const Matrix& ffn_ln_gamma;
  const Matrix& ffn_ln_beta;
};

/// Immutable after construction; share one instance across worker threads.
/// One-dimensional tensors are held as 1 x n matrices.
class WeightStore {
 public:
  WeightStore(ModelConfig config, std::map<std::string, Matrix> tensors);

  const ModelConfig& config() const noexcept { return config_; }
  const Matrix& get_tensor(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.contains(name); }
  std::size_t size() const noexcept { return tensors_.size(); }
  LayerWeights layer(Index i) const;

  /// Back to container form, with one-dimensional shapes restored.
  RawContainer to_container() const;

 private:
  ModelConfig config_;
  std::map<std::string, Matrix> tensors_;
};

/// Checks inventory, shapes and finiteness against the metadata config.
WeightStore validate_and_build(const RawContainer& raw);
WeightStore load_weight_store(const std::filesystem::path& path);

std::string layer_tensor_name(Index layer, const std::string& suffix);

}  // namespace genderbias
