#pragma once

// Instrumented BERT-style encoder forward pass.
//
// One sentence at a time, unpadded, single segment. The pass records the
// activation matrix at every detection position so the bias detector can be
// applied afterwards.

#include "genderbias/model.hpp"
#include "genderbias/positions.hpp"
#include "genderbias/tensor_ops.hpp"
#include "genderbias/tokenizer.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace genderbias {

class EncoderError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct LayerCaptures {
  Matrix q;              // m x hidden, heads concatenated
  Matrix k;
  Matrix v;
  Matrix avg_attention;  // per-head AS * V, concatenated, before the output projection
  Matrix layer_out;
};

struct CaptureSet {
  Matrix embedding;
  std::vector<LayerCaptures> layers;

  const Matrix& at(const Position& p) const;
  Index size() const { return num_positions(static_cast<Index>(layers.size())); }
  Index rows() const { return embedding.rows(); }
};

/// Word + position + token-type(0) embeddings, then layer norm.
Matrix embed(std::span<const TokenId> token_ids, const WeightStore& store);
inline Matrix embed(const TokenizedSentence& ts, const WeightStore& store) {
  return embed(ts.token_ids, store);
}

/// Runs layer `layer` on `x`. When `attention_scores` is non-null it receives
/// the per-head attention score matrices.
LayerCaptures attention_layer(const Matrix& x, Index layer, const WeightStore& store,
                              std::vector<Matrix>* attention_scores = nullptr);

CaptureSet forward_instrumented(std::span<const TokenId> token_ids, const WeightStore& store);
inline CaptureSet forward_instrumented(const TokenizedSentence& ts, const WeightStore& store) {
  return forward_instrumented(ts.token_ids, store);
}

/// Debug spill: one tensor per position label plus token ids in the metadata.
void write_capture_set(const std::filesystem::path& path, const CaptureSet& captures,
                       std::span<const TokenId> token_ids);
CaptureSet read_capture_set(const std::filesystem::path& path);

}  // namespace genderbias
