#include "genderbias/encoder.hpp"

#include <cmath>

namespace genderbias {

const Matrix& CaptureSet::at(const Position& p) const {
  if (p.kind == PositionKind::kEmbedding) return embedding;
  if (p.layer < 0 || p.layer >= static_cast<Index>(layers.size())) {
    throw std::out_of_range("capture layer " + std::to_string(p.layer) + " out of range");
  }
  const LayerCaptures& l = layers[static_cast<std::size_t>(p.layer)];
  switch (p.kind) {
    case PositionKind::kQuery: return l.q;
    case PositionKind::kKey: return l.k;
    case PositionKind::kValue: return l.v;
    case PositionKind::kAvgAttention: return l.avg_attention;
    case PositionKind::kLayerOutput: return l.layer_out;
    case PositionKind::kEmbedding: break;
  }
  return embedding;
}

Matrix embed(std::span<const TokenId> token_ids, const WeightStore& store) {
  const ModelConfig& c = store.config();
  const auto m = static_cast<Index>(token_ids.size());
  if (m > c.max_positions) {
    throw EncoderError("sequence length " + std::to_string(m) + " exceeds max_positions " +
                       std::to_string(c.max_positions));
  }
  const Matrix& word = store.get_tensor("embeddings.word");
  const Matrix& position = store.get_tensor("embeddings.position");
  const Matrix& token_type = store.get_tensor("embeddings.token_type");

  Matrix x(m, c.hidden_dim);
  for (Index t = 0; t < m; ++t) {
    const TokenId id = token_ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= c.vocab_size) {
      throw EncoderError("token id " + std::to_string(id) + " outside vocabulary of " +
                         std::to_string(c.vocab_size));
    }
    x.row(t) = word.row(id) + position.row(t) + token_type.row(0);
  }
  return layer_norm(x, store.get_tensor("embeddings.ln.gamma"),
                    store.get_tensor("embeddings.ln.beta"), c.layer_norm_eps);
}

namespace {

Matrix affine(const Matrix& x, const Matrix& weight, const Matrix& bias) {
  Matrix out = matmul(x, weight);
  out.rowwise() += bias.row(0);
  return out;
}

}  // namespace

LayerCaptures attention_layer(const Matrix& x, Index layer, const WeightStore& store,
                              std::vector<Matrix>* attention_scores) {
  const ModelConfig& c = store.config();
  if (x.cols() != c.hidden_dim) {
    throw ShapeError("attention_layer: input " + shape_string(x.rows(), x.cols()) +
                     " does not have hidden width " + std::to_string(c.hidden_dim));
  }
  const LayerWeights w = store.layer(layer);
  LayerCaptures out;
  out.q = affine(x, w.wq, w.bq);
  out.k = affine(x, w.wk, w.bk);
  out.v = affine(x, w.wv, w.bv);

  const Index m = x.rows();
  const Index d = c.head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  out.avg_attention.resize(m, c.hidden_dim);
  if (attention_scores) attention_scores->clear();
  for (Index h = 0; h < c.num_heads; ++h) {
    const auto qh = out.q.middleCols(h * d, d);
    const auto kh = out.k.middleCols(h * d, d);
    const auto vh = out.v.middleCols(h * d, d);
    Matrix scores = row_softmax(matmul(qh, kh.transpose()) * scale);
    out.avg_attention.middleCols(h * d, d).noalias() = scores * vh;
    if (attention_scores) attention_scores->push_back(std::move(scores));
  }

  const Matrix attn_out =
      layer_norm(x + affine(out.avg_attention, w.wo, w.bo), w.attn_ln_gamma, w.attn_ln_beta,
                 c.layer_norm_eps);
  const Matrix ffn = affine(gelu(affine(attn_out, w.w1, w.b1)), w.w2, w.b2);
  out.layer_out = layer_norm(attn_out + ffn, w.ffn_ln_gamma, w.ffn_ln_beta, c.layer_norm_eps);
  return out;
}

CaptureSet forward_instrumented(std::span<const TokenId> token_ids, const WeightStore& store) {
  CaptureSet captures;
  captures.embedding = embed(token_ids, store);
  const Index layers = store.config().num_layers;
  captures.layers.reserve(static_cast<std::size_t>(layers));
  for (Index i = 0; i < layers; ++i) {
    const Matrix& input = i == 0 ? captures.embedding : captures.layers.back().layer_out;
    captures.layers.push_back(attention_layer(input, i, store));
  }
  return captures;
}

void write_capture_set(const std::filesystem::path& path, const CaptureSet& captures,
                       std::span<const TokenId> token_ids) {
  RawContainer raw;
  raw.metadata = {{"num_layers", captures.layers.size()},
                  {"token_ids", std::vector<TokenId>(token_ids.begin(), token_ids.end())}};
  for (Index id = 0; id < captures.size(); ++id) {
    const Position p = Position::from_id(id);
    raw.tensors.emplace(p.label(), to_raw_tensor(captures.at(p)));
  }
  write_container(path, raw);
}

CaptureSet read_capture_set(const std::filesystem::path& path) {
  const RawContainer raw = read_container(path);
  const auto layers = raw.metadata.at("num_layers").get<Index>();
  auto load = [&](const Position& p) {
    const RawTensor& t = raw.tensors.at(p.label());
    return Matrix(Eigen::Map<const Matrix>(t.values.data(), t.shape.at(0), t.shape.at(1)));
  };
  CaptureSet captures;
  captures.embedding = load(Position::embedding());
  for (Index i = 0; i < layers; ++i) {
    captures.layers.push_back({load(Position::at(PositionKind::kQuery, i)),
                               load(Position::at(PositionKind::kKey, i)),
                               load(Position::at(PositionKind::kValue, i)),
                               load(Position::at(PositionKind::kAvgAttention, i)),
                               load(Position::at(PositionKind::kLayerOutput, i))});
  }
  return captures;
}

}  // namespace genderbias
