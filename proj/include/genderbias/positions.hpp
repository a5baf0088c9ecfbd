#pragma once

// Detection positions: the embedding output, then for each layer the query,
// key and value projections, the averaged attention (concatenated head
// contexts) and the layer output.
//
// Ids run 0 (embedding) then 1 + 5 * layer + slot. Labels follow the
// Emb / L<n>Q / L<n>K / L<n>V / L<n>A / L<n>Z convention with 1-based layers.

#include "genderbias/tensor_ops.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace genderbias {

enum class PositionKind { kEmbedding, kQuery, kKey, kValue, kAvgAttention, kLayerOutput };

struct Position {
  PositionKind kind = PositionKind::kEmbedding;
  Index layer = 0;  // ignored for the embedding position

  static Position embedding() { return {}; }
  static Position at(PositionKind kind, Index layer) { return {kind, layer}; }
  static Position from_id(Index id);

  Index id() const;
  std::string label() const;
  static std::optional<Position> parse(std::string_view label);

  bool operator==(const Position& o) const { return id() == o.id(); }
};

inline Index num_positions(Index num_layers) { return 1 + 5 * num_layers; }

}  // namespace genderbias
