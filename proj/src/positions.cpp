#include "genderbias/positions.hpp"

#include <charconv>
#include <stdexcept>

namespace genderbias {

namespace {

constexpr char kSlotLetters[] = {'Q', 'K', 'V', 'A', 'Z'};

}  // namespace

Position Position::from_id(Index id) {
  if (id < 0) throw std::out_of_range("negative position id");
  if (id == 0) return embedding();
  const Index layer = (id - 1) / 5;
  const Index slot = (id - 1) % 5;
  return {static_cast<PositionKind>(slot + 1), layer};
}

Index Position::id() const {
  if (kind == PositionKind::kEmbedding) return 0;
  return 1 + 5 * layer + (static_cast<Index>(kind) - 1);
}

std::string Position::label() const {
  if (kind == PositionKind::kEmbedding) return "Emb";
  return "L" + std::to_string(layer + 1) + kSlotLetters[static_cast<int>(kind) - 1];
}

std::optional<Position> Position::parse(std::string_view label) {
  if (label == "Emb") return embedding();
  if (label.size() < 3 || label.front() != 'L') return std::nullopt;
  const char letter = label.back();
  const std::string_view digits = label.substr(1, label.size() - 2);
  Index layer = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), layer);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || layer < 1) return std::nullopt;
  for (int slot = 0; slot < 5; ++slot) {
    if (kSlotLetters[slot] == letter) return Position{static_cast<PositionKind>(slot + 1), layer - 1};
  }
  return std::nullopt;
}

}  // namespace genderbias
