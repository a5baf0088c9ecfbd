#pragma once

// Gender-swap consistency test on attention scores.
//
// A detector is a multi-head attention score computation with identity
// query/key projections, applied to a captured activation matrix. For the
// occupation token k, the male and female tendencies are the summed scores
// between k and the male / female pronoun tokens. Their L2-normalized
// difference is the sentence bias, and the product of the biases of a
// sentence and its gender-swapped twin is the degree of bias: positive means
// the association survived the swap.

#include "genderbias/encoder.hpp"
#include "genderbias/lexicon.hpp"
#include "genderbias/model.hpp"
#include "genderbias/records.hpp"
#include "genderbias/tensor_ops.hpp"
#include "genderbias/tokenizer.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace genderbias {

enum class Rejection { kNoMale, kNoFemale, kNoOccupation, kTooLong, kSwapMisaligned };

const char* to_string(Rejection r);

struct GenderIndexSet {
  std::vector<std::size_t> male_token_indices;
  std::vector<std::size_t> female_token_indices;
  std::size_t occupation_token_index = 0;
  std::string occupation_word;

  bool operator==(const GenderIndexSet&) const = default;
};

template <typename T>
using OrRejection = std::variant<T, Rejection>;

/// Projects word-level lexicon hits onto token indices. The occupation is the
/// last occupation word; a word split into several pieces contributes its
/// first piece.
OrRejection<GenderIndexSet> find_gender_indices(const TokenizedSentence& ts, const Lexicons& lexicons);

/// Which side of the score matrix the occupation sits on: as the query (read
/// row k) or as the key (read column k).
enum class ScoreOrientation { kRow, kColumn };

const char* to_string(ScoreOrientation o);
ScoreOrientation parse_orientation(const std::string& s);

/// Per head h: softmax(X_h X_h^T / sqrt(d_h)) over the column slice X_h.
std::vector<Matrix> detector_scores(const Matrix& x, Index num_heads);

struct Tendencies {
  double male = 0;
  double female = 0;
};

Tendencies tendencies(const Matrix& scores, const GenderIndexSet& g,
                      ScoreOrientation orientation = ScoreOrientation::kRow);

/// (male - female) / ||(male, female)||. Throws std::domain_error when both are zero.
double sentence_bias(double t_male, double t_female);

inline double degree_biased(double bias_st, double bias_st_swap) { return bias_st * bias_st_swap; }
inline bool is_biased(double degree) { return degree > 0.0; }

/// A sentence and its gender-swapped twin, tokenized and indexed.
struct AnalysisInput {
  std::uint64_t sentence_id = 0;
  TokenizedSentence original;
  TokenizedSentence swapped;
  GenderIndexSet original_indices;
  GenderIndexSet swapped_indices;
};

OrRejection<AnalysisInput> prepare_analysis(const SentenceRecord& record, const Vocab& vocab,
                                            const Lexicons& lexicons, std::size_t max_length);

/// Detector + judgement at every position for a pair of capture sets.
std::vector<BiasRecord> analyze_captures(std::uint64_t sentence_id, const CaptureSet& original,
                                         const CaptureSet& swapped, const GenderIndexSet& g,
                                         const GenderIndexSet& g_swap, Index num_heads,
                                         ScoreOrientation orientation);

/// Forward passes on both sentences, then analyze_captures: positions x heads records.
std::vector<BiasRecord> analyze_sentence(const WeightStore& store, const AnalysisInput& input,
                                         ScoreOrientation orientation = ScoreOrientation::kRow);

}  // namespace genderbias
