#include "genderbias/bias.hpp"

#include <cmath>

namespace genderbias {

const char* to_string(Rejection r) {
  switch (r) {
    case Rejection::kNoMale: return "no-male";
    case Rejection::kNoFemale: return "no-female";
    case Rejection::kNoOccupation: return "no-occupation";
    case Rejection::kTooLong: return "too-long";
    case Rejection::kSwapMisaligned: return "swap-misaligned";
  }
  return "unknown";
}

const char* to_string(ScoreOrientation o) {
  return o == ScoreOrientation::kRow ? "row" : "col";
}

ScoreOrientation parse_orientation(const std::string& s) {
  if (s == "row") return ScoreOrientation::kRow;
  if (s == "col" || s == "column") return ScoreOrientation::kColumn;
  throw std::invalid_argument("score orientation must be 'row' or 'col', got '" + s + "'");
}

OrRejection<GenderIndexSet> find_gender_indices(const TokenizedSentence& ts,
                                                const Lexicons& lexicons) {
  GenderIndexSet g;
  bool has_occupation = false;
  for (std::size_t w = 0; w < ts.words.size(); ++w) {
    const std::string& word = ts.words[w];
    const std::size_t first_token = ts.alignment[w].begin;
    if (lexicons.is_male(word)) {
      g.male_token_indices.push_back(first_token);
    } else if (lexicons.is_female(word)) {
      g.female_token_indices.push_back(first_token);
    } else if (lexicons.is_occupation(word)) {
      g.occupation_token_index = first_token;
      g.occupation_word = word;
      has_occupation = true;
    }
  }
  if (g.male_token_indices.empty()) return Rejection::kNoMale;
  if (g.female_token_indices.empty()) return Rejection::kNoFemale;
  if (!has_occupation) return Rejection::kNoOccupation;
  return g;
}

std::vector<Matrix> detector_scores(const Matrix& x, Index num_heads) {
  if (num_heads <= 0 || x.cols() % num_heads != 0) {
    throw ShapeError("detector_scores: width " + std::to_string(x.cols()) +
                     " is not divisible by " + std::to_string(num_heads) + " heads");
  }
  const Index d = x.cols() / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Matrix> scores;
  scores.reserve(static_cast<std::size_t>(num_heads));
  for (Index h = 0; h < num_heads; ++h) {
    const auto slice = x.middleCols(h * d, d);
    scores.push_back(row_softmax(matmul(slice, slice.transpose()) * scale));
  }
  return scores;
}

Tendencies tendencies(const Matrix& scores, const GenderIndexSet& g, ScoreOrientation orientation) {
  const auto k = static_cast<Index>(g.occupation_token_index);
  auto score = [&](std::size_t pronoun) {
    const auto p = static_cast<Index>(pronoun);
    return orientation == ScoreOrientation::kRow ? scores(k, p) : scores(p, k);
  };
  Tendencies t;
  for (std::size_t i : g.male_token_indices) t.male += score(i);
  for (std::size_t j : g.female_token_indices) t.female += score(j);
  return t;
}

double sentence_bias(double t_male, double t_female) {
  const double norm = std::sqrt(t_male * t_male + t_female * t_female);
  if (norm == 0.0) throw std::domain_error("sentence_bias: both tendencies are zero");
  const double v_male = t_male / norm;
  const double v_female = t_female / norm;
  return v_male - v_female;
}

OrRejection<AnalysisInput> prepare_analysis(const SentenceRecord& record, const Vocab& vocab,
                                            const Lexicons& lexicons, std::size_t max_length) {
  AnalysisInput in;
  in.sentence_id = record.id;
  try {
    in.original = encode_with_alignment(record.text, vocab, max_length);
    in.swapped = encode_with_alignment(record.swapped_text, vocab, max_length);
  } catch (const SentenceTooLong&) {
    return Rejection::kTooLong;
  }
  if (in.original.length() != in.swapped.length() ||
      in.original.alignment != in.swapped.alignment ||
      swap_gender(in.original.words, lexicons.swap) != in.swapped.words) {
    return Rejection::kSwapMisaligned;
  }
  auto g = find_gender_indices(in.original, lexicons);
  if (auto* r = std::get_if<Rejection>(&g)) return *r;
  auto g_swap = find_gender_indices(in.swapped, lexicons);
  if (auto* r = std::get_if<Rejection>(&g_swap)) return *r;
  in.original_indices = std::get<GenderIndexSet>(std::move(g));
  in.swapped_indices = std::get<GenderIndexSet>(std::move(g_swap));
  if (in.original_indices.occupation_token_index != in.swapped_indices.occupation_token_index) {
    return Rejection::kSwapMisaligned;
  }
  return in;
}

std::vector<BiasRecord> analyze_captures(std::uint64_t sentence_id, const CaptureSet& original,
                                         const CaptureSet& swapped, const GenderIndexSet& g,
                                         const GenderIndexSet& g_swap, Index num_heads,
                                         ScoreOrientation orientation) {
  if (original.size() != swapped.size()) {
    throw std::invalid_argument("analyze_captures: capture sets differ in position count");
  }
  std::vector<BiasRecord> records;
  records.reserve(static_cast<std::size_t>(original.size() * num_heads));
  for (Index id = 0; id < original.size(); ++id) {
    const Position p = Position::from_id(id);
    const auto scores = detector_scores(original.at(p), num_heads);
    const auto scores_swap = detector_scores(swapped.at(p), num_heads);
    for (Index h = 0; h < num_heads; ++h) {
      const auto t = tendencies(scores[static_cast<std::size_t>(h)], g, orientation);
      const auto ts = tendencies(scores_swap[static_cast<std::size_t>(h)], g_swap, orientation);
      BiasRecord r;
      r.sentence_id = sentence_id;
      r.position = id;
      r.head = h;
      r.t_male = t.male;
      r.t_female = t.female;
      r.t_male_swap = ts.male;
      r.t_female_swap = ts.female;
      r.bias = sentence_bias(t.male, t.female);
      r.bias_swap = sentence_bias(ts.male, ts.female);
      r.degree = degree_biased(r.bias, r.bias_swap);
      records.push_back(r);
    }
  }
  return records;
}

std::vector<BiasRecord> analyze_sentence(const WeightStore& store, const AnalysisInput& input,
                                         ScoreOrientation orientation) {
  const CaptureSet original = forward_instrumented(input.original, store);
  const CaptureSet swapped = forward_instrumented(input.swapped, store);
  return analyze_captures(input.sentence_id, original, swapped, input.original_indices,
                          input.swapped_indices, store.config().num_heads, orientation);
}

}  // namespace genderbias
