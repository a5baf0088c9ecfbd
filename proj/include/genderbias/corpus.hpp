#pragma once

// Corpus scanning: sentence segmentation and the pronoun/occupation filter.
//
// Input is pre-extracted plain text. A line break always ends a sentence, so
// one-document-per-line dumps and raw paragraphs both work.

#include "genderbias/bias.hpp"
#include "genderbias/lexicon.hpp"
#include "genderbias/records.hpp"
#include "genderbias/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace genderbias {

struct SentenceSpan {
  std::uint64_t offset = 0;  // byte offset of the first character in the corpus
  std::string text;

  bool operator==(const SentenceSpan&) const = default;
};

bool is_abbreviation(std::string_view word);

/// Splits one line on . ! ? followed by whitespace and a capital or quote.
std::vector<SentenceSpan> segment_sentences(std::string_view text, std::uint64_t base_offset = 0);

struct SegmentStats {
  std::uint64_t lines = 0;
  std::uint64_t invalid_utf8 = 0;
};

/// Streams `in` line by line; invalid UTF-8 is replaced with U+FFFD and counted.
void for_each_sentence(std::istream& in, const std::function<void(SentenceSpan&&)>& sink,
                       SegmentStats* stats = nullptr);

struct FilterOptions {
  std::size_t token_cap = 128;  // full sequence length including [CLS]/[SEP]
  const Vocab* vocab = nullptr;  // without a vocabulary the cap applies to word count
};

/// Accepts sentences with a male word, a female word and an occupation. The
/// returned record has id and offset zeroed; scan_corpus assigns them.
OrRejection<SentenceRecord> filter_sentence(std::string_view sentence, const Lexicons& lexicons,
                                            const FilterOptions& options = {});

struct ScanSummary {
  std::uint64_t sentences = 0;
  std::uint64_t accepted = 0;
  std::uint64_t invalid_utf8 = 0;
  std::map<std::string, std::uint64_t> rejections;  // by reason label
  std::map<std::string, std::uint64_t> occupations;

  nlohmann::json to_json() const;
};

struct ScanOptions {
  FilterOptions filter;
  std::size_t workers = 1;
};

/// Filters `input`, writing accepted records (sorted by offset, ids assigned
/// in that order) as JSON lines. Output goes to `<output>.partial` first and
/// is renamed only on success.
ScanSummary scan_corpus(const std::filesystem::path& input, const Lexicons& lexicons,
                        const std::filesystem::path& output, const ScanOptions& options);

/// In-memory variant used by scan_corpus.
std::vector<SentenceRecord> filter_corpus(std::istream& in, const Lexicons& lexicons,
                                          const ScanOptions& options, ScanSummary& summary);

}  // namespace genderbias
