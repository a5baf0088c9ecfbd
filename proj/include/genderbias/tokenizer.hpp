#pragma once

// Uncased BERT preprocessing: basic tokenization followed by greedy
// longest-match-first WordPiece, keeping a word -> token-span alignment.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace genderbias {

using TokenId = std::int32_t;

class VocabError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SentenceTooLong : public std::length_error {
 public:
  SentenceTooLong(std::size_t tokens, std::size_t limit);
  std::size_t tokens() const noexcept { return tokens_; }

 private:
  std::size_t tokens_;
};

class Vocab {
 public:
  /// Line number is the id. Throws VocabError on duplicates or missing specials.
  explicit Vocab(std::vector<std::string> tokens);

  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }

  TokenId cls_id() const noexcept { return cls_; }
  TokenId sep_id() const noexcept { return sep_; }
  TokenId unk_id() const noexcept { return unk_; }
  TokenId pad_id() const noexcept { return pad_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  TokenId cls_ = 0, sep_ = 0, unk_ = 0, pad_ = 0;
};

Vocab load_vocab(const std::filesystem::path& path);

/// A basic-tokenized word and the byte range it came from in the source text.
struct WordSpan {
  std::string word;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<WordSpan> basic_tokenize_spans(std::string_view text);
std::vector<std::string> basic_tokenize(std::string_view text);

inline constexpr std::size_t kMaxWordChars = 100;

std::vector<TokenId> wordpiece(std::string_view word, const Vocab& vocab);

/// Half-open range of token positions covered by one word.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const TokenSpan&) const = default;
};

struct TokenizedSentence {
  std::string text;
  std::vector<std::string> words;
  std::vector<TokenId> token_ids;      // [CLS] ... [SEP]
  std::vector<TokenSpan> alignment;    // one per word
  std::vector<std::size_t> word_offsets;  // byte offset of each word in `text`

  std::size_t length() const noexcept { return token_ids.size(); }
};

/// `max_length` bounds the full sequence including [CLS] and [SEP].
TokenizedSentence encode_with_alignment(std::string_view text, const Vocab& vocab,
                                        std::size_t max_length);

/// Joins a word's sub-tokens back together with the "##" markers removed.
std::string detokenize_span(const TokenizedSentence& ts, std::size_t word_index,
                            const Vocab& vocab);

namespace utf8 {

/// Decodes with U+FFFD substituted for malformed sequences.
std::u32string decode(std::string_view text, std::size_t* invalid_count = nullptr);
void append(std::string& out, char32_t cp);
/// Returns a copy with malformed sequences replaced; counts replacements.
std::string sanitize(std::string_view text, std::size_t* invalid_count = nullptr);

}  // namespace utf8

}  // namespace genderbias
