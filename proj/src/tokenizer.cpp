#include "genderbias/tokenizer.hpp"

#include <array>
#include <fstream>

namespace genderbias {

SentenceTooLong::SentenceTooLong(std::size_t tokens, std::size_t limit)
    : std::length_error("sentence has " + std::to_string(tokens) + " tokens, limit is " +
                        std::to_string(limit)),
      tokens_(tokens) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw VocabError("duplicate vocabulary entry '" + tokens_[i] + "' at line " +
                       std::to_string(i + 1));
    }
  }
  auto special = [&](const char* name) {
    const auto id = find(name);
    if (!id) throw VocabError(std::string("vocabulary lacks special token ") + name);
    return *id;
  };
  cls_ = special("[CLS]");
  sep_ = special("[SEP]");
  unk_ = special("[UNK]");
  pad_ = special("[PAD]");
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Vocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw VocabError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  // A trailing newline does not introduce an extra empty token.
  return Vocab(std::move(tokens));
}

namespace utf8 {

namespace {

struct Decoded {
  char32_t cp;
  std::size_t length;
  bool valid;
};

Decoded decode_one(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1, true};
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return {0xFFFD, 1, false};
  }
  for (std::size_t k = 1; k < len; ++k) {
    if (i + k >= s.size() || (static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return {0xFFFD, k, false};
    cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return {0xFFFD, 1, false};
  return {cp, len, true};
}

}  // namespace

std::u32string decode(std::string_view text, std::size_t* invalid_count) {
  std::u32string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto d = decode_one(text, i);
    if (!d.valid && invalid_count) ++*invalid_count;
    out.push_back(d.cp);
    i += d.length;
  }
  return out;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string sanitize(std::string_view text, std::size_t* invalid_count) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto d = decode_one(text, i);
    if (d.valid) {
      out.append(text.substr(i, d.length));
    } else {
      if (invalid_count) ++*invalid_count;
      append(out, 0xFFFD);
    }
    i += d.length;
  }
  return out;
}

}  // namespace utf8

namespace {

bool is_whitespace(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x00A0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

// Dropped entirely: NUL, the replacement character, and control characters.
bool is_dropped(char32_t cp) {
  if (cp == 0 || cp == 0xFFFD) return true;
  if (is_whitespace(cp)) return false;
  return cp < 0x20 || (cp >= 0x7F && cp < 0xA0) || cp == 0x200B || cp == 0xFEFF;
}

bool is_punctuation(char32_t cp) {
  if ((cp >= 33 && cp <= 47) || (cp >= 58 && cp <= 64) || (cp >= 91 && cp <= 96) ||
      (cp >= 123 && cp <= 126)) {
    return true;
  }
  switch (cp) {
    case 0x00A1: case 0x00A7: case 0x00AB: case 0x00B6: case 0x00B7: case 0x00BB: case 0x00BF:
      return true;
    default:
      break;
  }
  return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
         (cp >= 0xFF01 && cp <= 0xFF0F);
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0x2A700 && cp <= 0x2B73F) ||
         (cp >= 0x2B740 && cp <= 0x2B81F) || (cp >= 0x2B820 && cp <= 0x2CEAF) ||
         (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x2F800 && cp <= 0x2FA1F);
}

bool is_combining_mark(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF) ||
         (cp >= 0xFE20 && cp <= 0xFE2F);
}

// Base letters (already lowercased) of U+00C0..U+00FF after canonical decomposition;
// letters without a decomposition map to their lowercase form.
constexpr std::array<char32_t, 64> kLatin1Base = {
    U'a', U'a', U'a', U'a', U'a', U'a', 0x00E6, U'c', U'e', U'e', U'e', U'e', U'i', U'i', U'i', U'i',
    0x00F0, U'n', U'o', U'o', U'o', U'o', U'o', 0x00D7, 0x00F8, U'u', U'u', U'u', U'u', U'y', 0x00FE, 0x00DF,
    U'a', U'a', U'a', U'a', U'a', U'a', 0x00E6, U'c', U'e', U'e', U'e', U'e', U'i', U'i', U'i', U'i',
    0x00F0, U'n', U'o', U'o', U'o', U'o', U'o', 0x00F7, 0x00F8, U'u', U'u', U'u', U'u', U'y', 0x00FE, U'y'};

// U+0100..U+017F, one entry per code point; '*' marks letters without a canonical
// decomposition, which are only lowercased.
constexpr std::string_view kLatinExtABase =
    "aaaaaaccccccccdd" "**eeeeeeeeeegggg" "gggghh**iiiiiiii" "i***jjkk*llllll*"
    "***nnnnnn***oooo" "oo**rrrrrrssssss" "sstttt**uuuuuuuu" "uuuuwwyyyzzzzzz*";

// Lowercases and strips accents, returning zero when the code point vanishes.
char32_t normalize(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if (is_combining_mark(cp)) return 0;
  if (cp >= 0x00C0 && cp <= 0x00FF) return kLatin1Base[cp - 0x00C0];
  if (cp >= 0x0100 && cp <= 0x017F) {
    const char base = kLatinExtABase[cp - 0x0100];
    if (base != '*') return static_cast<char32_t>(base);
    switch (cp) {
      case 0x0110: case 0x0126: case 0x0132: case 0x013F: case 0x0141: case 0x014A:
      case 0x0152: case 0x0166:
        return cp + 1;
      default:
        return cp;
    }
  }
  if (cp >= 0x0391 && cp <= 0x03A9) return cp + 32;  // Greek capitals
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 32;  // Cyrillic capitals
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 80;
  return cp;
}

}  // namespace

std::vector<WordSpan> basic_tokenize_spans(std::string_view text) {
  std::vector<WordSpan> out;
  WordSpan current;
  bool open = false;
  auto flush = [&] {
    if (open && !current.word.empty()) out.push_back(current);
    current = WordSpan{};
    open = false;
  };
  auto single = [&](char32_t cp, std::size_t begin, std::size_t end) {
    flush();
    WordSpan w{{}, begin, end};
    utf8::append(w.word, cp);
    out.push_back(std::move(w));
  };

  for (std::size_t i = 0; i < text.size();) {
    const std::size_t begin = i;
    std::size_t invalid = 0;
    // Decode exactly one code point starting at i.
    std::size_t len = 1;
    const auto lead = static_cast<unsigned char>(text[i]);
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    auto decoded = utf8::decode(text.substr(i, len), &invalid);
    char32_t cp = decoded.empty() ? 0xFFFD : decoded.front();
    if (invalid != 0) {
      cp = 0xFFFD;
      len = 1;
    }
    i += len;
    const std::size_t end = i;

    if (is_dropped(cp)) continue;
    if (is_whitespace(cp)) {
      flush();
      continue;
    }
    if (is_cjk(cp)) {
      single(cp, begin, end);
      continue;
    }
    const char32_t norm = normalize(cp);
    if (norm == 0) {
      if (open) current.end = end;
      continue;
    }
    if (is_punctuation(norm)) {
      single(norm, begin, end);
      continue;
    }
    if (!open) {
      open = true;
      current.begin = begin;
    }
    utf8::append(current.word, norm);
    current.end = end;
  }
  flush();
  return out;
}

std::vector<std::string> basic_tokenize(std::string_view text) {
  std::vector<std::string> words;
  for (auto& span : basic_tokenize_spans(text)) words.push_back(std::move(span.word));
  return words;
}

std::vector<TokenId> wordpiece(std::string_view word, const Vocab& vocab) {
  const std::u32string chars = utf8::decode(word);
  if (chars.empty()) return {};
  if (chars.size() > kMaxWordChars) return {vocab.unk_id()};

  std::vector<TokenId> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < chars.size()) {
    std::size_t end = chars.size();
    std::optional<TokenId> match;
    while (start < end) {
      candidate.clear();
      if (start > 0) candidate = "##";
      for (std::size_t c = start; c < end; ++c) utf8::append(candidate, chars[c]);
      if ((match = vocab.find(candidate))) break;
      --end;
    }
    if (!match) return {vocab.unk_id()};
    pieces.push_back(*match);
    start = end;
  }
  return pieces;
}

TokenizedSentence encode_with_alignment(std::string_view text, const Vocab& vocab,
                                        std::size_t max_length) {
  TokenizedSentence ts;
  ts.text = std::string(text);
  ts.token_ids.push_back(vocab.cls_id());
  for (auto& span : basic_tokenize_spans(text)) {
    const auto pieces = wordpiece(span.word, vocab);
    const std::size_t begin = ts.token_ids.size();
    ts.token_ids.insert(ts.token_ids.end(), pieces.begin(), pieces.end());
    ts.alignment.push_back({begin, ts.token_ids.size()});
    ts.word_offsets.push_back(span.begin);
    ts.words.push_back(std::move(span.word));
  }
  ts.token_ids.push_back(vocab.sep_id());
  if (ts.token_ids.size() > max_length) throw SentenceTooLong(ts.token_ids.size(), max_length);
  return ts;
}

std::string detokenize_span(const TokenizedSentence& ts, std::size_t word_index,
                            const Vocab& vocab) {
  std::string out;
  const TokenSpan span = ts.alignment.at(word_index);
  for (std::size_t t = span.begin; t < span.end; ++t) {
    std::string_view piece = vocab.token(ts.token_ids[t]);
    if (piece.starts_with("##")) piece.remove_prefix(2);
    out.append(piece);
  }
  return out;
}

}  // namespace genderbias
