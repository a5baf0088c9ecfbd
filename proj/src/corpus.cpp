#include "genderbias/corpus.hpp"

#include "genderbias/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

namespace genderbias {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

bool is_closing(std::string_view rest) {
  return rest.starts_with('"') || rest.starts_with('\'') || rest.starts_with(')') ||
         rest.starts_with("”") || rest.starts_with("’");
}

std::size_t closing_length(std::string_view rest) {
  if (rest.starts_with('"') || rest.starts_with('\'') || rest.starts_with(')')) return 1;
  return 3;  // U+201D / U+2019
}

bool opens_sentence(std::string_view rest) {
  if (rest.empty()) return false;
  const auto c = static_cast<unsigned char>(rest.front());
  if (std::isupper(c) || std::isdigit(c)) return true;
  if (c == '"' || c == '\'' || c == '(' || c == '[') return true;
  if (rest.starts_with("“") || rest.starts_with("‘")) return true;
  // Latin-1 / Latin Extended capitals (U+00C0..U+00DE except U+00D7).
  if (c == 0xC3 && rest.size() > 1) {
    const auto c2 = static_cast<unsigned char>(rest[1]);
    return c2 >= 0x80 && c2 <= 0x9E && c2 != 0x97;
  }
  return false;
}

std::string_view trim(std::string_view s, std::size_t* lead = nullptr) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  if (lead) *lead = b;
  return s.substr(b, e - b);
}

}  // namespace

bool is_abbreviation(std::string_view word) {
  static const std::unordered_set<std::string> known = {
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "vs", "etc", "inc", "ltd",
      "co", "corp", "no", "nos", "vol", "gen", "col", "lt", "sgt", "capt", "cmdr", "adm",
      "rev", "hon", "gov", "sen", "rep", "pres", "messrs", "mme", "mlle", "fr", "bros",
      "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
      "approx", "dept", "est", "fig", "op", "cf", "al", "ca", "univ", "assn", "ave", "blvd"};
  while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
  if (word.empty()) return false;
  std::string lower(word);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower.size() == 1 && std::isalpha(static_cast<unsigned char>(lower[0]))) return true;  // initials
  if (lower.find('.') != std::string::npos) return true;  // u.s, e.g, i.e
  return known.contains(lower);
}

std::vector<SentenceSpan> segment_sentences(std::string_view text, std::uint64_t base_offset) {
  std::vector<SentenceSpan> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    std::size_t lead = 0;
    const auto piece = trim(text.substr(begin, end - begin), &lead);
    if (!piece.empty()) out.push_back({base_offset + begin + lead, std::string(piece)});
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      emit(start, i);
      start = i + 1;
      continue;
    }
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
    while (j < text.size() && is_closing(text.substr(j))) j += closing_length(text.substr(j));
    if (j >= text.size() || !is_space(text[j]) || text[j] == '\n') {
      if (j < text.size() && text[j] == '\n') {
        emit(start, j);
        start = j + 1;
        i = j;
      }
      continue;
    }
    std::size_t k = j;
    while (k < text.size() && is_space(text[k]) && text[k] != '\n') ++k;
    if (k < text.size() && text[k] != '\n' && !opens_sentence(text.substr(k))) continue;
    if (c == '.' && j == i + 1) {
      std::size_t w = i;
      while (w > start && !is_space(text[w - 1])) --w;
      if (is_abbreviation(text.substr(w, i - w))) continue;
    }
    emit(start, j);
    start = j;
    i = j - 1;
  }
  emit(start, text.size());
  return out;
}

void for_each_sentence(std::istream& in, const std::function<void(SentenceSpan&&)>& sink,
                       SegmentStats* stats) {
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    if (stats) ++stats->lines;
    std::size_t invalid = 0;
    std::string clean = utf8::sanitize(line, &invalid);
    if (stats) stats->invalid_utf8 += invalid;
    // Offsets inside a repaired line are approximate (each bad byte became three).
    for (auto& s : segment_sentences(clean, line_offset)) sink(std::move(s));
  }
}

OrRejection<SentenceRecord> filter_sentence(std::string_view sentence, const Lexicons& lexicons,
                                            const FilterOptions& options) {
  const auto words = basic_tokenize(sentence);
  bool male = false, female = false;
  const std::string* occupation = nullptr;
  for (const auto& w : words) {
    if (lexicons.is_male(w)) male = true;
    else if (lexicons.is_female(w)) female = true;
    else if (lexicons.is_occupation(w)) occupation = &w;
  }
  if (!male) return Rejection::kNoMale;
  if (!female) return Rejection::kNoFemale;
  if (!occupation) return Rejection::kNoOccupation;

  SentenceRecord record;
  record.text = std::string(sentence);
  record.swapped_text = swap_gender_text(sentence, lexicons.swap);
  record.occupation = *occupation;

  if (options.vocab) {
    const auto prepared = prepare_analysis(record, *options.vocab, lexicons, options.token_cap);
    if (const auto* r = std::get_if<Rejection>(&prepared)) return *r;
  } else {
    if (words.size() + 2 > options.token_cap) return Rejection::kTooLong;
    if (basic_tokenize(record.swapped_text) != swap_gender(words, lexicons.swap)) {
      return Rejection::kSwapMisaligned;
    }
  }
  return record;
}

nlohmann::json ScanSummary::to_json() const {
  return {{"sentences", sentences},
          {"accepted", accepted},
          {"invalid_utf8", invalid_utf8},
          {"rejections", rejections},
          {"occupations", occupations}};
}

std::vector<SentenceRecord> filter_corpus(std::istream& in, const Lexicons& lexicons,
                                          const ScanOptions& options, ScanSummary& summary) {
  constexpr std::size_t kBatch = 4096;
  std::vector<SentenceRecord> accepted;
  std::vector<SentenceSpan> batch;
  std::vector<OrRejection<SentenceRecord>> results;

  auto drain = [&] {
    results.assign(batch.size(), Rejection::kNoMale);
    parallel_for(batch.size(), options.workers, [&](std::size_t i) {
      results[i] = filter_sentence(batch[i].text, lexicons, options.filter);
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++summary.sentences;
      if (auto* record = std::get_if<SentenceRecord>(&results[i])) {
        record->offset = batch[i].offset;
        accepted.push_back(std::move(*record));
      } else {
        ++summary.rejections[to_string(std::get<Rejection>(results[i]))];
      }
    }
    batch.clear();
  };

  SegmentStats stats;
  for_each_sentence(
      in,
      [&](SentenceSpan&& s) {
        batch.push_back(std::move(s));
        if (batch.size() == kBatch) drain();
      },
      &stats);
  drain();
  summary.invalid_utf8 += stats.invalid_utf8;

  std::stable_sort(accepted.begin(), accepted.end(),
                   [](const SentenceRecord& a, const SentenceRecord& b) { return a.offset < b.offset; });
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    accepted[i].id = i;
    ++summary.occupations[accepted[i].occupation];
  }
  summary.accepted = accepted.size();
  return accepted;
}

ScanSummary scan_corpus(const std::filesystem::path& input, const Lexicons& lexicons,
                        const std::filesystem::path& output, const ScanOptions& options) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus " + input.string());
  ScanSummary summary;
  const auto records = filter_corpus(in, lexicons, options, summary);
  if (in.bad()) throw std::runtime_error("read failed for " + input.string());

  auto partial = output;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create " + partial.string());
    write_sentence_records(out, records);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + partial.string());
  }
  std::filesystem::rename(partial, output);
  return summary;
}

}  // namespace genderbias
