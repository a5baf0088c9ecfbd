#include "genderbias/lexicon.hpp"

#include "genderbias/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace genderbias {

namespace {

constexpr std::string_view kBuiltinSwapDictionary = R"(# male    female   role
he        she
himself   herself
him       her      objective
his       her      possessive
his       hers
)";

// Words after "her" that mark it as an object pronoun rather than a determiner.
const std::unordered_set<std::string_view>& objective_followers() {
  static const std::unordered_set<std::string_view> words = {
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "all", "both",
      "and", "or", "but", "nor", "so", "yet", "if", "because", "since", "although", "though",
      "while", "when", "whenever", "where", "after", "before", "until", "unless", "than",
      "then", "as", "once", "whether",
      "to", "in", "into", "on", "onto", "at", "by", "for", "from", "of", "off", "with",
      "without", "about", "above", "across", "against", "along", "among", "around",
      "behind", "below", "beneath", "beside", "between", "beyond", "during", "except",
      "inside", "near", "outside", "over", "past", "through", "throughout", "toward",
      "towards", "under", "upon", "within", "up", "down", "out", "away", "back", "again",
      "is", "was", "are", "were", "be", "been", "being", "am", "has", "had", "have", "do",
      "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might",
      "must", "said", "says", "told", "asked", "how", "what", "who", "whom", "why", "which",
      "he", "she", "it", "they", "we", "i", "you", "him", "her", "his", "hers", "them",
      "us", "me", "not", "never", "too", "also", "very", "just", "only", "even", "still",
      "well", "much", "more", "most", "here", "there", "now", "today", "yesterday",
      "tomorrow", "later", "soon", "first", "last", "s", "t"};
  return words;
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Applies the capitalization pattern of `original` to `replacement`.
std::string match_case(std::string_view original, const std::string& replacement) {
  const bool has_alpha = std::any_of(original.begin(), original.end(),
                                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
  const bool all_upper =
      has_alpha && original.size() > 1 &&
      std::none_of(original.begin(), original.end(),
                   [](char c) { return std::islower(static_cast<unsigned char>(c)); });
  std::string out = replacement;
  if (all_upper) {
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  } else if (!original.empty() && std::isupper(static_cast<unsigned char>(original.front())) &&
             !out.empty()) {
    out.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(out.front())));
  }
  return out;
}

}  // namespace

SwapDictionary SwapDictionary::parse(std::istream& in) {
  struct Line {
    std::string male, female, role;
    int number;
  };
  std::vector<Line> lines;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::istringstream fields(strip_comment(raw));
    Line line{{}, {}, {}, number};
    if (!(fields >> line.male)) continue;
    if (!(fields >> line.female)) {
      throw LexiconError("swap dictionary line " + std::to_string(number) + " has one column");
    }
    fields >> line.role;
    std::string extra;
    if (fields >> extra) {
      throw LexiconError("swap dictionary line " + std::to_string(number) + " has extra columns");
    }
    line.male = to_lower_ascii(line.male);
    line.female = to_lower_ascii(line.female);
    if (!line.role.empty() && line.role != "objective" && line.role != "possessive") {
      throw LexiconError("swap dictionary line " + std::to_string(number) + ": unknown role '" +
                         line.role + "'");
    }
    lines.push_back(std::move(line));
  }

  SwapDictionary dict;
  std::unordered_map<std::string, std::vector<const Line*>> by_female;
  for (const Line& line : lines) {
    dict.male_.insert(line.male);
    dict.female_.insert(line.female);
    dict.male_to_female_.try_emplace(line.male, line.female);
    by_female[line.female].push_back(&line);
  }
  for (const auto& w : dict.male_) {
    if (dict.female_.contains(w)) {
      throw LexiconError("swap dictionary word '" + w + "' is listed as both male and female");
    }
  }
  for (const auto& [female, entries] : by_female) {
    if (entries.size() == 1) {
      dict.female_to_male_.emplace(female, entries.front()->male);
      continue;
    }
    Ambiguous amb;
    for (const Line* line : entries) {
      if (line->role == "objective") amb.objective = line->male;
      if (line->role == "possessive") amb.possessive = line->male;
    }
    if (entries.size() != 2 || amb.objective.empty() || amb.possessive.empty()) {
      throw LexiconError("female word '" + female +
                         "' appears on several lines without one objective and one possessive role");
    }
    dict.ambiguous_female_.emplace(female, std::move(amb));
  }
  if (dict.male_.empty()) throw LexiconError("swap dictionary is empty");
  return dict;
}

SwapDictionary SwapDictionary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LexiconError("cannot open swap dictionary " + path.string());
  return parse(in);
}

SwapDictionary SwapDictionary::builtin() {
  std::istringstream in{std::string(kBuiltinSwapDictionary)};
  return parse(in);
}

std::optional<Gender> SwapDictionary::gender_of(std::string_view word) const {
  const std::string w(word);
  if (male_.contains(w)) return Gender::kMale;
  if (female_.contains(w)) return Gender::kFemale;
  return std::nullopt;
}

bool reads_as_possessive_target(std::string_view next) {
  if (next.empty()) return false;
  if (!std::all_of(next.begin(), next.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || (static_cast<unsigned char>(c) & 0x80);
      })) {
    return false;
  }
  return !objective_followers().contains(next);
}

std::optional<std::string> SwapDictionary::swap_at(const std::vector<std::string>& words,
                                                   std::size_t index) const {
  const std::string& w = words.at(index);
  if (auto it = male_to_female_.find(w); it != male_to_female_.end()) return it->second;
  if (auto it = female_to_male_.find(w); it != female_to_male_.end()) return it->second;
  if (auto it = ambiguous_female_.find(w); it != ambiguous_female_.end()) {
    const std::string_view next = index + 1 < words.size() ? std::string_view(words[index + 1]) : "";
    return reads_as_possessive_target(next) ? it->second.possessive : it->second.objective;
  }
  return std::nullopt;
}

std::vector<std::string> swap_gender(const std::vector<std::string>& words,
                                     const SwapDictionary& dict) {
  std::vector<std::string> out = words;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (auto swapped = dict.swap_at(words, i)) out[i] = std::move(*swapped);
  }
  return out;
}

std::string swap_gender_text(std::string_view text, const SwapDictionary& dict) {
  const auto spans = basic_tokenize_spans(text);
  std::vector<std::string> words;
  words.reserve(spans.size());
  for (const auto& s : spans) words.push_back(s.word);

  std::string out;
  out.reserve(text.size() + 8);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto swapped = dict.swap_at(words, i);
    if (!swapped) continue;
    out.append(text.substr(cursor, spans[i].begin - cursor));
    out.append(match_case(text.substr(spans[i].begin, spans[i].end - spans[i].begin), *swapped));
    cursor = spans[i].end;
  }
  out.append(text.substr(cursor));
  return out;
}

std::unordered_set<std::string> parse_word_list(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(strip_comment(line));
    std::string word;
    if (fields >> word) words.insert(to_lower_ascii(word));
  }
  return words;
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LexiconError("cannot open word list " + path.string());
  auto words = parse_word_list(in);
  if (words.empty()) throw LexiconError("word list " + path.string() + " is empty");
  return words;
}

const std::vector<std::string>& builtin_occupations() {
  static const std::vector<std::string> occupations = {
      "driver",    "supervisor", "janitor",      "cook",       "mover",     "laborer",
      "chief",     "developer",  "carpenter",    "manager",    "lawyer",    "farmer",
      "salesperson", "physician", "guard",       "analyst",    "mechanic",  "sheriff",
      "ceo",       "attendant",  "cashier",      "teacher",    "nurse",     "assistant",
      "secretary", "auditor",    "cleaner",      "receptionist", "clerk",   "counselor",
      "designer",  "hairdresser", "writer",      "housekeeper", "baker",    "accountant",
      "editor",    "librarian",  "tailor"};
  return occupations;
}

Lexicons Lexicons::builtin() {
  Lexicons lex;
  lex.occupations.insert(builtin_occupations().begin(), builtin_occupations().end());
  return lex;
}

Lexicons Lexicons::load(const std::optional<std::filesystem::path>& swap_dictionary,
                        const std::optional<std::filesystem::path>& occupations) {
  Lexicons lex = builtin();
  if (swap_dictionary) lex.swap = SwapDictionary::load(*swap_dictionary);
  if (occupations) lex.occupations = load_word_list(*occupations);
  lex.validate();
  return lex;
}

void Lexicons::validate() const {
  for (const auto& occ : occupations) {
    if (swap.gender_of(occ)) {
      throw LexiconError("occupation '" + occ + "' is also a gendered word");
    }
  }
}

}  // namespace genderbias
