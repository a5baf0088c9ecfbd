#pragma once

// Gendered-word and occupation lexicons plus the gender swap dictionary.
//
// Swap dictionary file: one pair per line, `<male> <female> [role]`, '#'
// starts a comment. A male word maps to the female word of the first line
// that lists it. A female word listed on several lines is ambiguous; those
// lines carry a role tag (`objective` or `possessive`) and the choice is made
// from the following word.

#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace genderbias {

class LexiconError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Gender { kMale, kFemale };

class SwapDictionary {
 public:
  static SwapDictionary parse(std::istream& in);
  static SwapDictionary load(const std::filesystem::path& path);
  /// he/she, himself/herself, him/her, his/her, his/hers.
  static SwapDictionary builtin();

  /// Opposite-gender form of words[index], or nullopt when the word is not gendered.
  /// Inputs are basic-tokenized (lowercase) words.
  std::optional<std::string> swap_at(const std::vector<std::string>& words, std::size_t index) const;

  std::optional<Gender> gender_of(std::string_view word) const;
  const std::set<std::string>& male_words() const { return male_; }
  const std::set<std::string>& female_words() const { return female_; }

 private:
  struct Ambiguous {
    std::string objective;
    std::string possessive;
  };

  std::unordered_map<std::string, std::string> male_to_female_;
  std::unordered_map<std::string, std::string> female_to_male_;
  std::unordered_map<std::string, Ambiguous> ambiguous_female_;
  std::set<std::string> male_;
  std::set<std::string> female_;
};

/// True when `next` (the word after an ambiguous "her") reads as the noun it modifies.
bool reads_as_possessive_target(std::string_view next);

std::vector<std::string> swap_gender(const std::vector<std::string>& words,
                                     const SwapDictionary& dict);

/// Swaps gendered words in place within the original text, keeping spacing
/// and the capitalization pattern of each replaced word.
std::string swap_gender_text(std::string_view text, const SwapDictionary& dict);

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);
std::unordered_set<std::string> parse_word_list(std::istream& in);

/// The 40-occupation list of the WinoBias resource, single-word entries only.
const std::vector<std::string>& builtin_occupations();

struct Lexicons {
  SwapDictionary swap = SwapDictionary::builtin();
  std::unordered_set<std::string> occupations;

  static Lexicons builtin();
  static Lexicons load(const std::optional<std::filesystem::path>& swap_dictionary,
                       const std::optional<std::filesystem::path>& occupations);

  bool is_male(std::string_view w) const { return swap.gender_of(w) == Gender::kMale; }
  bool is_female(std::string_view w) const { return swap.gender_of(w) == Gender::kFemale; }
  bool is_occupation(std::string_view w) const { return occupations.contains(std::string(w)); }

  /// Throws LexiconError when an occupation is also a gendered word.
  void validate() const;
};

}  // namespace genderbias
