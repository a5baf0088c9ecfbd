#pragma once

// Line-delimited JSON record types shared by the filter, the analyzer and
// the reporter.

#include "genderbias/tensor_ops.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace genderbias {

class RecordFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SentenceRecord {
  std::uint64_t id = 0;
  std::string text;
  std::string swapped_text;
  std::string occupation;
  std::uint64_t offset = 0;

  bool operator==(const SentenceRecord&) const = default;
};

/// One (sentence, position, head) sample of the swap-consistency test.
struct BiasRecord {
  std::uint64_t sentence_id = 0;
  Index position = 0;  // Position::id()
  Index head = 0;
  double t_male = 0;
  double t_female = 0;
  double t_male_swap = 0;
  double t_female_swap = 0;
  double bias = 0;
  double bias_swap = 0;
  double degree = 0;

  bool operator==(const BiasRecord&) const = default;
};

/// Sort key used for deterministic output: (sentence_id, position, head).
bool record_order(const BiasRecord& a, const BiasRecord& b);

nlohmann::json to_json(const SentenceRecord& r);
SentenceRecord sentence_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BiasRecord& r);
BiasRecord bias_record_from_json(const nlohmann::json& j);

/// One compact JSON object per line.
std::string to_line(const SentenceRecord& r);
std::string to_line(const BiasRecord& r);

std::vector<SentenceRecord> read_sentence_records(std::istream& in);
std::vector<SentenceRecord> read_sentence_records(const std::filesystem::path& path);
void write_sentence_records(std::ostream& out, const std::vector<SentenceRecord>& records);

std::vector<BiasRecord> read_bias_records(std::istream& in);
std::vector<BiasRecord> read_bias_records(const std::filesystem::path& path);
void write_bias_records(std::ostream& out, const std::vector<BiasRecord>& records);

}  // namespace genderbias
