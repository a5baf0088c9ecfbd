#include "genderbias/records.hpp"

#include "genderbias/positions.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

namespace genderbias {

using nlohmann::json;

bool record_order(const BiasRecord& a, const BiasRecord& b) {
  return std::tie(a.sentence_id, a.position, a.head) < std::tie(b.sentence_id, b.position, b.head);
}

json to_json(const SentenceRecord& r) {
  return {{"id", r.id},
          {"text", r.text},
          {"swapped_text", r.swapped_text},
          {"occupation", r.occupation},
          {"offset", r.offset}};
}

SentenceRecord sentence_record_from_json(const json& j) {
  try {
    return SentenceRecord{j.at("id").get<std::uint64_t>(), j.at("text").get<std::string>(),
                          j.at("swapped_text").get<std::string>(),
                          j.at("occupation").get<std::string>(), j.at("offset").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw RecordFormatError(std::string("bad sentence record: ") + e.what());
  }
}

// The position is written by label so record files stay readable.
json to_json(const BiasRecord& r) {
  return {{"sentence_id", r.sentence_id},
          {"position", Position::from_id(r.position).label()},
          {"head", r.head},
          {"t_male", r.t_male},
          {"t_female", r.t_female},
          {"t_male_swap", r.t_male_swap},
          {"t_female_swap", r.t_female_swap},
          {"bias", r.bias},
          {"bias_swap", r.bias_swap},
          {"degree", r.degree}};
}

BiasRecord bias_record_from_json(const json& j) {
  try {
    const auto label = j.at("position").get<std::string>();
    const auto position = Position::parse(label);
    if (!position) throw RecordFormatError("unknown position label '" + label + "'");
    BiasRecord r;
    r.sentence_id = j.at("sentence_id").get<std::uint64_t>();
    r.position = position->id();
    r.head = j.at("head").get<Index>();
    r.t_male = j.at("t_male").get<double>();
    r.t_female = j.at("t_female").get<double>();
    r.t_male_swap = j.at("t_male_swap").get<double>();
    r.t_female_swap = j.at("t_female_swap").get<double>();
    r.bias = j.at("bias").get<double>();
    r.bias_swap = j.at("bias_swap").get<double>();
    r.degree = j.at("degree").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw RecordFormatError(std::string("bad bias record: ") + e.what());
  }
}

std::string to_line(const SentenceRecord& r) { return to_json(r).dump(); }
std::string to_line(const BiasRecord& r) { return to_json(r).dump(); }

namespace {

template <typename Record, typename Parse>
std::vector<Record> read_lines(std::istream& in, Parse parse) {
  std::vector<Record> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw RecordFormatError("line " + std::to_string(number) + ": " + e.what());
    }
    out.push_back(parse(j));
  }
  if (in.bad()) throw RecordFormatError("read failed");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RecordFormatError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<SentenceRecord> read_sentence_records(std::istream& in) {
  return read_lines<SentenceRecord>(in, sentence_record_from_json);
}

std::vector<SentenceRecord> read_sentence_records(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_sentence_records(in);
}

void write_sentence_records(std::ostream& out, const std::vector<SentenceRecord>& records) {
  for (const auto& r : records) out << to_line(r) << '\n';
}

std::vector<BiasRecord> read_bias_records(std::istream& in) {
  return read_lines<BiasRecord>(in, bias_record_from_json);
}

std::vector<BiasRecord> read_bias_records(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_bias_records(in);
}

void write_bias_records(std::ostream& out, const std::vector<BiasRecord>& records) {
  for (const auto& r : records) out << to_line(r) << '\n';
}

}  // namespace genderbias
