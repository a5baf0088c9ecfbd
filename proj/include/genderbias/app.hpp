#pragma once

// Subcommand implementations behind the command-line tool.

#include "genderbias/bias.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace genderbias {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitModel = 3,
  kExitAnalysis = 4,
};

struct RunConfig {
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> vocab;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> records;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> occupations;
  std::optional<std::filesystem::path> swap_dict;
  std::optional<std::filesystem::path> dump_captures;
  ScoreOrientation orientation = ScoreOrientation::kRow;
  std::size_t token_cap = 128;
  std::size_t workers = 1;
  std::optional<std::size_t> limit;
  std::optional<std::uint64_t> sample_seed;
};

/// Raised for missing or unreadable inputs before any work starts.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int cmd_filter(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_probe(const RunConfig& config, const std::string& sentence, std::ostream& out,
              std::ostream& err);

/// Sentences chosen by --limit: the first N, or a seeded sample kept in id order.
std::vector<SentenceRecord> select_sentences(std::vector<SentenceRecord> records,
                                             std::optional<std::size_t> limit,
                                             std::optional<std::uint64_t> seed);

/// Analysis of many sentences across workers, sorted by (sentence, position, head).
struct AnalysisRun {
  std::vector<BiasRecord> records;
  std::uint64_t analyzed = 0;
  std::map<std::string, std::uint64_t> skipped;  // by rejection label
};

AnalysisRun run_analysis(const WeightStore& store, const Vocab& vocab, const Lexicons& lexicons,
                         const std::vector<SentenceRecord>& sentences, std::size_t token_cap,
                         std::size_t workers, ScoreOrientation orientation);

}  // namespace genderbias
