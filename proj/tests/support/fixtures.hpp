#pragma once

// Shared test fixtures: a seeded tiny encoder, a small WordPiece vocabulary
// covering the test sentences, and temp-file helpers.

#include "genderbias/model.hpp"
#include "genderbias/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace genderbias::testing {

/// 2 layers, 2 heads, hidden 8, intermediate 16.
ModelConfig tiny_config(Index vocab_size, Index max_positions = 64);

/// Weights drawn N(0, scale^2) and rounded to float32 so container round trips are exact.
/// Layer-norm gammas are drawn around 1.
RawContainer make_synthetic_container(const ModelConfig& config, std::uint64_t seed, double scale = 0.5);
WeightStore make_synthetic_store(const ModelConfig& config, std::uint64_t seed, double scale = 0.5);

std::vector<std::string> fixture_vocab_tokens();
Vocab fixture_vocab();

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0);

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// A tiny model, the fixture vocabulary and the accepted fixture sentences on disk.
struct TinyModelFiles {
  std::filesystem::path model;
  std::filesystem::path vocab;
  std::filesystem::path sentences;
};

TinyModelFiles write_tiny_model_files(const std::filesystem::path& dir, std::uint64_t seed);

/// Runs the command-line tool through the shell; returns its exit status.
int run_cli(const std::string& args, std::string* stdout_text = nullptr);

/// One row of tests/data/filter_fixture.tsv. `expected` is "accept" or a rejection label.
struct FilterFixtureRow {
  std::string sentence;
  std::string expected;
  std::string occupation;
  std::string swapped;
};

std::vector<FilterFixtureRow> load_filter_fixture();

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Path of a file under tests/data.
std::filesystem::path data_path(const std::string& name);
/// Path of a file under the repository's data/ directory.
std::filesystem::path repo_data_path(const std::string& name);

}  // namespace genderbias::testing
