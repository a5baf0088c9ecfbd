#include "fixtures.hpp"

#include "genderbias/corpus.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <sys/wait.h>
#include <unistd.h>

namespace genderbias::testing {

ModelConfig tiny_config(Index vocab_size, Index max_positions) {
  ModelConfig c;
  c.hidden_dim = 8;
  c.num_layers = 2;
  c.num_heads = 2;
  c.head_dim = 4;
  c.intermediate_dim = 16;
  c.vocab_size = vocab_size;
  c.max_positions = max_positions;
  c.layer_norm_eps = 1e-12;
  c.validate();
  return c;
}

RawContainer make_synthetic_container(const ModelConfig& config, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RawContainer raw;
  raw.metadata = config.to_metadata();
  for (const auto& spec : canonical_inventory(config)) {
    RawTensor t;
    t.shape = spec.shape;
    const bool is_gamma = spec.name.ends_with("ln.gamma");
    t.values.resize(static_cast<std::size_t>(t.element_count()));
    for (double& v : t.values) {
      const double x = is_gamma ? 1.0 + 0.1 * normal(rng) : scale * normal(rng);
      v = static_cast<double>(static_cast<float>(x));
    }
    raw.tensors.emplace(spec.name, std::move(t));
  }
  return raw;
}

WeightStore make_synthetic_store(const ModelConfig& config, std::uint64_t seed, double scale) {
  return validate_and_build(make_synthetic_container(config, seed, scale));
}

std::vector<std::string> fixture_vocab_tokens() {
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  for (const char* p : {".", ",", "'", "!", "?", ";", ":", "\"", "(", ")", "-"}) tokens.push_back(p);
  for (const char* w :
       {"he", "she", "him", "her", "his", "hers", "himself", "herself", "the", "a", "an", "and",
        "to", "told", "said", "had", "has", "left", "saw", "met", "with", "of", "in", "at", "on",
        "for", "was", "is", "that", "thanked", "smiled", "asked", "friend", "book", "story",
        "hospital", "office", "home", "car", "day", "yesterday", "late", "new", "old",
        "nurse", "doctor", "teacher", "lawyer", "driver", "secretary", "manager", "cook",
        "baker", "clerk", "writer", "editor", "farmer", "cashier", "chief", "guard", "mechanic",
        "librarian", "tailor", "physician", "sheriff", "accountant", "designer", "hairdresser",
        "receptionist", "supervisor", "janitor", "carpenter", "counselor", "play", "##ing",
        "##ed", "##er", "un", "##known"}) {
    tokens.push_back(w);
  }
  for (char c = 'a'; c <= 'z'; ++c) {
    const std::string letter(1, c);
    if (letter != "a") tokens.push_back(letter);
    tokens.push_back("##" + letter);
  }
  for (char c = '0'; c <= '9'; ++c) {
    tokens.push_back(std::string(1, c));
    tokens.push_back("##" + std::string(1, c));
  }
  return tokens;
}

Vocab fixture_vocab() { return Vocab(fixture_vocab_tokens()); }

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("genderbias-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<FilterFixtureRow> load_filter_fixture() {
  std::istringstream in(read_text(data_path("filter_fixture.tsv")));
  std::vector<FilterFixtureRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
      fields.push_back(line.substr(start, tab - start));
    fields.push_back(line.substr(start));
    if (fields.size() != 4) throw std::runtime_error("bad fixture row: " + line);
    rows.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return rows;
}

TinyModelFiles write_tiny_model_files(const std::filesystem::path& dir, std::uint64_t seed) {
  TinyModelFiles files{dir / "model.bin", dir / "vocab.txt", dir / "sentences.jsonl"};
  const auto tokens = fixture_vocab_tokens();
  write_container(files.model, make_synthetic_container(tiny_config(static_cast<Index>(tokens.size())), seed));
  std::string vocab;
  for (const auto& t : tokens) vocab += t + "\n";
  write_text(files.vocab, vocab);

  std::string corpus;
  for (const auto& row : load_filter_fixture()) corpus += row.sentence + "\n";
  std::istringstream in(corpus);
  ScanSummary summary;
  const auto records = filter_corpus(in, Lexicons::builtin(), ScanOptions{}, summary);
  std::ofstream out(files.sentences, std::ios::binary);
  write_sentence_records(out, records);
  if (!out) throw std::runtime_error("cannot write " + files.sentences.string());
  return files;
}

int run_cli(const std::string& args, std::string* stdout_text) {
  static std::atomic<int> counter{0};
  const auto capture = std::filesystem::temp_directory_path() /
                       ("genderbias-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  const std::string command = std::string("\"") + GENDERBIAS_CLI_PATH + "\" " + args + " > \"" +
                              capture.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  if (stdout_text) *stdout_text = read_text(capture);
  std::filesystem::remove(capture);
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(GENDERBIAS_TEST_DATA_DIR) / name;
}

std::filesystem::path repo_data_path(const std::string& name) {
  return std::filesystem::path(GENDERBIAS_REPO_DATA_DIR) / name;
}

}  // namespace genderbias::testing
