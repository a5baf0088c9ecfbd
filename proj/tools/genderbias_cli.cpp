// genderbias: filter a corpus, analyze sentences through an instrumented
// encoder, report bias statistics, or probe a single sentence.
//
// Options may also come from a config file (--config run.ini, key = value
// with the long option names as keys); flags given on the command line take
// precedence over the file.

#include "genderbias/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace genderbias;

  CLI::App app{"Gender bias detection inside a BERT-style encoder"};
  app.set_config("--config", "", "Key-value config file; command-line flags override it");
  app.require_subcommand(1);

  RunConfig config;
  std::string orientation = "row";
  std::size_t limit = 0;
  std::uint64_t seed = 0;
  std::string probe_sentence;

  auto add_lexicon_options = [&](CLI::App* cmd) {
    cmd->add_option("--occupations", config.occupations, "Occupation word list, one per line");
    cmd->add_option("--swap-dict", config.swap_dict, "Gender swap dictionary");
  };
  auto add_model_options = [&](CLI::App* cmd) {
    cmd->add_option("--model", config.model, "Weight container")->required();
    cmd->add_option("--vocab", config.vocab, "WordPiece vocabulary (vocab.txt)")->required();
    cmd->add_option("--score-orientation", orientation,
                    "Read the occupation as query (row) or key (col)")
        ->check(CLI::IsMember({"row", "col"}));
    cmd->add_option("--token-cap", config.token_cap, "Maximum sequence length including [CLS]/[SEP]")
        ->check(CLI::PositiveNumber);
  };

  auto* filter = app.add_subcommand("filter", "Select sentences with male, female and occupation words");
  filter->add_option("--corpus", config.corpus, "Plain-text corpus")->required();
  filter->add_option("--out", config.out, "Output sentence records (JSON lines)")->required();
  filter->add_option("--vocab", config.vocab, "Vocabulary used for the token cap and swap alignment");
  filter->add_option("--token-cap", config.token_cap, "Maximum sequence length including [CLS]/[SEP]")
      ->check(CLI::PositiveNumber);
  filter->add_option("--workers", config.workers, "Worker threads")->check(CLI::PositiveNumber);
  add_lexicon_options(filter);

  auto* analyze = app.add_subcommand("analyze", "Run the detectors over filtered sentences");
  add_model_options(analyze);
  add_lexicon_options(analyze);
  analyze->add_option("--records", config.records, "Sentence records from `filter`")->required();
  analyze->add_option("--out", config.out, "Output raw bias records (JSON lines)")->required();
  analyze->add_option("--limit", limit, "Analyze at most N sentences (the first N unless --sample-seed)");
  analyze->add_option("--sample-seed", seed, "Seeded random sample for --limit");
  analyze->add_option("--workers", config.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Aggregate raw records into tables and charts");
  report->add_option("--records", config.records, "Raw bias records from `analyze`")->required();
  report->add_option("--out", config.out, "Output directory")->required();

  auto* probe = app.add_subcommand("probe", "Per-position, per-head breakdown for one sentence");
  add_model_options(probe);
  add_lexicon_options(probe);
  probe->add_option("sentence", probe_sentence, "Sentence to analyze")->required();
  probe->add_option("--dump-captures", config.dump_captures,
                    "Write the captured matrices to this container file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    config.orientation = parse_orientation(orientation);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (analyze->count("--limit")) config.limit = limit;
  if (analyze->count("--sample-seed")) config.sample_seed = seed;

  if (*filter) return cmd_filter(config, std::cout, std::cerr);
  if (*analyze) return cmd_analyze(config, std::cout, std::cerr);
  if (*report) return cmd_report(config, std::cout, std::cerr);
  return cmd_probe(config, probe_sentence, std::cout, std::cerr);
}
