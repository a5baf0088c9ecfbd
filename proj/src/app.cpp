#include "genderbias/app.hpp"

#include "genderbias/corpus.hpp"
#include "genderbias/parallel.hpp"
#include "genderbias/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>

namespace genderbias {

namespace {

const std::filesystem::path& require(const std::optional<std::filesystem::path>& p,
                                     const char* flag) {
  if (!p) throw UsageError(std::string("missing required option ") + flag);
  return *p;
}

const std::filesystem::path& require_file(const std::optional<std::filesystem::path>& p,
                                          const char* flag) {
  const auto& path = require(p, flag);
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError(std::string(flag) + ": no such file " + path.string());
  }
  return path;
}

void require_writable_parent(const std::filesystem::path& path, const char* flag) {
  const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(parent)) {
    throw UsageError(std::string(flag) + ": directory does not exist: " + parent.string());
  }
}

Lexicons load_lexicons(const RunConfig& c) {
  if (c.swap_dict) require_file(c.swap_dict, "--swap-dict");
  if (c.occupations) require_file(c.occupations, "--occupations");
  return Lexicons::load(c.swap_dict, c.occupations);
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LexiconError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContainerError& e) {
    err << "model error: " << e.what() << '\n';
    return e.kind() == ContainerErrorKind::kIo ? kExitIo : kExitModel;
  } catch (const ValidationError& e) {
    err << "model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const VocabError& e) {
    err << "vocabulary error: " << e.what() << '\n';
    return kExitIo;
  } catch (const RecordFormatError& e) {
    err << "record error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "analysis failure: " << e.what() << '\n';
    return kExitAnalysis;
  }
}

std::size_t sequence_limit(const RunConfig& c, const WeightStore& store) {
  return std::min<std::size_t>(c.token_cap, static_cast<std::size_t>(store.config().max_positions));
}

void check_vocab_matches(const Vocab& vocab, const WeightStore& store) {
  if (static_cast<Index>(vocab.size()) != store.config().vocab_size) {
    throw ValidationError(ValidationErrorKind::kBadConfig,
                          "vocabulary has " + std::to_string(vocab.size()) +
                              " entries but the model expects " +
                              std::to_string(store.config().vocab_size));
  }
}

void write_atomically(const std::filesystem::path& path, const std::vector<BiasRecord>& records) {
  auto partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot create " + partial.string());
    write_bias_records(out, records);
    out.flush();
    if (!out) throw std::ios_base::failure("write failed for " + partial.string());
  }
  std::filesystem::rename(partial, path);
}

}  // namespace

std::vector<SentenceRecord> select_sentences(std::vector<SentenceRecord> records,
                                             std::optional<std::size_t> limit,
                                             std::optional<std::uint64_t> seed) {
  std::sort(records.begin(), records.end(),
            [](const SentenceRecord& a, const SentenceRecord& b) { return a.id < b.id; });
  if (!limit || *limit >= records.size()) return records;
  if (!seed) {
    records.resize(*limit);
    return records;
  }
  std::vector<SentenceRecord> sample;
  sample.reserve(*limit);
  std::mt19937_64 rng(*seed);
  std::sample(records.begin(), records.end(), std::back_inserter(sample), *limit, rng);
  return sample;
}

AnalysisRun run_analysis(const WeightStore& store, const Vocab& vocab, const Lexicons& lexicons,
                         const std::vector<SentenceRecord>& sentences, std::size_t token_cap,
                         std::size_t workers, ScoreOrientation orientation) {
  std::vector<OrRejection<AnalysisInput>> inputs(sentences.size(), Rejection::kNoMale);
  std::vector<std::vector<BiasRecord>> results(sentences.size());
  parallel_for(sentences.size(), workers, [&](std::size_t i) {
    inputs[i] = prepare_analysis(sentences[i], vocab, lexicons, token_cap);
    if (const auto* in = std::get_if<AnalysisInput>(&inputs[i])) {
      results[i] = analyze_sentence(store, *in, orientation);
    }
  });

  AnalysisRun run;
  std::size_t total = 0;
  for (const auto& r : results) total += r.size();
  run.records.reserve(total);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (const auto* r = std::get_if<Rejection>(&inputs[i])) {
      ++run.skipped[to_string(*r)];
      continue;
    }
    ++run.analyzed;
    run.records.insert(run.records.end(), results[i].begin(), results[i].end());
  }
  std::sort(run.records.begin(), run.records.end(), record_order);
  return run;
}

int cmd_filter(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto& corpus = require_file(c.corpus, "--corpus");
    const auto& output = require(c.out, "--out");
    require_writable_parent(output, "--out");
    if (c.workers < 1) throw UsageError("--workers must be at least 1");
    const Lexicons lexicons = load_lexicons(c);
    std::optional<Vocab> vocab;
    if (c.vocab) vocab = load_vocab(require_file(c.vocab, "--vocab"));

    ScanOptions options;
    options.workers = c.workers;
    options.filter.token_cap = c.token_cap;
    options.filter.vocab = vocab ? &*vocab : nullptr;
    ScanSummary summary;
    try {
      summary = scan_corpus(corpus, lexicons, output, options);
    } catch (const std::runtime_error& e) {
      err << "i/o error: " << e.what() << '\n';
      return static_cast<int>(kExitIo);
    }

    out << "sentences scanned: " << summary.sentences << '\n'
        << "accepted: " << summary.accepted << '\n';
    if (summary.invalid_utf8) out << "invalid utf-8 sequences replaced: " << summary.invalid_utf8 << '\n';
    out << "rejections:\n";
    for (const auto& [reason, n] : summary.rejections) out << "  " << reason << ": " << n << '\n';
    out << "occupations:\n";
    std::vector<std::pair<std::string, std::uint64_t>> hist(summary.occupations.begin(),
                                                            summary.occupations.end());
    std::stable_sort(hist.begin(), hist.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [occ, n] : hist) out << "  " << occ << ": " << n << '\n';

    auto summary_path = output;
    summary_path += ".summary.json";
    std::ofstream s(summary_path);
    s << summary.to_json().dump(2) << '\n';
    if (!s) throw std::ios_base::failure("cannot write " + summary_path.string());
    return static_cast<int>(kExitOk);
  });
}

int cmd_analyze(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto& model_path = require_file(c.model, "--model");
    const auto& vocab_path = require_file(c.vocab, "--vocab");
    const auto& records_path = require_file(c.records, "--records");
    const auto& output = require(c.out, "--out");
    require_writable_parent(output, "--out");
    if (c.workers < 1) throw UsageError("--workers must be at least 1");
    const Lexicons lexicons = load_lexicons(c);

    const WeightStore store = load_weight_store(model_path);
    const Vocab vocab = load_vocab(vocab_path);
    check_vocab_matches(vocab, store);
    const auto sentences = select_sentences(read_sentence_records(records_path), c.limit, c.sample_seed);

    const AnalysisRun run = run_analysis(store, vocab, lexicons, sentences,
                                         sequence_limit(c, store), c.workers, c.orientation);
    for (const auto& [reason, n] : run.skipped) {
      err << "skipped " << n << " sentence(s): " << reason << '\n';
    }
    write_atomically(output, run.records);
    out << "analyzed " << run.analyzed << " sentence(s), wrote " << run.records.size()
        << " record(s) to " << output.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_report(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto& records_path = require_file(c.records, "--records");
    const auto& dir = require(c.out, "--out");
    const auto records = read_bias_records(records_path);
    if (records.empty()) {
      err << "analysis failure: no records in " << records_path.string() << '\n';
      return static_cast<int>(kExitAnalysis);
    }
    const Report report = build_report(records);
    const auto manifest = emit_report(report, dir);
    for (const auto& e : manifest) out << e.sha256 << "  " << e.file << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_probe(const RunConfig& c, const std::string& sentence, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto& model_path = require_file(c.model, "--model");
    const auto& vocab_path = require_file(c.vocab, "--vocab");
    const Lexicons lexicons = load_lexicons(c);
    const WeightStore store = load_weight_store(model_path);
    const Vocab vocab = load_vocab(vocab_path);
    check_vocab_matches(vocab, store);

    SentenceRecord record;
    record.text = sentence;
    record.swapped_text = swap_gender_text(sentence, lexicons.swap);
    const auto prepared = prepare_analysis(record, vocab, lexicons, sequence_limit(c, store));
    if (const auto* r = std::get_if<Rejection>(&prepared)) {
      err << "rejected: " << to_string(*r) << '\n';
      return static_cast<int>(kExitAnalysis);
    }
    const auto& in = std::get<AnalysisInput>(prepared);

    auto print_tokens = [&](const char* title, const TokenizedSentence& ts, const GenderIndexSet& g) {
      out << title << ": " << ts.text << '\n' << "  tokens:";
      for (std::size_t t = 0; t < ts.token_ids.size(); ++t) out << ' ' << t << ':' << vocab.token(ts.token_ids[t]);
      out << "\n  male token indices:";
      for (auto i : g.male_token_indices) out << ' ' << i;
      out << "\n  female token indices:";
      for (auto j : g.female_token_indices) out << ' ' << j;
      out << "\n  occupation: " << g.occupation_word << " @ " << g.occupation_token_index << '\n';
    };
    print_tokens("original", in.original, in.original_indices);
    print_tokens("swapped", in.swapped, in.swapped_indices);

    const CaptureSet original = forward_instrumented(in.original, store);
    const CaptureSet swapped = forward_instrumented(in.swapped, store);
    if (c.dump_captures) {
      write_capture_set(*c.dump_captures, original, in.original.token_ids);
      auto swap_path = *c.dump_captures;
      swap_path += ".swapped";
      write_capture_set(swap_path, swapped, in.swapped.token_ids);
    }
    const auto records = analyze_captures(0, original, swapped, in.original_indices,
                                          in.swapped_indices, store.config().num_heads, c.orientation);

    out << "position\thead\tt_male\tt_female\tt_male_swap\tt_female_swap\tbias\tbias_swap\tdegree\tbiased\n";
    char line[512];
    for (const auto& r : records) {
      std::snprintf(line, sizeof(line), "%s\t%ld\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%s\n",
                    Position::from_id(r.position).label().c_str(), static_cast<long>(r.head), r.t_male,
                    r.t_female, r.t_male_swap, r.t_female_swap, r.bias, r.bias_swap, r.degree,
                    is_biased(r.degree) ? "yes" : "no");
      out << line;
    }
    return static_cast<int>(kExitOk);
  });
}

}  // namespace genderbias
