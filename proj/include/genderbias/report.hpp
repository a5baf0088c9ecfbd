#pragma once

// Statistics over raw bias records: mean degree per position, enhancement
// probability along the Q/K/V chains, box-plot distributions and the share
// of biased heads, plus table and chart emission.

#include "genderbias/positions.hpp"
#include "genderbias/records.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace genderbias {

struct BoxStats {
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
  double whisker_low = 0;
  double whisker_high = 0;
};

/// Quantile by linear interpolation between closest ranks of sorted samples.
double quantile_sorted(std::span<const double> sorted, double p);
/// Tukey box: whiskers at the most extreme samples within 1.5 IQR of the box.
BoxStats box_stats(std::vector<double> samples);

struct PositionStats {
  Index position = 0;
  double mean_degree = 0;
  BoxStats box;
  double biased_head_fraction = 0;
  std::uint64_t n = 0;
};

enum class Branch { kQuery, kKey, kValue };
const char* to_string(Branch b);

struct ChainStep {
  Branch branch = Branch::kQuery;
  Index from_position = 0;
  Index to_position = 0;
  double enhancement_probability = 0;
  std::uint64_t sentences = 0;  // sentences with both endpoints
  std::uint64_t excluded = 0;   // sentences missing an endpoint
};

/// Emb -> L1b -> L1A -> L1Z -> L2b -> ... -> L<n>Z for branch b.
std::vector<Index> branch_chain(Branch b, Index num_layers);

/// Streaming per-position accumulator; shards merge by concatenation.
class PositionAccumulator {
 public:
  void add(const BiasRecord& r);
  void merge(const PositionAccumulator& other);
  /// Positions present in the data, in id order.
  std::vector<PositionStats> finish() const;

 private:
  std::vector<std::vector<double>> samples_;  // indexed by position id
};

std::vector<PositionStats> mean_by_position(std::span<const BiasRecord> records);
std::vector<PositionStats> distribution_stats(std::span<const BiasRecord> records);
std::vector<PositionStats> biased_head_percentage(std::span<const BiasRecord> records);

/// Per sentence the degree at a position is the mean over heads; a step
/// counts as enhancement when degree(to) > degree(from).
std::vector<ChainStep> enhancement_probability(std::span<const BiasRecord> records,
                                               Index num_layers);

/// Number of layers implied by the largest position id present.
Index infer_num_layers(std::span<const BiasRecord> records);

struct Report {
  Index num_layers = 0;
  std::vector<PositionStats> positions;
  std::vector<ChainStep> chain;
};

Report build_report(std::span<const BiasRecord> records);

std::string positions_csv(const Report& report);
std::string enhancement_csv(const Report& report);
std::string report_json(const Report& report);

struct ManifestEntry {
  std::string file;
  std::uint64_t bytes = 0;
  std::string sha256;
};

/// Writes tables, charts and manifest.json into `dir`; returns the manifest.
std::vector<ManifestEntry> emit_report(const Report& report, const std::filesystem::path& dir);

std::string sha256_hex(std::string_view data);

}  // namespace genderbias
