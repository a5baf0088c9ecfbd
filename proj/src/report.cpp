#include "genderbias/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace genderbias {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  BoxStats b;
  b.min = samples.front();
  b.max = samples.back();
  b.q1 = quantile_sorted(samples, 0.25);
  b.median = quantile_sorted(samples, 0.5);
  b.q3 = quantile_sorted(samples, 0.75);
  const double iqr = b.q3 - b.q1;
  const double low_fence = b.q1 - 1.5 * iqr;
  const double high_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::lower_bound(samples.begin(), samples.end(), low_fence);
  b.whisker_high = *(std::upper_bound(samples.begin(), samples.end(), high_fence) - 1);
  // Interpolated quartiles can sit beyond the nearest sample; keep the box inside the whiskers.
  b.whisker_low = std::min(b.whisker_low, b.q1);
  b.whisker_high = std::max(b.whisker_high, b.q3);
  return b;
}

const char* to_string(Branch b) {
  switch (b) {
    case Branch::kQuery: return "Q";
    case Branch::kKey: return "K";
    case Branch::kValue: return "V";
  }
  return "?";
}

std::vector<Index> branch_chain(Branch b, Index num_layers) {
  const PositionKind kind = b == Branch::kQuery ? PositionKind::kQuery
                            : b == Branch::kKey ? PositionKind::kKey
                                                : PositionKind::kValue;
  std::vector<Index> chain = {Position::embedding().id()};
  for (Index l = 0; l < num_layers; ++l) {
    chain.push_back(Position::at(kind, l).id());
    chain.push_back(Position::at(PositionKind::kAvgAttention, l).id());
    chain.push_back(Position::at(PositionKind::kLayerOutput, l).id());
  }
  return chain;
}

void PositionAccumulator::add(const BiasRecord& r) {
  const auto p = static_cast<std::size_t>(r.position);
  if (samples_.size() <= p) samples_.resize(p + 1);
  samples_[p].push_back(r.degree);
}

void PositionAccumulator::merge(const PositionAccumulator& other) {
  if (samples_.size() < other.samples_.size()) samples_.resize(other.samples_.size());
  for (std::size_t p = 0; p < other.samples_.size(); ++p) {
    samples_[p].insert(samples_[p].end(), other.samples_[p].begin(), other.samples_[p].end());
  }
}

std::vector<PositionStats> PositionAccumulator::finish() const {
  std::vector<PositionStats> out;
  for (std::size_t p = 0; p < samples_.size(); ++p) {
    if (samples_[p].empty()) continue;
    // Sorting first makes the sum, and so the mean, independent of record order.
    std::vector<double> sorted = samples_[p];
    std::sort(sorted.begin(), sorted.end());
    PositionStats s;
    s.position = static_cast<Index>(p);
    s.n = sorted.size();
    s.mean_degree = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
    const auto positive = static_cast<std::size_t>(
        sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), 0.0));
    s.biased_head_fraction = static_cast<double>(positive) / static_cast<double>(s.n);
    s.box = box_stats(std::move(sorted));
    out.push_back(s);
  }
  return out;
}

namespace {

std::vector<PositionStats> accumulate_all(std::span<const BiasRecord> records) {
  if (records.empty()) throw std::invalid_argument("no bias records");
  PositionAccumulator acc;
  for (const auto& r : records) acc.add(r);
  return acc.finish();
}

}  // namespace

std::vector<PositionStats> mean_by_position(std::span<const BiasRecord> records) {
  return accumulate_all(records);
}

std::vector<PositionStats> distribution_stats(std::span<const BiasRecord> records) {
  return accumulate_all(records);
}

std::vector<PositionStats> biased_head_percentage(std::span<const BiasRecord> records) {
  return accumulate_all(records);
}

Index infer_num_layers(std::span<const BiasRecord> records) {
  Index max_id = 0;
  for (const auto& r : records) max_id = std::max(max_id, r.position);
  return max_id == 0 ? 0 : Position::from_id(max_id).layer + 1;
}

std::vector<ChainStep> enhancement_probability(std::span<const BiasRecord> records,
                                               Index num_layers) {
  // sentence -> position -> (head, degree) samples
  std::map<std::uint64_t, std::map<Index, std::vector<std::pair<Index, double>>>> by_sentence;
  for (const auto& r : records) by_sentence[r.sentence_id][r.position].emplace_back(r.head, r.degree);

  std::map<std::uint64_t, std::map<Index, double>> head_mean;
  for (auto& [sid, positions] : by_sentence) {
    for (auto& [pos, heads] : positions) {
      std::sort(heads.begin(), heads.end());
      double sum = 0;
      for (const auto& [h, d] : heads) sum += d;
      head_mean[sid][pos] = sum / static_cast<double>(heads.size());
    }
  }

  std::vector<ChainStep> steps;
  for (Branch b : {Branch::kQuery, Branch::kKey, Branch::kValue}) {
    const auto chain = branch_chain(b, num_layers);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      ChainStep step;
      step.branch = b;
      step.from_position = chain[i];
      step.to_position = chain[i + 1];
      std::uint64_t enhanced = 0;
      for (const auto& [sid, degrees] : head_mean) {
        const auto from = degrees.find(step.from_position);
        const auto to = degrees.find(step.to_position);
        if (from == degrees.end() || to == degrees.end()) {
          ++step.excluded;
          continue;
        }
        ++step.sentences;
        if (to->second > from->second) ++enhanced;
      }
      step.enhancement_probability =
          step.sentences == 0 ? 0.0 : static_cast<double>(enhanced) / static_cast<double>(step.sentences);
      steps.push_back(step);
    }
  }
  return steps;
}

Report build_report(std::span<const BiasRecord> records) {
  Report report;
  report.num_layers = infer_num_layers(records);
  report.positions = accumulate_all(records);
  report.chain = enhancement_probability(records, report.num_layers);
  return report;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string label(Index position) { return Position::from_id(position).label(); }

}  // namespace

std::string positions_csv(const Report& report) {
  std::ostringstream os;
  os << "position,n,mean_degree,min,q1,median,q3,max,whisker_low,whisker_high,"
        "biased_fraction,unbiased_fraction\n";
  for (const auto& s : report.positions) {
    os << label(s.position) << ',' << s.n << ',' << num(s.mean_degree) << ',' << num(s.box.min)
       << ',' << num(s.box.q1) << ',' << num(s.box.median) << ',' << num(s.box.q3) << ','
       << num(s.box.max) << ',' << num(s.box.whisker_low) << ',' << num(s.box.whisker_high) << ','
       << num(s.biased_head_fraction) << ',' << num(1.0 - s.biased_head_fraction) << '\n';
  }
  return os.str();
}

std::string enhancement_csv(const Report& report) {
  std::ostringstream os;
  os << "branch,from,to,enhancement_probability,sentences,excluded\n";
  for (const auto& c : report.chain) {
    os << to_string(c.branch) << ',' << label(c.from_position) << ',' << label(c.to_position) << ','
       << num(c.enhancement_probability) << ',' << c.sentences << ',' << c.excluded << '\n';
  }
  return os.str();
}

std::string report_json(const Report& report) {
  nlohmann::json j;
  j["num_layers"] = report.num_layers;
  j["positions"] = nlohmann::json::array();
  for (const auto& s : report.positions) {
    j["positions"].push_back({{"position", label(s.position)},
                              {"n", s.n},
                              {"mean_degree", s.mean_degree},
                              {"min", s.box.min},
                              {"q1", s.box.q1},
                              {"median", s.box.median},
                              {"q3", s.box.q3},
                              {"max", s.box.max},
                              {"whisker_low", s.box.whisker_low},
                              {"whisker_high", s.box.whisker_high},
                              {"biased_fraction", s.biased_head_fraction}});
  }
  j["enhancement"] = nlohmann::json::array();
  for (const auto& c : report.chain) {
    j["enhancement"].push_back({{"branch", to_string(c.branch)},
                                {"from", label(c.from_position)},
                                {"to", label(c.to_position)},
                                {"probability", c.enhancement_probability},
                                {"sentences", c.sentences},
                                {"excluded", c.excluded}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// SVG charts

namespace {

constexpr double kWidth = 960, kHeight = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 70;

struct Axis {
  double lo, hi;
  double y(double v) const {
    return kTop + (kHeight - kTop - kBottom) * (1.0 - (v - lo) / (hi - lo));
  }
};

Axis make_axis(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

double x_at(std::size_t i, std::size_t count) {
  const double span = kWidth - kLeft - kRight;
  return count <= 1 ? kLeft + span / 2 : kLeft + span * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::string svg_open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  return os.str();
}

void draw_frame(std::ostringstream& os, const Axis& axis, const std::vector<std::string>& labels,
                const std::vector<std::size_t>& boundaries, std::size_t label_every) {
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
     << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = axis.lo + (axis.hi - axis.lo) * t / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << axis.y(v) + 4 << "\" text-anchor=\"end\">" << buf
       << "</text>\n";
  }
  if (axis.lo < 0 && axis.hi > 0) {
    os << "<line x1=\"" << kLeft << "\" y1=\"" << axis.y(0) << "\" x2=\"" << kWidth - kRight
       << "\" y2=\"" << axis.y(0) << "\" stroke=\"#999\" stroke-width=\"0.5\"/>\n";
  }
  for (std::size_t b : boundaries) {
    const double x = (x_at(b, labels.size()) + x_at(b + 1, labels.size())) / 2;
    os << "<line x1=\"" << x << "\" y1=\"" << kTop << "\" x2=\"" << x << "\" y2=\""
       << kHeight - kBottom << "\" stroke=\"red\" stroke-dasharray=\"4,3\" stroke-width=\"0.8\"/>\n";
  }
  for (std::size_t i = 0; i < labels.size(); i += label_every) {
    const double x = x_at(i, labels.size());
    os << "<text x=\"" << x << "\" y=\"" << kHeight - kBottom + 12 << "\" transform=\"rotate(60 " << x
       << ' ' << kHeight - kBottom + 12 << ")\">" << labels[i] << "</text>\n";
  }
}

struct Series {
  std::string name;
  std::string color;
  std::vector<double> values;
};

std::string line_chart(const std::string& title, const std::vector<std::string>& labels,
                       const std::vector<Series>& series, const std::vector<std::size_t>& boundaries) {
  double lo = 0, hi = 0;
  bool first = true;
  for (const auto& s : series) {
    for (double v : s.values) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  const Axis axis = make_axis(lo, hi);
  std::ostringstream os;
  os << svg_open(title);
  draw_frame(os, axis, labels, boundaries, labels.size() > 40 ? 3 : 1);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      os << x_at(i, labels.size()) << ',' << axis.y(s.values[i]) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight - 90 << "\" y=\"" << kTop + 14 * (si + 1) << "\" fill=\""
       << s.color << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string box_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<BoxStats>& boxes, const std::vector<std::size_t>& boundaries) {
  double lo = 0, hi = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    lo = i == 0 ? boxes[i].whisker_low : std::min(lo, boxes[i].whisker_low);
    hi = i == 0 ? boxes[i].whisker_high : std::max(hi, boxes[i].whisker_high);
  }
  const Axis axis = make_axis(lo, hi);
  std::ostringstream os;
  os << svg_open(title);
  draw_frame(os, axis, labels, boundaries, labels.size() > 40 ? 3 : 1);
  const double half = std::max(1.5, 0.3 * (kWidth - kLeft - kRight) / std::max<std::size_t>(1, boxes.size()));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double x = x_at(i, labels.size());
    os << "<line x1=\"" << x << "\" y1=\"" << axis.y(b.whisker_low) << "\" x2=\"" << x << "\" y2=\""
       << axis.y(b.whisker_high) << "\" stroke=\"black\" stroke-width=\"0.7\"/>\n";
    os << "<rect x=\"" << x - half << "\" y=\"" << axis.y(b.q3) << "\" width=\"" << 2 * half
       << "\" height=\"" << std::max(0.5, axis.y(b.q1) - axis.y(b.q3))
       << "\" fill=\"#9ecae1\" stroke=\"black\" stroke-width=\"0.7\"/>\n";
    os << "<line x1=\"" << x - half << "\" y1=\"" << axis.y(b.median) << "\" x2=\"" << x + half
       << "\" y2=\"" << axis.y(b.median) << "\" stroke=\"#d62728\" stroke-width=\"1.2\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string biased_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& biased,
                             const std::vector<std::size_t>& boundaries) {
  const Axis axis{0.0, 1.0};
  std::ostringstream os;
  os << svg_open(title);
  draw_frame(os, axis, labels, boundaries, labels.size() > 40 ? 3 : 1);
  const double half = std::max(1.0, 0.4 * (kWidth - kLeft - kRight) / std::max<std::size_t>(1, labels.size()));
  for (std::size_t i = 0; i < biased.size(); ++i) {
    const double x = x_at(i, labels.size());
    os << "<rect x=\"" << x - half << "\" y=\"" << axis.y(1.0) << "\" width=\"" << 2 * half
       << "\" height=\"" << axis.y(biased[i]) - axis.y(1.0) << "\" fill=\"#1f77b4\"/>\n";
    os << "<rect x=\"" << x - half << "\" y=\"" << axis.y(biased[i]) << "\" width=\"" << 2 * half
       << "\" height=\"" << axis.y(0.0) - axis.y(biased[i]) << "\" fill=\"#ff7f0e\"/>\n";
  }
  os << "<text x=\"" << kWidth - kRight - 90 << "\" y=\"" << kTop + 14 << "\" fill=\"#1f77b4\">unbiased</text>\n"
     << "<text x=\"" << kWidth - kRight - 90 << "\" y=\"" << kTop + 28 << "\" fill=\"#ff7f0e\">biased</text>\n"
     << "</svg>\n";
  return os.str();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::vector<ManifestEntry> emit_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> manifest;
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + (dir / name).string());
    manifest.push_back({name, content.size(), sha256_hex(content)});
  };

  write("positions.csv", positions_csv(report));
  write("enhancement.csv", enhancement_csv(report));
  write("report.json", report_json(report));

  std::map<Index, const PositionStats*> by_id;
  for (const auto& s : report.positions) by_id[s.position] = &s;

  // Mean curves, one per branch, each following Emb -> b -> Avg -> Out per layer.
  const char* colors[] = {"#1f77b4", "#2ca02c", "#9467bd"};
  std::vector<Series> mean_series;
  std::vector<std::string> chain_labels;
  std::vector<std::size_t> chain_boundaries;
  for (Index l = 0; l < report.num_layers; ++l) chain_boundaries.push_back(static_cast<std::size_t>(3 * l));
  int ci = 0;
  for (Branch b : {Branch::kQuery, Branch::kKey, Branch::kValue}) {
    const auto chain = branch_chain(b, report.num_layers);
    Series s{std::string("W") + static_cast<char>(std::tolower(to_string(b)[0])) + " branch", colors[ci++], {}};
    std::vector<std::string> labels;
    std::vector<BoxStats> boxes;
    bool complete = true;
    for (Index id : chain) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        complete = false;
        break;
      }
      s.values.push_back(it->second->mean_degree);
      labels.push_back(label(id));
      boxes.push_back(it->second->box);
    }
    if (!complete) continue;
    if (chain_labels.empty()) {
      for (std::size_t i = 0; i < labels.size(); ++i) {
        chain_labels.push_back(i == 0 ? "Emb" : "L" + std::to_string((i - 1) / 3 + 1) + "." + std::to_string((i - 1) % 3 + 1));
      }
    }
    mean_series.push_back(std::move(s));
    write(std::string("distribution_") + to_string(b) + ".svg",
          box_chart(std::string("Degree distribution (Emb, ") + to_string(b) + ", Avg, Out)", labels,
                    boxes, chain_boundaries));
  }
  if (!mean_series.empty()) {
    write("mean_by_position.svg",
          line_chart("Mean degree_biased by position", chain_labels, mean_series, chain_boundaries));
  }

  std::vector<Series> enh_series;
  std::vector<std::string> step_labels;
  ci = 0;
  for (Branch b : {Branch::kQuery, Branch::kKey, Branch::kValue}) {
    Series s{std::string(to_string(b)) + " branch", colors[ci++], {}};
    for (const auto& c : report.chain) {
      if (c.branch != b) continue;
      s.values.push_back(c.enhancement_probability);
      if (b == Branch::kQuery) {
        const PositionKind to = Position::from_id(c.to_position).kind;
        const char* kind = to == PositionKind::kAvgAttention ? "A" : to == PositionKind::kLayerOutput ? "Z" : "b";
        step_labels.push_back("L" + std::to_string(Position::from_id(c.to_position).layer + 1) + kind);
      }
    }
    enh_series.push_back(std::move(s));
  }
  if (!step_labels.empty()) {
    std::vector<std::size_t> step_boundaries;
    for (Index l = 1; l < report.num_layers; ++l) step_boundaries.push_back(static_cast<std::size_t>(3 * l - 1));
    write("enhancement.svg", line_chart("Probability of bias enhancement between adjacent positions",
                                        step_labels, enh_series, step_boundaries));
  }

  std::vector<std::string> pos_labels;
  std::vector<double> biased;
  for (const auto& s : report.positions) {
    pos_labels.push_back(label(s.position));
    biased.push_back(s.biased_head_fraction);
  }
  std::vector<std::size_t> pos_boundaries;
  for (std::size_t i = 0; i + 1 < report.positions.size(); ++i) {
    if (Position::from_id(report.positions[i].position).kind == PositionKind::kLayerOutput ||
        report.positions[i].position == 0) {
      pos_boundaries.push_back(i);
    }
  }
  write("biased_heads.svg", biased_bar_chart("Share of biased heads per position", pos_labels, biased,
                                             pos_boundaries));

  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : manifest) j.push_back({{"file", e.file}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for manifest.json");
  return manifest;
}

}  // namespace genderbias
