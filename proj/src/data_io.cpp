#include "spnseq/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "spnseq/error.hpp"

namespace spnseq::data {

namespace {

constexpr int kOcrPixels = 128;
constexpr int kOcrFixedFields = 6;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (begin <= line.size()) {
    const std::size_t end = line.find('\t', begin);
    const std::size_t stop = end == std::string_view::npos ? line.size() : end;
    fields.push_back(line.substr(begin, stop - begin));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  while (!fields.empty() && fields.back().empty()) fields.pop_back();
  return fields;
}

long parse_long(std::string_view field, std::size_t line, const char* what) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(std::string("bad ") + what + " field '" + std::string(field) + "'", line);
  return value;
}

std::vector<std::string> letter_alphabet() {
  std::vector<std::string> out;
  for (char c = 'a'; c <= 'z'; ++c) out.emplace_back(1, c);
  return out;
}

struct OcrRow {
  long id = 0;
  int label = 0;
  long next = -1;
  long word = 0;
  long position = 0;
  int fold = 0;
  std::vector<double> pixels;
  std::size_t line = 0;
};

}  // namespace

std::size_t Dataset::total_labels() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.length();
  return n;
}

void Dataset::validate() const {
  if (sequences.empty()) return;
  if (feature_dim < 1) throw InputError("dataset feature_dim must be >= 1");
  for (const auto& s : sequences) s.validate(num_labels(), feature_dim);
  if (normalization_stats) {
    if (normalization_stats->mean.size() != static_cast<std::size_t>(feature_dim) ||
        normalization_stats->stddev.size() != static_cast<std::size_t>(feature_dim))
      throw InputError("normalization stats do not match feature_dim");
    for (double s : normalization_stats->stddev)
      if (!(s > 0.0)) throw InputError("normalization stddev must be positive");
  }
}

OcrData load_ocr(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());

  std::vector<OcrRow> rows;
  std::unordered_map<long, std::size_t> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < static_cast<std::size_t>(kOcrFixedFields))
      throw ParseError("expected at least 6 fields", line_no);
    if (fields.size() != static_cast<std::size_t>(kOcrFixedFields + kOcrPixels))
      throw ParseError("expected 128 pixels, got " +
                           std::to_string(fields.size() - kOcrFixedFields),
                       line_no);
    OcrRow row;
    row.line = line_no;
    row.id = parse_long(fields[0], line_no, "id");
    if (fields[1].size() != 1 || fields[1][0] < 'a' || fields[1][0] > 'z')
      throw ParseError("letter must be a single character a-z", line_no);
    row.label = fields[1][0] - 'a';
    row.next = parse_long(fields[2], line_no, "next id");
    row.word = parse_long(fields[3], line_no, "word id");
    row.position = parse_long(fields[4], line_no, "position");
    row.fold = static_cast<int>(parse_long(fields[5], line_no, "fold"));
    if (row.fold < 0) throw ParseError("negative fold id", line_no);
    row.pixels.reserve(kOcrPixels);
    for (int p = 0; p < kOcrPixels; ++p) {
      const long v = parse_long(fields[static_cast<std::size_t>(kOcrFixedFields + p)], line_no,
                                "pixel");
      if (v != 0 && v != 1) throw ParseError("pixel must be 0 or 1", line_no);
      row.pixels.push_back(static_cast<double>(v));
    }
    if (!by_id.emplace(row.id, rows.size()).second)
      throw ParseError("duplicate id " + std::to_string(row.id), line_no);
    rows.push_back(std::move(row));
  }

  std::unordered_set<long> referenced;
  for (const auto& r : rows) {
    if (r.next == -1) continue;
    if (!by_id.count(r.next))
      throw ParseError("next id " + std::to_string(r.next) + " does not exist", r.line);
    if (!referenced.insert(r.next).second)
      throw ParseError("id " + std::to_string(r.next) + " is the successor of two rows", r.line);
  }

  OcrData out;
  out.dataset.label_alphabet = letter_alphabet();
  out.dataset.feature_dim = kOcrPixels;
  std::vector<bool> used(rows.size(), false);
  int max_fold = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (referenced.count(rows[i].id)) continue;
    LabeledSequence seq;
    std::size_t cur = i;
    const int fold = rows[i].fold;
    while (true) {
      const auto& r = rows[cur];
      if (used[cur]) throw ParseError("chain revisits a row", r.line);
      used[cur] = true;
      if (r.fold != fold) throw ParseError("fold changes inside a word", r.line);
      seq.labels.push_back(r.label);
      seq.observations.push_back(r.pixels);
      if (r.next == -1) break;
      cur = by_id.at(r.next);
    }
    out.dataset.sequences.push_back(std::move(seq));
    out.folds.assignment.push_back(fold);
    max_fold = std::max(max_fold, fold);
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!used[i]) throw ParseError("row is part of a cycle", rows[i].line);
  out.folds.num_folds = max_fold + 1;
  return out;
}

Dataset load_jsonl(const std::filesystem::path& path, std::optional<int> num_labels) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  int max_label = -1;
  int dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!rec.is_object() || !rec.contains("labels") || !rec.contains("features"))
      throw ParseError("record needs 'labels' and 'features'", line_no);
    const auto& labels = rec["labels"];
    const auto& feats = rec["features"];
    if (!labels.is_array() || !feats.is_array())
      throw ParseError("'labels' and 'features' must be arrays", line_no);
    if (labels.size() != feats.size())
      throw ParseError("labels and features differ in length", line_no);
    if (labels.empty()) throw ParseError("empty sequence", line_no);
    LabeledSequence seq;
    for (const auto& l : labels) {
      if (!l.is_number_integer()) throw ParseError("labels must be integers", line_no);
      const int v = l.get<int>();
      if (v < 0 || (num_labels && v >= *num_labels))
        throw ParseError("label " + std::to_string(v) + " out of range", line_no);
      max_label = std::max(max_label, v);
      seq.labels.push_back(v);
    }
    for (const auto& row : feats) {
      if (!row.is_array()) throw ParseError("features must be a list of lists", line_no);
      if (dim < 0) dim = static_cast<int>(row.size());
      if (row.size() != static_cast<std::size_t>(dim) || dim == 0)
        throw ParseError("ragged features", line_no);
      std::vector<double> x;
      x.reserve(row.size());
      for (const auto& v : row) {
        if (!v.is_number()) throw ParseError("features must be numbers", line_no);
        x.push_back(v.get<double>());
      }
      seq.observations.push_back(std::move(x));
    }
    ds.sequences.push_back(std::move(seq));
  }
  ds.feature_dim = std::max(dim, 0);
  const int y = num_labels ? *num_labels : max_label + 1;
  for (int i = 0; i < y; ++i) ds.label_alphabet.push_back(std::to_string(i));
  return ds;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& s : dataset.sequences) {
    nlohmann::json rec;
    rec["labels"] = s.labels;
    rec["features"] = s.observations;
    out << rec.dump() << '\n';
  }
  if (!out) throw InputError("write failed for " + path.string());
}

NormalizationStats compute_stats(const Dataset& dataset) {
  const auto d = static_cast<std::size_t>(dataset.feature_dim);
  NormalizationStats st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  std::size_t n = 0;
  for (const auto& s : dataset.sequences)
    for (const auto& x : s.observations) {
      ++n;
      for (std::size_t j = 0; j < d; ++j) st.mean[j] += x[j];
    }
  if (n == 0) throw InputError("cannot compute statistics of an empty dataset");
  for (double& m : st.mean) m /= static_cast<double>(n);
  for (const auto& s : dataset.sequences)
    for (const auto& x : s.observations)
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - st.mean[j];
        st.stddev[j] += diff * diff;
      }
  for (double& v : st.stddev) v = std::max(std::sqrt(v / static_cast<double>(n)), kStdFloor);
  return st;
}

void apply_stats(const NormalizationStats& stats, Dataset& dataset) {
  const auto d = static_cast<std::size_t>(dataset.feature_dim);
  if (stats.mean.size() != d || stats.stddev.size() != d)
    throw InputError("normalization stats do not match feature_dim");
  for (auto& s : dataset.sequences)
    for (auto& x : s.observations)
      for (std::size_t j = 0; j < d; ++j) x[j] = (x[j] - stats.mean[j]) / stats.stddev[j];
  dataset.normalization_stats = stats;
}

NormalizedSplits normalize(Dataset train, std::vector<Dataset> others) {
  NormalizedSplits out;
  out.stats = compute_stats(train);
  apply_stats(out.stats, train);
  for (auto& d : others) apply_stats(out.stats, d);
  out.train = std::move(train);
  out.others = std::move(others);
  return out;
}

SynthTask synth_task(const SynthSpec& spec) {
  if (spec.num_sequences < 0 || spec.length < 1 || spec.num_labels < 1 || spec.feature_dim < 1)
    throw InputError("synth task needs length, labels and feature_dim >= 1");
  if (!(spec.separation > 0.0)) throw InputError("separation must be positive");
  const auto Y = static_cast<std::size_t>(spec.num_labels);
  const auto D = static_cast<std::size_t>(spec.feature_dim);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SynthTask task;
  task.class_means.assign(Y, std::vector<double>(D, 0.0));
  if (Y > 1) {
    for (auto& m : task.class_means)
      for (double& v : m) v = normal(rng);
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < Y; ++a)
      for (std::size_t b = a + 1; b < Y; ++b) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < D; ++j) {
          const double diff = task.class_means[a][j] - task.class_means[b][j];
          d2 += diff * diff;
        }
        min_dist = std::min(min_dist, std::sqrt(d2));
      }
    const double scale = 2.0 * spec.separation / min_dist;
    for (auto& m : task.class_means)
      for (double& v : m) v *= scale;
  }

  // Markov chain with a preferred successor per label.
  task.transition.assign(Y * Y, 0.0);
  for (std::size_t a = 0; a < Y; ++a) {
    double total = 0.0;
    for (std::size_t b = 0; b < Y; ++b) {
      const double w = 0.2 + unit(rng);
      task.transition[a * Y + b] = w;
      total += w;
    }
    const std::size_t favoured = static_cast<std::size_t>(unit(rng) * static_cast<double>(Y)) % Y;
    task.transition[a * Y + favoured] += total;
    total *= 2.0;
    for (std::size_t b = 0; b < Y; ++b) task.transition[a * Y + b] /= total;
  }

  const auto draw_label = [&](std::span<const double> probs) {
    std::discrete_distribution<int> dist(probs.begin(), probs.end());
    return dist(rng);
  };
  const auto draw_features = [&](int label) {
    std::vector<double> x(D);
    for (std::size_t j = 0; j < D; ++j)
      x[j] = task.class_means[static_cast<std::size_t>(label)][j] + normal(rng);
    return x;
  };

  const std::vector<double> initial(Y, 1.0 / static_cast<double>(Y));
  for (int n = 0; n < spec.num_sequences; ++n) {
    LabeledSequence seq;
    int y = draw_label(initial);
    for (int t = 0; t < spec.length; ++t) {
      if (t > 0)
        y = draw_label(std::span<const double>(task.transition).subspan(static_cast<std::size_t>(y) * Y, Y));
      seq.labels.push_back(y);
      seq.observations.push_back(draw_features(y));
    }
    task.dataset.sequences.push_back(std::move(seq));
  }
  for (std::size_t y = 0; y < Y; ++y) task.dataset.label_alphabet.push_back(std::to_string(y));
  task.dataset.feature_dim = spec.feature_dim;

  // Nearest-mean classifier on fresh draws, from an independent stream.
  std::mt19937_64 mc_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> mc_normal(0.0, 1.0);
  constexpr int kDraws = 20000;
  int errors = 0;
  for (int i = 0; i < kDraws; ++i) {
    const std::size_t label = static_cast<std::size_t>(i) % Y;
    std::vector<double> x(D);
    for (std::size_t j = 0; j < D; ++j) x[j] = task.class_means[label][j] + mc_normal(mc_rng);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < Y; ++c) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < D; ++j) {
        const double diff = x[j] - task.class_means[c][j];
        d2 += diff * diff;
      }
      if (d2 < best_d) {
        best_d = d2;
        best = c;
      }
    }
    if (best != label) ++errors;
  }
  task.frame_error_estimate = static_cast<double>(errors) / kDraws;
  return task;
}

Dataset subset(const Dataset& dataset, std::size_t begin, std::size_t end) {
  if (begin > end || end > dataset.sequences.size()) throw InputError("subset range out of bounds");
  Dataset out;
  out.label_alphabet = dataset.label_alphabet;
  out.feature_dim = dataset.feature_dim;
  out.normalization_stats = dataset.normalization_stats;
  out.sequences.assign(dataset.sequences.begin() + static_cast<long>(begin),
                       dataset.sequences.begin() + static_cast<long>(end));
  return out;
}

std::pair<Dataset, Dataset> split_by_fold(const Dataset& dataset, const FoldSpec& folds,
                                          int test_fold) {
  if (folds.assignment.size() != dataset.sequences.size())
    throw InputError("fold assignment does not cover every sequence");
  if (test_fold < 0 || test_fold >= folds.num_folds) throw InputError("fold id out of range");
  Dataset train = subset(dataset, 0, 0);
  Dataset test = subset(dataset, 0, 0);
  for (std::size_t i = 0; i < dataset.sequences.size(); ++i)
    (folds.assignment[i] == test_fold ? test : train).sequences.push_back(dataset.sequences[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace spnseq::data
