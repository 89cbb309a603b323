#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spnseq/sequence.hpp"

namespace spnseq::data {

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at kStdFloor
};

inline constexpr double kStdFloor = 1e-8;

struct Dataset {
  std::vector<LabeledSequence> sequences;
  std::vector<std::string> label_alphabet;
  int feature_dim = 0;
  std::optional<NormalizationStats> normalization_stats;

  int num_labels() const noexcept { return static_cast<int>(label_alphabet.size()); }
  std::size_t total_labels() const;
  // Throws InputError when a sequence breaks the dataset invariants.
  void validate() const;
};

struct FoldSpec {
  int num_folds = 0;
  std::vector<int> assignment;  // fold id per sequence
};

struct OcrData {
  Dataset dataset;
  FoldSpec folds;
};

// Tab-separated letter file: id, letter, next id (-1 ends a word), word id,
// position, fold, then 128 binary pixels. Rows are chained into words via
// the next-id field. Throws ParseError with the offending line.
OcrData load_ocr(const std::filesystem::path& path);

// One JSON object per line: {"labels": [...], "features": [[...], ...]}.
// With `num_labels` unset the alphabet size is max label + 1.
Dataset load_jsonl(const std::filesystem::path& path, std::optional<int> num_labels = {});
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

NormalizationStats compute_stats(const Dataset& dataset);
void apply_stats(const NormalizationStats& stats, Dataset& dataset);

struct NormalizedSplits {
  Dataset train;
  std::vector<Dataset> others;
  NormalizationStats stats;
};

// Statistics from `train` only, applied to every dataset.
NormalizedSplits normalize(Dataset train, std::vector<Dataset> others);

struct SynthSpec {
  std::uint64_t seed = 0;
  int num_sequences = 100;
  int length = 8;
  int num_labels = 4;
  int feature_dim = 8;
  // Each class mean lies `separation` noise deviations from the pairwise
  // decision boundary, i.e. class means are 2 * separation apart.
  double separation = 3.0;
};

struct SynthTask {
  Dataset dataset;
  std::vector<std::vector<double>> class_means;
  std::vector<double> transition;  // Y x Y row-stochastic label chain
  // Monte-Carlo frame error of the nearest-mean classifier (an upper bound
  // on the per-frame Bayes error).
  double frame_error_estimate = 0.0;
};

// Labels follow a random Markov chain; features are unit-variance Gaussian
// clusters around label-specific means. Deterministic per seed.
SynthTask synth_task(const SynthSpec& spec);

Dataset subset(const Dataset& dataset, std::size_t begin, std::size_t end);
// (train = folds other than `test_fold`, test = `test_fold`).
std::pair<Dataset, Dataset> split_by_fold(const Dataset& dataset, const FoldSpec& folds,
                                          int test_fold);

}  // namespace spnseq::data
