#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spnseq {

// Observation vectors x_1..x_T, each of the same dimension.
using Observations = std::vector<std::vector<double>>;

struct LabeledSequence {
  Observations observations;
  std::vector<int> labels;

  std::size_t length() const noexcept { return labels.size(); }

  // Throws InputError unless T >= 1, |labels| == |observations|, every
  // label is in [0, num_labels) and every observation has `feature_dim`
  // entries.
  void validate(int num_labels, int feature_dim) const;
};

// Throws InputError for an empty or ragged observation list.
void validate_observations(const Observations& observations, int feature_dim);

// Concatenation of `width` observations starting at (0-based) position
// `start`; positions outside [0, T) contribute zero vectors.
std::vector<double> observation_window(const Observations& observations, int start, int width,
                                       int feature_dim);

// Floor division for possibly negative numerators.
constexpr int floor_div(int a, int b) noexcept {
  const int q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace spnseq
