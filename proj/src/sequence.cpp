#include "spnseq/sequence.hpp"

#include <algorithm>
#include <string>

#include "spnseq/error.hpp"

namespace spnseq {

void validate_observations(const Observations& observations, int feature_dim) {
  if (observations.empty()) throw InputError("sequence is empty");
  for (std::size_t t = 0; t < observations.size(); ++t)
    if (observations[t].size() != static_cast<std::size_t>(feature_dim))
      throw InputError("observation " + std::to_string(t) + " has dimension " +
                       std::to_string(observations[t].size()) + ", expected " +
                       std::to_string(feature_dim));
}

void LabeledSequence::validate(int num_labels, int feature_dim) const {
  validate_observations(observations, feature_dim);
  if (labels.size() != observations.size())
    throw InputError("label count does not match observation count");
  for (int y : labels)
    if (y < 0 || y >= num_labels)
      throw InputError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(num_labels) + ")");
}

std::vector<double> observation_window(const Observations& observations, int start, int width,
                                       int feature_dim) {
  const auto dim = static_cast<std::size_t>(feature_dim);
  std::vector<double> window(static_cast<std::size_t>(width) * dim, 0.0);
  const int length = static_cast<int>(observations.size());
  for (int k = 0; k < width; ++k) {
    const int t = start + k;
    if (t < 0 || t >= length) continue;
    std::copy(observations[static_cast<std::size_t>(t)].begin(),
              observations[static_cast<std::size_t>(t)].end(),
              window.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * dim));
  }
  return window;
}

}  // namespace spnseq
