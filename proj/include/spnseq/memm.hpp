#pragma once

// Higher-order maximum-entropy Markov model with an SPN local factor:
//
//   p(y_t | g_t, x) ∝ Q(y_t, window_t) * exp(sum_{m=1..M-1} w[m][y_{t-m}][y_t])
//
// History labels before the start of the sequence are START (row Y of each
// history block).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spnseq/sequence.hpp"
#include "spnseq/spn.hpp"

namespace spnseq::memm {

struct MemmSpec {
  int num_labels = 2;
  int feature_dim = 1;
  int order = 1;  // M
  int window = 1;
  int layers = 1;
  int children = 2;
  int states = 2;
  Semiring semiring = Semiring::SumProduct;
  int beam_width = 20;
};

class MemmModel {
 public:
  int num_labels = 0;
  int feature_dim = 0;
  int order = 1;   // M
  int window = 1;  // observations per local factor, centred on t
  int beam_width = 20;
  // (M-1) x (Y+1) x Y; index [(m-1) * (Y+1) + previous] * Y + label.
  std::vector<double> history_weights;
  spn::SpnTopology topology;
  spn::SpnWeights spn_weights;

  void validate() const;

  double& history_weight(int distance, int previous, int label);
  double history_weight(int distance, int previous, int label) const;
  int start_symbol() const noexcept { return num_labels; }

  std::size_t parameter_count() const;
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  MemmModel zeros_like() const;

  double log_likelihood(const LabeledSequence& sequence) const;
  double accumulate_gradient(const LabeledSequence& sequence, MemmModel& grad) const;
  // Exact per-position decoding for M = 1, beam search otherwise.
  std::vector<int> decode(const Observations& observations) const;
};

MemmModel make_memm_model(const MemmSpec& spec, std::uint64_t seed);

// Window of observations feeding the local factor at 0-based position t.
std::vector<double> memm_window(const MemmModel& model, const Observations& observations,
                                std::size_t t);

// p(y_t | history, x). `history[m - 1]` is the label m steps back (START
// allowed); it must hold M - 1 entries.
std::vector<double> local_posterior(const MemmModel& model, const Observations& observations,
                                    std::size_t t, std::span<const int> history);

// History of position t under the given label prefix, START-padded.
std::vector<int> label_history(const MemmModel& model, std::span<const int> labels, std::size_t t);

double sequence_log_likelihood(const MemmModel& model, const LabeledSequence& sequence);

MemmModel gradient(const MemmModel& model, const LabeledSequence& sequence,
                   double* log_likelihood = nullptr);

// Requires M = 1. Per-position argmax, lowest label on ties.
std::vector<int> decode_viterbi(const MemmModel& model, const Observations& observations);

struct BeamHypothesis {
  std::vector<int> label_history;  // last M-1 labels, most recent first, START-padded
  double cumulative_log_prob = 0.0;
  std::vector<int> full_prefix;
};

struct BeamResult {
  std::vector<int> labels;
  double log_prob = 0.0;
};

// Beam search over positions. Hypotheses that share a label history are
// recombined (the better one survives), then the best `beam_width` are
// kept; ties go to the lexicographically smaller prefix.
BeamResult decode_beam(const MemmModel& model, const Observations& observations, int beam_width);

}  // namespace spnseq::memm
