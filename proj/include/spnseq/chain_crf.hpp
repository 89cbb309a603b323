#pragma once

// Linear-chain CRF with SPN local factors and optional higher-order
// factors.
//
// Higher-order models run the first-order recursion over an expanded state
// space: the state at position t is the tuple of the last K labels
// (K = history_length()), encoded as a base-Y number with the newest label
// in the lowest digit. Positions before the start of the sequence hold a
// START symbol; a state at position t (0-based) has min(t + 1, K) real
// labels, its leading digits are START padding and are stored as zero, so
// exactly the states s < Y^min(t+1, K) are reachable.
//
// Factors:
//   * input-independent n-gram weights (n <= K + 1), scored on the edge
//     (state_{t-1}, y_t); n-grams may begin with START symbols,
//   * SPN factors mapping `window` observations to the last `gram` labels
//     (gram <= K), scored on the node state_t. A factor with gram n is only
//     applied at positions t >= n - 1 where all n labels are real.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spnseq/kernels.hpp"
#include "spnseq/sequence.hpp"
#include "spnseq/spn.hpp"

namespace spnseq::crf {

// Sparse set of label n-grams over the extended alphabet {0..Y-1, START}.
// START (== num_labels) may only appear as a prefix and the last symbol is
// always a real label.
class NGramDictionary {
 public:
  NGramDictionary() = default;
  NGramDictionary(int order, int num_labels, bool include_unseen);

  // Every valid n-gram, in lexicographic order of the extended alphabet.
  static NGramDictionary dense(int order, int num_labels);
  // Only n-grams that occur (START-padded) in the given sequences.
  static NGramDictionary from_sequences(int order, int num_labels,
                                        std::span<const LabeledSequence> sequences);

  int order() const noexcept { return order_; }
  int num_labels() const noexcept { return num_labels_; }
  int start_symbol() const noexcept { return num_labels_; }
  // True when every valid n-gram owns a weight; otherwise unseen n-grams
  // score zero.
  bool include_unseen() const noexcept { return include_unseen_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::vector<int>>& entries() const noexcept { return entries_; }

  // Weight index of `gram`, or -1 when it has none.
  long index_of(std::span<const int> gram) const;
  // Adds `gram` if absent; returns its index. Throws InputError for an
  // invalid n-gram.
  std::size_t insert(std::span<const int> gram);

 private:
  std::size_t code(std::span<const int> gram) const;

  int order_ = 0;
  int num_labels_ = 0;
  bool include_unseen_ = false;
  std::vector<std::int32_t> table_;  // (Y+1)^order codes -> index or -1
  std::vector<std::vector<int>> entries_;
};

struct TransitionFactor {
  NGramDictionary dictionary;
  std::vector<double> weights;  // one per dictionary entry
};

struct LocalFactor {
  int window = 1;  // m observations
  int gram = 1;    // n labels
  spn::SpnTopology topology;
  spn::SpnWeights weights;
};

struct FactorShape {
  int window = 1;
  int gram = 1;
};

struct ChainSpec {
  int num_labels = 2;
  int feature_dim = 1;
  std::vector<int> ngram_orders{2};
  bool sparse_ngrams = false;
  std::vector<FactorShape> factors{{1, 1}};
  int layers = 1;
  int children = 2;
  int states = 2;
  Semiring semiring = Semiring::SumProduct;
};

class ChainModel {
 public:
  int num_labels = 0;
  int feature_dim = 0;
  std::vector<TransitionFactor> transitions;
  std::vector<LocalFactor> local_factors;

  // Throws StructuralError / NumericError.
  void validate() const;

  int history_length() const;      // K
  std::size_t state_count() const;  // Y^K
  std::size_t parameter_count() const;

  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  // Same structure, all weights zero.
  ChainModel zeros_like() const;

  double log_likelihood(const LabeledSequence& sequence) const;
  // grad += d log p(y | x) / d w; returns log p(y | x).
  double accumulate_gradient(const LabeledSequence& sequence, ChainModel& grad) const;
  std::vector<int> decode(const Observations& observations) const;
};

// Transition weights start at zero; SPN weights use SpnWeights::initialized.
// With sparse n-grams the dictionaries are built from `training`.
ChainModel make_chain_model(const ChainSpec& spec, std::span<const LabeledSequence> training,
                            std::uint64_t seed);

// Per-sequence log potentials.
struct ChainPotentials {
  std::size_t length = 0;
  std::size_t states = 0;
  std::size_t labels = 0;
  int history = 1;
  std::vector<double> local;  // length x states
  // edges[r][s' * Y + y]: transition log weight from a state with r real
  // labels; position t uses r = min(t, K).
  std::vector<std::vector<double>> edges;
  // factor_evals[f][t], present for t >= gram - 1.
  std::vector<std::vector<std::optional<spn::SpnEvaluation>>> factor_evals;

  std::size_t active_states(std::size_t t) const;
  std::span<const double> edge_table(std::size_t t) const;
};

ChainPotentials compute_potentials(const ChainModel& model, const Observations& observations,
                                   ExecPolicy policy = ExecPolicy::Serial);

// Sum of the SPN factor log values for `state` at 0-based position t.
double local_log_factor(const ChainModel& model, const Observations& observations, std::size_t t,
                        std::size_t state);

// Log-domain messages, each length x states (unreachable states hold -inf).
struct ChainMessages {
  std::size_t length = 0;
  std::size_t states = 0;
  std::vector<double> alpha_trans;
  std::vector<double> alpha;
  std::vector<double> beta_trans;
  std::vector<double> beta;
  std::vector<double> beta_local;
  double log_partition = 0.0;           // from alpha at the last position
  double log_partition_backward = 0.0;  // from beta at the first position
};

ChainMessages forward_backward(const ChainPotentials& potentials,
                               ExecPolicy policy = ExecPolicy::Serial);
ChainMessages forward_backward(const ChainModel& model, const Observations& observations,
                               ExecPolicy policy = ExecPolicy::Serial);

// Unnormalized log score of a label sequence, computed factor by factor.
double sequence_score(const ChainModel& model, const Observations& observations,
                      std::span<const int> labels);
double sequence_log_likelihood(const ChainModel& model, const LabeledSequence& sequence);

struct ChainMarginals {
  std::size_t length = 0;
  std::size_t states = 0;
  std::size_t labels = 0;
  std::vector<double> node;  // length x states
  // edge[(t * states + s') * labels + y] = p(state_{t-1} = s', y_t = y);
  // at t = 0 the predecessor is the all-START state 0.
  std::vector<double> edge;

  double node_at(std::size_t t, std::size_t s) const { return node[t * states + s]; }
  // p(y_t = y), summed over states ending in y.
  std::vector<double> label_marginals() const;
};

ChainMarginals posterior_marginals(const ChainModel& model, const Observations& observations);

// d log p(y | x) / d w as a model of the same shape.
ChainModel gradient(const ChainModel& model, const LabeledSequence& sequence,
                    double* log_likelihood = nullptr);

struct ViterbiResult {
  std::vector<int> labels;
  double score = 0.0;
};

ViterbiResult viterbi(const ChainModel& model, const Observations& observations);

}  // namespace spnseq::crf
