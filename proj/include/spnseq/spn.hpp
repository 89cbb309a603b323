#pragma once

// Tree-structured sum-product network classifier.
//
// The network is a regular tree: the root is the label y, every node at
// depth l < L has `children_per_parent` hidden children, and every hidden
// variable takes one of `states_per_hidden` states. A path prefix S_{0:l}
// is the label plus (child index, state) for each layer down to depth l.
// Each prefix carries a scalar log-weight and each full-length prefix a
// linear feature weight vector, so
//
//   log Q(y, x) = w(y) + sum_c reduce_s [ w(y,c,s) + sum_c' reduce_s' [ ... + w_leaf . x ] ]
//
// where `reduce` is log-sum-exp (sum-product) or max (max-product).
//
// Prefixes of depth l are indexed canonically (label-major, then each
// layer's child index, then its state):
//   index = label * (I*H)^l + sum_p (child_p * H + state_p) * (I*H)^(l-p)
// so the children of prefix i are i * I*H + c * H + s.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spnseq/kernels.hpp"
#include "spnseq/logspace.hpp"

namespace spnseq::spn {

struct SpnTopology {
  int num_layers = 1;           // L
  int children_per_parent = 2;  // I
  int states_per_hidden = 2;    // H
  int num_labels = 2;           // Y
  int input_dim = 1;
  Semiring semiring = Semiring::SumProduct;

  // Throws StructuralError.
  void validate() const;

  std::size_t branching() const noexcept {
    return static_cast<std::size_t>(children_per_parent) *
           static_cast<std::size_t>(states_per_hidden);
  }
  // Y * (I*H)^depth
  std::size_t prefix_count(int depth) const;
  // sum_{l=1..L} I^l
  std::size_t hidden_variable_count() const;
  std::size_t leaf_count() const { return prefix_count(num_layers); }

  // Offsets into the flat weight vector: prefix weights of depth 0..L in
  // canonical order, then one input_dim block per leaf prefix.
  std::size_t prefix_offset(int depth) const;
  std::size_t leaf_offset() const;
  std::size_t parameter_count() const;

  friend bool operator==(const SpnTopology&, const SpnTopology&) = default;
};

struct PathPrefix {
  int label = 0;
  std::vector<std::pair<int, int>> per_layer;  // (child index, state)

  int depth() const noexcept { return static_cast<int>(per_layer.size()); }

  friend bool operator==(const PathPrefix&, const PathPrefix&) = default;
};

// Canonical index of `prefix` among the prefixes of its depth.
std::size_t prefix_index(const SpnTopology& topology, const PathPrefix& prefix);
PathPrefix prefix_at(const SpnTopology& topology, int depth, std::size_t index);

// Every prefix of the given depth, in canonical order.
std::vector<PathPrefix> enumerate_prefixes(const SpnTopology& topology, int depth);

struct SpnWeights {
  std::vector<double> values;

  static SpnWeights zeros(const SpnTopology& topology);
  // Prefix weights zero, leaf weights uniform in [-1/sqrt(D), 1/sqrt(D)].
  static SpnWeights initialized(const SpnTopology& topology, std::mt19937_64& rng);

  std::span<double> prefix_weights(const SpnTopology& topology, int depth);
  std::span<const double> prefix_weights(const SpnTopology& topology, int depth) const;
  // Row-major (leaf_count x input_dim).
  std::span<double> leaf_weights(const SpnTopology& topology);
  std::span<const double> leaf_weights(const SpnTopology& topology) const;

  double& prefix_weight(const SpnTopology& topology, const PathPrefix& prefix);
  double prefix_weight(const SpnTopology& topology, const PathPrefix& prefix) const;
  std::span<double> leaf_weight(const SpnTopology& topology, const PathPrefix& prefix);
  std::span<const double> leaf_weight(const SpnTopology& topology, const PathPrefix& prefix) const;

  // Throws StructuralError if the size does not match, NumericError if any
  // value is not finite.
  void check(const SpnTopology& topology) const;
};

struct SpnEvaluation {
  Semiring semiring = Semiring::SumProduct;
  std::vector<double> q_values;  // log Q(y, x)
  // node_values[l][i]: log value of the subtree rooted at prefix i of depth l.
  std::vector<std::vector<double>> node_values;
  // sum_values[l][i * I + c]: reduction over the states of child c of prefix i.
  std::vector<std::vector<double>> sum_values;
  double partition = 0.0;  // log Z(x) (or max_y under max-product)
};

// Instrumentation for the cost of one evaluation.
struct SpnCounters {
  std::size_t sum_nodes = 0;
  std::size_t leaf_dot_products = 0;
};

SpnEvaluation evaluate(const SpnTopology& topology, const SpnWeights& weights,
                       std::span<const double> x, SpnCounters* counters = nullptr,
                       ExecPolicy policy = ExecPolicy::Serial);

// p(y | x). Throws ContractError for max-product evaluations.
std::vector<double> posterior(const SpnEvaluation& evaluation);

// grad += scale * sum_y cotangent[y] * d log Q(y, x) / d w.
// Under max-product the derivative follows the selected (lowest index)
// state of every max node.
void accumulate_root_gradient(const SpnTopology& topology, std::span<const double> x,
                              const SpnEvaluation& evaluation,
                              std::span<const double> cotangent, SpnWeights& grad,
                              double scale = 1.0, ExecPolicy policy = ExecPolicy::Serial);

struct SpnGradient {
  SpnWeights gradient;
  double log_likelihood = 0.0;
};

// d log p(observed | x) / d w. Sum-product only.
SpnGradient gradient(const SpnTopology& topology, const SpnWeights& weights,
                     std::span<const double> x, int observed_label);

// Posterior probability that the hidden path takes the values in `prefix`.
double marginal_hidden(const SpnTopology& topology, const SpnWeights& weights,
                       std::span<const double> x, const PathPrefix& prefix);

}  // namespace spnseq::spn
