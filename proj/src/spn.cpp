#include "spnseq/spn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spnseq/error.hpp"

namespace spnseq::spn {

namespace {

std::size_t checked_power(std::size_t base, int exponent) {
  std::size_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && result > std::numeric_limits<std::size_t>::max() / base)
      throw StructuralError("topology is too large to index");
    result *= base;
  }
  return result;
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

void SpnTopology::validate() const {
  if (num_layers < 1) throw StructuralError("num_layers must be >= 1");
  if (children_per_parent < 1) throw StructuralError("children_per_parent must be >= 1");
  if (states_per_hidden < 1) throw StructuralError("states_per_hidden must be >= 1");
  if (num_labels < 1) throw StructuralError("num_labels must be >= 1");
  if (input_dim < 1) throw StructuralError("input_dim must be >= 1");
  (void)parameter_count();
}

std::size_t SpnTopology::prefix_count(int depth) const {
  if (depth < 0 || depth > num_layers)
    throw StructuralError("prefix depth " + std::to_string(depth) + " outside [0, " +
                          std::to_string(num_layers) + "]");
  return static_cast<std::size_t>(num_labels) * checked_power(branching(), depth);
}

std::size_t SpnTopology::hidden_variable_count() const {
  std::size_t total = 0;
  for (int l = 1; l <= num_layers; ++l)
    total += checked_power(static_cast<std::size_t>(children_per_parent), l);
  return total;
}

std::size_t SpnTopology::prefix_offset(int depth) const {
  std::size_t offset = 0;
  for (int l = 0; l < depth; ++l) offset += prefix_count(l);
  return offset;
}

std::size_t SpnTopology::leaf_offset() const { return prefix_offset(num_layers) + leaf_count(); }

std::size_t SpnTopology::parameter_count() const {
  return leaf_offset() + leaf_count() * static_cast<std::size_t>(input_dim);
}

std::size_t prefix_index(const SpnTopology& topology, const PathPrefix& prefix) {
  if (prefix.label < 0 || prefix.label >= topology.num_labels)
    throw StructuralError("prefix label out of range");
  if (prefix.depth() > topology.num_layers) throw StructuralError("prefix deeper than topology");
  std::size_t index = static_cast<std::size_t>(prefix.label);
  for (auto [child, state] : prefix.per_layer) {
    if (child < 0 || child >= topology.children_per_parent)
      throw StructuralError("prefix child index out of range");
    if (state < 0 || state >= topology.states_per_hidden)
      throw StructuralError("prefix state out of range");
    index = index * topology.branching() +
            static_cast<std::size_t>(child) * topology.states_per_hidden +
            static_cast<std::size_t>(state);
  }
  return index;
}

PathPrefix prefix_at(const SpnTopology& topology, int depth, std::size_t index) {
  if (index >= topology.prefix_count(depth)) throw StructuralError("prefix index out of range");
  PathPrefix prefix;
  prefix.per_layer.resize(static_cast<std::size_t>(depth));
  const std::size_t b = topology.branching();
  const auto h = static_cast<std::size_t>(topology.states_per_hidden);
  for (int l = depth; l >= 1; --l) {
    const std::size_t digit = index % b;
    index /= b;
    prefix.per_layer[static_cast<std::size_t>(l - 1)] = {static_cast<int>(digit / h),
                                                         static_cast<int>(digit % h)};
  }
  prefix.label = static_cast<int>(index);
  return prefix;
}

std::vector<PathPrefix> enumerate_prefixes(const SpnTopology& topology, int depth) {
  const std::size_t count = topology.prefix_count(depth);
  std::vector<PathPrefix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(prefix_at(topology, depth, i));
  return out;
}

SpnWeights SpnWeights::zeros(const SpnTopology& topology) {
  topology.validate();
  return SpnWeights{std::vector<double>(topology.parameter_count(), 0.0)};
}

SpnWeights SpnWeights::initialized(const SpnTopology& topology, std::mt19937_64& rng) {
  SpnWeights weights = zeros(topology);
  const double a = 1.0 / std::sqrt(static_cast<double>(topology.input_dim));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& w : weights.leaf_weights(topology)) w = dist(rng);
  return weights;
}

std::span<double> SpnWeights::prefix_weights(const SpnTopology& topology, int depth) {
  return std::span<double>(values).subspan(topology.prefix_offset(depth),
                                           topology.prefix_count(depth));
}

std::span<const double> SpnWeights::prefix_weights(const SpnTopology& topology, int depth) const {
  return std::span<const double>(values).subspan(topology.prefix_offset(depth),
                                                 topology.prefix_count(depth));
}

std::span<double> SpnWeights::leaf_weights(const SpnTopology& topology) {
  return std::span<double>(values).subspan(topology.leaf_offset());
}

std::span<const double> SpnWeights::leaf_weights(const SpnTopology& topology) const {
  return std::span<const double>(values).subspan(topology.leaf_offset());
}

double& SpnWeights::prefix_weight(const SpnTopology& topology, const PathPrefix& prefix) {
  return prefix_weights(topology, prefix.depth())[prefix_index(topology, prefix)];
}

double SpnWeights::prefix_weight(const SpnTopology& topology, const PathPrefix& prefix) const {
  return prefix_weights(topology, prefix.depth())[prefix_index(topology, prefix)];
}

std::span<double> SpnWeights::leaf_weight(const SpnTopology& topology, const PathPrefix& prefix) {
  if (prefix.depth() != topology.num_layers)
    throw StructuralError("leaf weights exist only for full-length prefixes");
  const auto d = static_cast<std::size_t>(topology.input_dim);
  return leaf_weights(topology).subspan(prefix_index(topology, prefix) * d, d);
}

std::span<const double> SpnWeights::leaf_weight(const SpnTopology& topology,
                                                const PathPrefix& prefix) const {
  if (prefix.depth() != topology.num_layers)
    throw StructuralError("leaf weights exist only for full-length prefixes");
  const auto d = static_cast<std::size_t>(topology.input_dim);
  return leaf_weights(topology).subspan(prefix_index(topology, prefix) * d, d);
}

void SpnWeights::check(const SpnTopology& topology) const {
  if (values.size() != topology.parameter_count())
    throw StructuralError("weight vector has " + std::to_string(values.size()) +
                          " entries, topology needs " +
                          std::to_string(topology.parameter_count()));
  check_finite(values, "SPN weight");
}

SpnEvaluation evaluate(const SpnTopology& topology, const SpnWeights& weights,
                       std::span<const double> x, SpnCounters* counters, ExecPolicy policy) {
  topology.validate();
  if (x.size() != static_cast<std::size_t>(topology.input_dim))
    throw InputError("input has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(topology.input_dim));
  weights.check(topology);
  check_finite(x, "SPN input");

  const int depth_max = topology.num_layers;
  const std::size_t branch = topology.branching();
  const auto children = static_cast<std::size_t>(topology.children_per_parent);
  const auto states = static_cast<std::size_t>(topology.states_per_hidden);

  SpnEvaluation eval;
  eval.semiring = topology.semiring;
  eval.node_values.resize(static_cast<std::size_t>(depth_max) + 1);
  eval.sum_values.resize(static_cast<std::size_t>(depth_max));

  auto& leaves = eval.node_values[static_cast<std::size_t>(depth_max)];
  leaves.resize(topology.leaf_count());
  kernels::leaf_scores(policy, weights.leaf_weights(topology),
                       weights.prefix_weights(topology, depth_max), x, leaves);
  if (counters) counters->leaf_dot_products += leaves.size();

  for (int l = depth_max - 1; l >= 0; --l) {
    const auto& below = eval.node_values[static_cast<std::size_t>(l) + 1];
    const auto bias = weights.prefix_weights(topology, l);
    auto& values = eval.node_values[static_cast<std::size_t>(l)];
    auto& sums = eval.sum_values[static_cast<std::size_t>(l)];
    values.resize(bias.size());
    sums.resize(bias.size() * children);
    for (std::size_t i = 0; i < bias.size(); ++i) {
      double total = bias[i];
      for (std::size_t c = 0; c < children; ++c) {
        const std::span<const double> group(below.data() + i * branch + c * states, states);
        const double reduced = semiring_reduce(topology.semiring, group);
        sums[i * children + c] = reduced;
        total += reduced;
      }
      values[i] = total;
    }
    if (counters) counters->sum_nodes += sums.size();
  }

  eval.q_values = eval.node_values[0];
  eval.partition = semiring_reduce(topology.semiring, eval.q_values);
  if (!std::isfinite(eval.partition)) throw NumericError("SPN partition is not finite");
  return eval;
}

std::vector<double> posterior(const SpnEvaluation& evaluation) {
  if (evaluation.semiring != Semiring::SumProduct)
    throw ContractError("posterior is undefined for a max-product evaluation");
  std::vector<double> p(evaluation.q_values.size());
  for (std::size_t y = 0; y < p.size(); ++y)
    p[y] = std::exp(evaluation.q_values[y] - evaluation.partition);
  return p;
}

void accumulate_root_gradient(const SpnTopology& topology, std::span<const double> x,
                              const SpnEvaluation& evaluation,
                              std::span<const double> cotangent, SpnWeights& grad,
                              double scale, ExecPolicy policy) {
  if (cotangent.size() != static_cast<std::size_t>(topology.num_labels))
    throw InputError("cotangent size does not match the number of labels");
  if (grad.values.size() != topology.parameter_count())
    throw StructuralError("gradient buffer does not match topology");

  const std::size_t branch = topology.branching();
  const auto children = static_cast<std::size_t>(topology.children_per_parent);
  const auto states = static_cast<std::size_t>(topology.states_per_hidden);
  const bool use_max = evaluation.semiring == Semiring::MaxProduct;

  // Downward messages: d[i] = scale * sum_y cot[y] * d log Q(y) / d value(prefix i).
  std::vector<double> down(cotangent.begin(), cotangent.end());
  for (double& v : down) v *= scale;

  for (int l = 0;; ++l) {
    auto bias_grad = grad.prefix_weights(topology, l);
    for (std::size_t i = 0; i < down.size(); ++i) bias_grad[i] += down[i];
    if (l == topology.num_layers) break;

    const auto& below = evaluation.node_values[static_cast<std::size_t>(l) + 1];
    const auto& sums = evaluation.sum_values[static_cast<std::size_t>(l)];
    std::vector<double> next(below.size(), 0.0);
    for (std::size_t i = 0; i < down.size(); ++i) {
      if (down[i] == 0.0) continue;
      for (std::size_t c = 0; c < children; ++c) {
        const std::size_t base = i * branch + c * states;
        const double reduced = sums[i * children + c];
        if (use_max) {
          std::size_t best = 0;
          for (std::size_t s = 1; s < states; ++s)
            if (below[base + s] > below[base + best]) best = s;
          next[base + best] = down[i];
        } else {
          for (std::size_t s = 0; s < states; ++s)
            next[base + s] = down[i] * std::exp(below[base + s] - reduced);
        }
      }
    }
    down = std::move(next);
  }

  kernels::outer_accumulate(policy, down, x, grad.leaf_weights(topology));
}

SpnGradient gradient(const SpnTopology& topology, const SpnWeights& weights,
                     std::span<const double> x, int observed_label) {
  if (topology.semiring != Semiring::SumProduct)
    throw ContractError("conditional likelihood gradient requires the sum-product semiring");
  if (observed_label < 0 || observed_label >= topology.num_labels)
    throw InputError("observed label out of range");
  const SpnEvaluation eval = evaluate(topology, weights, x);
  std::vector<double> cot = posterior(eval);
  for (double& c : cot) c = -c;
  cot[static_cast<std::size_t>(observed_label)] += 1.0;

  SpnGradient out{SpnWeights::zeros(topology),
                  eval.q_values[static_cast<std::size_t>(observed_label)] - eval.partition};
  accumulate_root_gradient(topology, x, eval, cot, out.gradient);
  return out;
}

double marginal_hidden(const SpnTopology& topology, const SpnWeights& weights,
                       std::span<const double> x, const PathPrefix& prefix) {
  if (topology.semiring != Semiring::SumProduct)
    throw ContractError("hidden marginals require the sum-product semiring");
  (void)prefix_index(topology, prefix);
  const SpnEvaluation eval = evaluate(topology, weights, x);

  const auto children = static_cast<std::size_t>(topology.children_per_parent);
  std::size_t index = static_cast<std::size_t>(prefix.label);
  double log_p = eval.q_values[index] - eval.partition;
  for (std::size_t l = 0; l < prefix.per_layer.size(); ++l) {
    const auto [child, state] = prefix.per_layer[l];
    const std::size_t child_index = index * topology.branching() +
                                    static_cast<std::size_t>(child) * topology.states_per_hidden +
                                    static_cast<std::size_t>(state);
    log_p += eval.node_values[l + 1][child_index] -
             eval.sum_values[l][index * children + static_cast<std::size_t>(child)];
    index = child_index;
  }
  return std::exp(log_p);
}

}  // namespace spnseq::spn
