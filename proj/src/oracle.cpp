#include "spnseq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spnseq/error.hpp"

namespace spnseq::oracle {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      carry_ += (sum_ - t) + v;
    else
      carry_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

std::uint64_t checked_pow(std::uint64_t base, std::size_t exponent, std::uint64_t cap) {
  std::uint64_t result = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    result *= base;
    if (result > cap) return cap + 1;
  }
  return result;
}

// One hidden variable of the tree, listed in preorder.
struct HiddenVariable {
  int depth = 0;     // 1..L
  long parent = -1;  // index into the variable list, -1 for children of the label
  int child = 0;     // position among its parent's children
};

std::vector<HiddenVariable> hidden_variables(const spn::SpnTopology& topology) {
  std::vector<HiddenVariable> vars;
  const auto visit = [&](auto&& self, long parent, int depth) -> void {
    for (int c = 0; c < topology.children_per_parent; ++c) {
      vars.push_back({depth, parent, c});
      const long me = static_cast<long>(vars.size()) - 1;
      if (depth < topology.num_layers) self(self, me, depth + 1);
    }
  };
  visit(visit, -1, 1);
  return vars;
}

// Canonical prefix index: label, then (child * H + state) per layer in base I*H.
std::size_t extend_index(const spn::SpnTopology& topology, std::size_t parent_index, int child,
                         int state) {
  return parent_index * static_cast<std::size_t>(topology.children_per_parent) *
             static_cast<std::size_t>(topology.states_per_hidden) +
         static_cast<std::size_t>(child) * static_cast<std::size_t>(topology.states_per_hidden) +
         static_cast<std::size_t>(state);
}

// Every hidden assignment for one label, as a callback on (log product, states).
template <class Visit>
void enumerate_assignments(const spn::SpnTopology& topology, const spn::SpnWeights& weights,
                           std::span<const double> leaf_dots, int label, Visit&& visit) {
  const auto vars = hidden_variables(topology);
  const std::size_t n = vars.size();
  std::vector<std::span<const double>> per_depth;
  for (int l = 0; l <= topology.num_layers; ++l)
    per_depth.push_back(weights.prefix_weights(topology, l));

  const double label_term = per_depth[0][static_cast<std::size_t>(label)];
  std::vector<int> states(n, 0);
  std::vector<std::size_t> index(n, 0);
  std::vector<double> cumulative(n, 0.0);

  const auto refresh = [&](std::size_t from) {
    for (std::size_t j = from; j < n; ++j) {
      const auto& v = vars[j];
      const std::size_t parent_index =
          v.parent < 0 ? static_cast<std::size_t>(label) : index[static_cast<std::size_t>(v.parent)];
      index[j] = extend_index(topology, parent_index, v.child, states[j]);
      double term = per_depth[static_cast<std::size_t>(v.depth)][index[j]];
      if (v.depth == topology.num_layers) term += leaf_dots[index[j]];
      cumulative[j] = (j == 0 ? label_term : cumulative[j - 1]) + term;
    }
  };

  refresh(0);
  while (true) {
    visit(cumulative[n - 1], std::span<const int>(states));
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++states[k] < topology.states_per_hidden) break;
      states[k] = 0;
      if (k == 0) return;
    }
    refresh(k);
  }
}

std::vector<double> leaf_dot_table(const spn::SpnTopology& topology,
                                   const spn::SpnWeights& weights, std::span<const double> x) {
  const std::size_t d = static_cast<std::size_t>(topology.input_dim);
  const std::size_t leaves = (weights.values.size() - topology.leaf_offset()) / d;
  std::vector<double> dots(leaves, 0.0);
  const double* base = weights.values.data() + topology.leaf_offset();
  for (std::size_t r = 0; r < leaves; ++r)
    for (std::size_t j = 0; j < d; ++j) dots[r] += base[r * d + j] * x[j];
  return dots;
}

void check_spn_budget(const spn::SpnTopology& topology, ExhaustiveBudget budget) {
  const std::uint64_t configs =
      checked_pow(static_cast<std::uint64_t>(topology.states_per_hidden),
                  topology.hidden_variable_count(), budget.max_configurations);
  if (configs > budget.max_configurations)
    throw BudgetError("hidden configuration count exceeds the exhaustive budget of " +
                      std::to_string(budget.max_configurations));
}

// Upper bound on the log product of any assignment, used to scale the sum.
double log_bound(const spn::SpnTopology& topology, const spn::SpnWeights& weights,
                 std::span<const double> leaf_dots, int label) {
  double bound = weights.values[static_cast<std::size_t>(label)];
  const auto vars = hidden_variables(topology);
  double max_leaf = *std::max_element(leaf_dots.begin(), leaf_dots.end());
  for (const auto& v : vars) {
    const auto w = weights.prefix_weights(topology, v.depth);
    bound += *std::max_element(w.begin(), w.end());
    if (v.depth == topology.num_layers) bound += max_leaf;
  }
  return bound;
}

void check_spn_inputs(const spn::SpnTopology& topology, const spn::SpnWeights& weights,
                      std::span<const double> x) {
  topology.validate();
  weights.check(topology);
  if (x.size() != static_cast<std::size_t>(topology.input_dim))
    throw InputError("input dimension mismatch");
  if (topology.semiring != Semiring::SumProduct)
    throw ContractError("the exhaustive SPN reference sums over hidden states");
}

void check_chain_budget(std::size_t labels, std::size_t length, ExhaustiveBudget budget) {
  if (checked_pow(labels, length, budget.max_configurations) > budget.max_configurations)
    throw BudgetError("label sequence count exceeds the exhaustive budget of " +
                      std::to_string(budget.max_configurations));
}

// Visits every label sequence of the given length in lexicographic order.
template <class Visit>
void enumerate_sequences(int num_labels, std::size_t length, Visit&& visit) {
  std::vector<int> labels(length, 0);
  while (true) {
    visit(std::span<const int>(labels));
    std::size_t k = length;
    while (k > 0) {
      --k;
      if (++labels[k] < num_labels) break;
      labels[k] = 0;
      if (k == 0) return;
    }
  }
}

std::vector<double> window_of(const Observations& obs, int start, int width, int dim) {
  std::vector<double> out;
  for (int k = 0; k < width; ++k) {
    const int t = start + k;
    for (int j = 0; j < dim; ++j)
      out.push_back(t >= 0 && t < static_cast<int>(obs.size())
                        ? obs[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]
                        : 0.0);
  }
  return out;
}

// q_values of every chain factor at every position where it applies.
struct ChainLocalTables {
  std::vector<std::vector<std::vector<double>>> q;  // [factor][t] -> label-gram scores
};

ChainLocalTables chain_local_tables(const crf::ChainModel& model, const Observations& obs) {
  ChainLocalTables tables;
  for (const auto& factor : model.local_factors) {
    std::vector<std::vector<double>> per_t(obs.size());
    for (std::size_t t = 0; t < obs.size(); ++t) {
      if (static_cast<int>(t) < factor.gram - 1) continue;
      // The label-gram covers positions t-n+1..t; the window is centred on it.
      const int span_start = static_cast<int>(t) - factor.gram + 1;
      const int shift = factor.gram - factor.window;
      const int start = span_start + (shift >= 0 ? shift / 2 : -((-shift + 1) / 2));
      per_t[t] = spn::evaluate(factor.topology, factor.weights,
                               window_of(obs, start, factor.window, model.feature_dim))
                     .q_values;
    }
    tables.q.push_back(std::move(per_t));
  }
  return tables;
}

double chain_score_with(const crf::ChainModel& model, const ChainLocalTables& tables,
                        std::span<const int> labels) {
  double score = 0.0;
  std::vector<int> gram;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    for (const auto& tf : model.transitions) {
      const int n = tf.dictionary.order();
      gram.clear();
      for (int k = n - 1; k >= 0; --k) {
        const long pos = static_cast<long>(t) - k;
        gram.push_back(pos < 0 ? model.num_labels : labels[static_cast<std::size_t>(pos)]);
      }
      const long idx = tf.dictionary.index_of(gram);
      if (idx >= 0) score += tf.weights[static_cast<std::size_t>(idx)];
    }
    for (std::size_t f = 0; f < model.local_factors.size(); ++f) {
      const int n = model.local_factors[f].gram;
      if (static_cast<int>(t) < n - 1) continue;
      std::size_t g = 0;
      for (int k = n - 1; k >= 0; --k)
        g = g * static_cast<std::size_t>(model.num_labels) +
            static_cast<std::size_t>(labels[t - static_cast<std::size_t>(k)]);
      score += tables.q[f][t][g];
    }
  }
  return score;
}

std::vector<std::vector<double>> memm_position_scores(const memm::MemmModel& model,
                                                      const Observations& obs) {
  std::vector<std::vector<double>> q(obs.size());
  const int before = model.window / 2;
  for (std::size_t t = 0; t < obs.size(); ++t)
    q[t] = spn::evaluate(model.topology, model.spn_weights,
                         window_of(obs, static_cast<int>(t) - before, model.window,
                                   model.feature_dim))
               .q_values;
  return q;
}

double memm_log_prob_with(const memm::MemmModel& model, const std::vector<std::vector<double>>& q,
                          std::span<const int> labels) {
  double total = 0.0;
  std::vector<double> scores(static_cast<std::size_t>(model.num_labels));
  for (std::size_t t = 0; t < labels.size(); ++t) {
    for (int y = 0; y < model.num_labels; ++y) {
      double s = q[t][static_cast<std::size_t>(y)];
      for (int m = 1; m < model.order; ++m) {
        const long pos = static_cast<long>(t) - m;
        const int prev = pos < 0 ? model.num_labels : labels[static_cast<std::size_t>(pos)];
        s += model.history_weights[(static_cast<std::size_t>(m - 1) * (model.num_labels + 1) +
                                    static_cast<std::size_t>(prev)) *
                                       static_cast<std::size_t>(model.num_labels) +
                                   static_cast<std::size_t>(y)];
      }
      scores[static_cast<std::size_t>(y)] = s;
    }
    const double peak = *std::max_element(scores.begin(), scores.end());
    CompensatedSum z;
    for (double s : scores) z.add(std::exp(s - peak));
    total += scores[static_cast<std::size_t>(labels[t])] - peak - std::log(z.value());
  }
  return total;
}

}  // namespace

std::vector<double> spn_brute_force(const spn::SpnTopology& topology,
                                    const spn::SpnWeights& weights, std::span<const double> x,
                                    ExhaustiveBudget budget) {
  check_spn_inputs(topology, weights, x);
  check_spn_budget(topology, budget);
  const auto dots = leaf_dot_table(topology, weights, x);
  std::vector<double> q(static_cast<std::size_t>(topology.num_labels));
  for (int y = 0; y < topology.num_labels; ++y) {
    const double bound = log_bound(topology, weights, dots, y);
    CompensatedSum sum;
    enumerate_assignments(topology, weights, dots, y,
                          [&](double log_product, std::span<const int>) {
                            sum.add(std::exp(log_product - bound));
                          });
    q[static_cast<std::size_t>(y)] = std::exp(bound) * sum.value();
  }
  return q;
}

double spn_brute_force_marginal(const spn::SpnTopology& topology, const spn::SpnWeights& weights,
                                std::span<const double> x, const spn::PathPrefix& prefix,
                                ExhaustiveBudget budget) {
  const auto q = spn_brute_force(topology, weights, x, budget);
  double z = 0.0;
  for (double v : q) z += v;

  // Preorder positions of the variables on the prefix path.
  const auto vars = hidden_variables(topology);
  std::vector<std::pair<std::size_t, int>> required;
  long parent = -1;
  for (const auto& [child, state] : prefix.per_layer) {
    for (std::size_t j = 0; j < vars.size(); ++j)
      if (vars[j].parent == parent && vars[j].child == child) {
        required.emplace_back(j, state);
        parent = static_cast<long>(j);
        break;
      }
  }
  if (required.size() != prefix.per_layer.size()) throw StructuralError("prefix not in topology");

  const auto dots = leaf_dot_table(topology, weights, x);
  const double bound = log_bound(topology, weights, dots, prefix.label);
  CompensatedSum sum;
  enumerate_assignments(topology, weights, dots, prefix.label,
                        [&](double log_product, std::span<const int> states) {
                          for (const auto& [j, s] : required)
                            if (states[j] != s) return;
                          sum.add(std::exp(log_product - bound));
                        });
  return std::exp(bound) * sum.value() / z;
}

double chain_score(const crf::ChainModel& model, const Observations& observations,
                   std::span<const int> labels) {
  if (labels.size() != observations.size()) throw InputError("label/observation length mismatch");
  return chain_score_with(model, chain_local_tables(model, observations), labels);
}

ChainEnumeration chain_brute_force(const crf::ChainModel& model, const Observations& observations,
                                   ExhaustiveBudget budget) {
  model.validate();
  validate_observations(observations, model.feature_dim);
  const std::size_t T = observations.size();
  const auto Y = static_cast<std::size_t>(model.num_labels);
  check_chain_budget(Y, T, budget);
  const auto tables = chain_local_tables(model, observations);

  ChainEnumeration out;
  out.max_score = -std::numeric_limits<double>::infinity();
  enumerate_sequences(model.num_labels, T, [&](std::span<const int> labels) {
    const double s = chain_score_with(model, tables, labels);
    out.scores.push_back(s);
    if (s > out.max_score) {
      out.max_score = s;
      out.argmax.assign(labels.begin(), labels.end());
    }
  });

  CompensatedSum z;
  for (double s : out.scores) z.add(std::exp(s - out.max_score));
  out.log_partition = out.max_score + std::log(z.value());

  out.label_marginals.assign(T * Y, 0.0);
  std::size_t i = 0;
  enumerate_sequences(model.num_labels, T, [&](std::span<const int> labels) {
    const double p = std::exp(out.scores[i++] - out.log_partition);
    for (std::size_t t = 0; t < T; ++t)
      out.label_marginals[t * Y + static_cast<std::size_t>(labels[t])] += p;
  });
  return out;
}

double memm_log_prob(const memm::MemmModel& model, const Observations& observations,
                     std::span<const int> labels) {
  if (labels.size() != observations.size()) throw InputError("label/observation length mismatch");
  return memm_log_prob_with(model, memm_position_scores(model, observations), labels);
}

MemmEnumeration memm_brute_force(const memm::MemmModel& model, const Observations& observations,
                                 ExhaustiveBudget budget) {
  model.validate();
  validate_observations(observations, model.feature_dim);
  check_chain_budget(static_cast<std::size_t>(model.num_labels), observations.size(), budget);
  const auto q = memm_position_scores(model, observations);

  MemmEnumeration out;
  out.max_log_prob = -std::numeric_limits<double>::infinity();
  CompensatedSum total;
  enumerate_sequences(model.num_labels, observations.size(), [&](std::span<const int> labels) {
    const double lp = memm_log_prob_with(model, q, labels);
    total.add(std::exp(lp));
    if (lp > out.max_log_prob) {
      out.max_log_prob = lp;
      out.argmax.assign(labels.begin(), labels.end());
    }
  });
  out.total_probability = total.value();
  return out;
}

}  // namespace spnseq::oracle
