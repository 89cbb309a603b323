#include "spnseq/chain_crf.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "spnseq/error.hpp"
#include "spnseq/logspace.hpp"

namespace spnseq::crf {

namespace {

constexpr int kMaxOrder = 3;

std::size_t ipow(std::size_t base, int exponent) {
  std::size_t result = 1;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

// The K + 1 extended symbols read by the edge (state s', label y) when s'
// holds `real` real labels.
void edge_gram(std::size_t prev_state, int label, int history, int real, int num_labels,
               std::span<int> out) {
  const int pads = history - real;
  for (int j = history - 1; j >= 0; --j) {
    out[static_cast<std::size_t>(j)] =
        j < pads ? num_labels : static_cast<int>(prev_state % static_cast<std::size_t>(num_labels));
    prev_state /= static_cast<std::size_t>(num_labels);
  }
  out[static_cast<std::size_t>(history)] = label;
}

// Labels y_{t-n+1..t} with START before the sequence start.
std::vector<int> observed_gram(std::span<const int> labels, std::size_t t, int n, int start) {
  std::vector<int> gram(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const long pos = static_cast<long>(t) - (n - 1) + k;
    gram[static_cast<std::size_t>(k)] = pos < 0 ? start : labels[static_cast<std::size_t>(pos)];
  }
  return gram;
}

// Base-Y index of the n real labels ending at t (requires t >= n - 1).
std::size_t gram_label_index(std::span<const int> labels, std::size_t t, int n, int num_labels) {
  std::size_t index = 0;
  for (int k = n - 1; k >= 0; --k)
    index = index * static_cast<std::size_t>(num_labels) +
            static_cast<std::size_t>(labels[t - static_cast<std::size_t>(k)]);
  return index;
}

int window_start(std::size_t t, const LocalFactor& factor) {
  return static_cast<int>(t) - factor.gram + 1 + floor_div(factor.gram - factor.window, 2);
}

std::vector<double> factor_window(const ChainModel& model, const LocalFactor& factor,
                                  const Observations& observations, std::size_t t) {
  return observation_window(observations, window_start(t, factor), factor.window,
                            model.feature_dim);
}

double accumulate_gradient_impl(const ChainModel& model, const LabeledSequence& sequence,
                                ChainModel& grad) {
  sequence.validate(model.num_labels, model.feature_dim);
  const ChainPotentials pot = compute_potentials(model, sequence.observations);
  const ChainMessages msg = forward_backward(pot);
  const std::size_t T = pot.length;
  const std::size_t S = pot.states;
  const auto Y = static_cast<std::size_t>(model.num_labels);
  const int K = pot.history;
  const std::size_t stride = S / Y;
  const double log_z = msg.log_partition;

  // Input-independent n-gram weights: observed minus expected counts.
  std::vector<int> ext(static_cast<std::size_t>(K) + 1);
  for (std::size_t f = 0; f < model.transitions.size(); ++f) {
    const auto& dict = model.transitions[f].dictionary;
    auto& g = grad.transitions[f].weights;
    for (std::size_t t = 0; t < T; ++t) {
      const long idx =
          dict.index_of(observed_gram(sequence.labels, t, dict.order(), model.num_labels));
      if (idx >= 0) g[static_cast<std::size_t>(idx)] += 1.0;
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t active_prev = t == 0 ? 1 : pot.active_states(t - 1);
    const auto edge = pot.edge_table(t);
    const int real = static_cast<int>(std::min<std::size_t>(t, static_cast<std::size_t>(K)));
    for (std::size_t sp = 0; sp < active_prev; ++sp) {
      const double a = t == 0 ? 0.0 : msg.alpha[(t - 1) * S + sp];
      for (std::size_t y = 0; y < Y; ++y) {
        const std::size_t next = (sp % stride) * Y + y;
        const double p = std::exp(a + edge[sp * Y + y] + msg.beta[t * S + next] - log_z);
        if (p == 0.0) continue;
        edge_gram(sp, static_cast<int>(y), K, real, model.num_labels, ext);
        for (std::size_t f = 0; f < model.transitions.size(); ++f) {
          const auto& dict = model.transitions[f].dictionary;
          const std::span<const int> gram(ext.data() + (K + 1 - dict.order()),
                                          static_cast<std::size_t>(dict.order()));
          const long idx = dict.index_of(gram);
          if (idx >= 0) grad.transitions[f].weights[static_cast<std::size_t>(idx)] -= p;
        }
      }
    }
  }

  // SPN factors: the root cotangent at position t is the observed label-gram
  // indicator minus the posterior mass of that label-gram. The posterior of
  // state s is exp(beta_local + local - log Z).
  for (std::size_t f = 0; f < model.local_factors.size(); ++f) {
    const auto& factor = model.local_factors[f];
    const auto grams = static_cast<std::size_t>(factor.topology.num_labels);
    std::vector<double> cot(grams);
    for (std::size_t t = static_cast<std::size_t>(factor.gram - 1); t < T; ++t) {
      std::fill(cot.begin(), cot.end(), 0.0);
      const std::size_t active = pot.active_states(t);
      for (std::size_t s = 0; s < active; ++s)
        cot[s % grams] -= std::exp(msg.beta_local[t * S + s] + pot.local[t * S + s] - log_z);
      cot[gram_label_index(sequence.labels, t, factor.gram, model.num_labels)] += 1.0;
      const auto window = factor_window(model, factor, sequence.observations, t);
      spn::accumulate_root_gradient(factor.topology, window, *pot.factor_evals[f][t], cot,
                                    grad.local_factors[f].weights);
    }
  }

  return sequence_score(model, sequence.observations, sequence.labels) - log_z;
}

}  // namespace

// ---------------------------------------------------------------------------
// NGramDictionary

NGramDictionary::NGramDictionary(int order, int num_labels, bool include_unseen)
    : order_(order), num_labels_(num_labels), include_unseen_(include_unseen) {
  if (order < 1 || order > kMaxOrder)
    throw StructuralError("n-gram order must be in [1, " + std::to_string(kMaxOrder) + "]");
  if (num_labels < 1) throw StructuralError("n-gram dictionary needs at least one label");
  table_.assign(ipow(static_cast<std::size_t>(num_labels) + 1, order), -1);
}

NGramDictionary NGramDictionary::dense(int order, int num_labels) {
  NGramDictionary dict(order, num_labels, true);
  const std::size_t base = static_cast<std::size_t>(num_labels) + 1;
  std::vector<int> gram(static_cast<std::size_t>(order));
  for (std::size_t code = 0; code < dict.table_.size(); ++code) {
    std::size_t c = code;
    for (int k = order - 1; k >= 0; --k) {
      gram[static_cast<std::size_t>(k)] = static_cast<int>(c % base);
      c /= base;
    }
    bool valid = gram.back() != num_labels;
    for (int k = 1; k < order && valid; ++k)
      if (gram[static_cast<std::size_t>(k - 1)] != num_labels &&
          gram[static_cast<std::size_t>(k)] == num_labels)
        valid = false;
    if (valid) dict.insert(gram);
  }
  return dict;
}

NGramDictionary NGramDictionary::from_sequences(int order, int num_labels,
                                                std::span<const LabeledSequence> sequences) {
  NGramDictionary dict(order, num_labels, false);
  for (const auto& seq : sequences)
    for (std::size_t t = 0; t < seq.labels.size(); ++t)
      dict.insert(observed_gram(seq.labels, t, order, num_labels));
  return dict;
}

std::size_t NGramDictionary::code(std::span<const int> gram) const {
  if (gram.size() != static_cast<std::size_t>(order_))
    throw InputError("n-gram length does not match dictionary order");
  std::size_t c = 0;
  bool seen_label = false;
  for (std::size_t k = 0; k < gram.size(); ++k) {
    const int sym = gram[k];
    if (sym < 0 || sym > num_labels_) throw InputError("n-gram symbol out of range");
    if (sym == num_labels_ && seen_label) throw InputError("START inside an n-gram");
    if (sym != num_labels_) seen_label = true;
    c = c * (static_cast<std::size_t>(num_labels_) + 1) + static_cast<std::size_t>(sym);
  }
  if (!seen_label || gram.back() == num_labels_)
    throw InputError("n-gram must end with a real label");
  return c;
}

long NGramDictionary::index_of(std::span<const int> gram) const {
  return table_[code(gram)];
}

std::size_t NGramDictionary::insert(std::span<const int> gram) {
  const std::size_t c = code(gram);
  if (table_[c] < 0) {
    table_[c] = static_cast<std::int32_t>(entries_.size());
    entries_.emplace_back(gram.begin(), gram.end());
  }
  return static_cast<std::size_t>(table_[c]);
}

// ---------------------------------------------------------------------------
// ChainModel

void ChainModel::validate() const {
  if (num_labels < 1) throw StructuralError("chain model needs at least one label");
  if (feature_dim < 1) throw StructuralError("chain model needs feature_dim >= 1");
  if (local_factors.empty() && transitions.empty())
    throw StructuralError("chain model has no factors");
  for (const auto& tf : transitions) {
    if (tf.dictionary.num_labels() != num_labels)
      throw StructuralError("n-gram dictionary label count mismatch");
    if (tf.weights.size() != tf.dictionary.size())
      throw StructuralError("n-gram weight count does not match dictionary");
    for (double w : tf.weights)
      if (!std::isfinite(w)) throw NumericError("non-finite transition weight");
  }
  for (const auto& lf : local_factors) {
    if (lf.window < 1) throw StructuralError("factor window must be >= 1");
    if (lf.gram < 1 || lf.gram > kMaxOrder)
      throw StructuralError("factor label-gram order must be in [1, 3]");
    if (static_cast<std::size_t>(lf.topology.num_labels) !=
        ipow(static_cast<std::size_t>(num_labels), lf.gram))
      throw StructuralError("SPN factor label space must be Y^n");
    if (lf.topology.input_dim != lf.window * feature_dim)
      throw StructuralError("SPN factor input_dim must be window * feature_dim");
    lf.topology.validate();
    lf.weights.check(lf.topology);
  }
}

int ChainModel::history_length() const {
  int k = 1;
  for (const auto& tf : transitions) k = std::max(k, tf.dictionary.order() - 1);
  for (const auto& lf : local_factors) k = std::max(k, lf.gram);
  return k;
}

std::size_t ChainModel::state_count() const {
  return ipow(static_cast<std::size_t>(num_labels), history_length());
}

std::size_t ChainModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& tf : transitions) total += tf.weights.size();
  for (const auto& lf : local_factors) total += lf.weights.values.size();
  return total;
}

std::vector<std::span<double>> ChainModel::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& tf : transitions) blocks.emplace_back(tf.weights);
  for (auto& lf : local_factors) blocks.emplace_back(lf.weights.values);
  return blocks;
}

std::vector<std::span<const double>> ChainModel::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const auto& tf : transitions) blocks.emplace_back(tf.weights);
  for (const auto& lf : local_factors) blocks.emplace_back(lf.weights.values);
  return blocks;
}

ChainModel ChainModel::zeros_like() const {
  ChainModel out = *this;
  for (auto block : out.parameter_blocks()) std::fill(block.begin(), block.end(), 0.0);
  return out;
}

double ChainModel::log_likelihood(const LabeledSequence& sequence) const {
  return sequence_log_likelihood(*this, sequence);
}

double ChainModel::accumulate_gradient(const LabeledSequence& sequence, ChainModel& grad) const {
  return accumulate_gradient_impl(*this, sequence, grad);
}

std::vector<int> ChainModel::decode(const Observations& observations) const {
  return viterbi(*this, observations).labels;
}

ChainModel make_chain_model(const ChainSpec& spec, std::span<const LabeledSequence> training,
                            std::uint64_t seed) {
  ChainModel model;
  model.num_labels = spec.num_labels;
  model.feature_dim = spec.feature_dim;
  if (spec.num_labels < 1 || spec.feature_dim < 1)
    throw StructuralError("chain model needs num_labels >= 1 and feature_dim >= 1");
  for (int order : spec.ngram_orders) {
    TransitionFactor tf;
    tf.dictionary = spec.sparse_ngrams
                        ? NGramDictionary::from_sequences(order, spec.num_labels, training)
                        : NGramDictionary::dense(order, spec.num_labels);
    tf.weights.assign(tf.dictionary.size(), 0.0);
    model.transitions.push_back(std::move(tf));
  }
  std::mt19937_64 rng(seed);
  for (const auto& shape : spec.factors) {
    if (shape.gram < 1 || shape.gram > kMaxOrder || shape.window < 1)
      throw StructuralError("factor shape must have window >= 1 and gram in [1, 3]");
    LocalFactor lf;
    lf.window = shape.window;
    lf.gram = shape.gram;
    lf.topology.num_layers = spec.layers;
    lf.topology.children_per_parent = spec.children;
    lf.topology.states_per_hidden = spec.states;
    lf.topology.num_labels =
        static_cast<int>(ipow(static_cast<std::size_t>(spec.num_labels), shape.gram));
    lf.topology.input_dim = shape.window * spec.feature_dim;
    lf.topology.semiring = spec.semiring;
    lf.weights = spn::SpnWeights::initialized(lf.topology, rng);
    model.local_factors.push_back(std::move(lf));
  }
  model.validate();
  return model;
}

// ---------------------------------------------------------------------------
// Potentials and messages

std::size_t ChainPotentials::active_states(std::size_t t) const {
  return ipow(labels, static_cast<int>(std::min<std::size_t>(t + 1, static_cast<std::size_t>(history))));
}

std::span<const double> ChainPotentials::edge_table(std::size_t t) const {
  return edges[std::min<std::size_t>(t, static_cast<std::size_t>(history))];
}

ChainPotentials compute_potentials(const ChainModel& model, const Observations& observations,
                                   ExecPolicy policy) {
  model.validate();
  validate_observations(observations, model.feature_dim);

  ChainPotentials pot;
  pot.length = observations.size();
  pot.history = model.history_length();
  pot.labels = static_cast<std::size_t>(model.num_labels);
  pot.states = model.state_count();
  const int K = pot.history;
  const std::size_t S = pot.states;
  const std::size_t Y = pot.labels;

  std::vector<int> ext(static_cast<std::size_t>(K) + 1);
  pot.edges.assign(static_cast<std::size_t>(K) + 1, std::vector<double>(S * Y, 0.0));
  for (int real = 0; real <= K; ++real) {
    auto& table = pot.edges[static_cast<std::size_t>(real)];
    const std::size_t active = ipow(Y, real);
    for (std::size_t sp = 0; sp < active; ++sp) {
      for (std::size_t y = 0; y < Y; ++y) {
        edge_gram(sp, static_cast<int>(y), K, real, model.num_labels, ext);
        double total = 0.0;
        for (const auto& tf : model.transitions) {
          const int n = tf.dictionary.order();
          const long idx = tf.dictionary.index_of(
              std::span<const int>(ext.data() + (K + 1 - n), static_cast<std::size_t>(n)));
          if (idx >= 0) total += tf.weights[static_cast<std::size_t>(idx)];
        }
        table[sp * Y + y] = total;
      }
    }
  }

  pot.factor_evals.resize(model.local_factors.size());
  for (std::size_t f = 0; f < model.local_factors.size(); ++f) {
    const auto& factor = model.local_factors[f];
    auto& evals = pot.factor_evals[f];
    evals.resize(pot.length);
    for (std::size_t t = static_cast<std::size_t>(factor.gram - 1); t < pot.length; ++t) {
      const auto window = factor_window(model, factor, observations, t);
      evals[t] = spn::evaluate(factor.topology, factor.weights, window, nullptr, policy);
    }
  }

  pot.local.assign(pot.length * S, 0.0);
  for (std::size_t t = 0; t < pot.length; ++t) {
    const std::size_t active = pot.active_states(t);
    for (std::size_t f = 0; f < model.local_factors.size(); ++f) {
      const auto& eval = pot.factor_evals[f][t];
      if (!eval) continue;
      const std::size_t grams = eval->q_values.size();
      for (std::size_t s = 0; s < active; ++s) pot.local[t * S + s] += eval->q_values[s % grams];
    }
  }
  return pot;
}

double local_log_factor(const ChainModel& model, const Observations& observations, std::size_t t,
                        std::size_t state) {
  model.validate();
  validate_observations(observations, model.feature_dim);
  if (t >= observations.size()) throw InputError("position outside the sequence");
  const int K = model.history_length();
  const auto Y = static_cast<std::size_t>(model.num_labels);
  if (state >= ipow(Y, static_cast<int>(std::min<std::size_t>(t + 1, static_cast<std::size_t>(K)))))
    throw InputError("state is not reachable at this position");
  double total = 0.0;
  for (const auto& factor : model.local_factors) {
    if (t + 1 < static_cast<std::size_t>(factor.gram)) continue;
    const auto window = factor_window(model, factor, observations, t);
    const auto eval = spn::evaluate(factor.topology, factor.weights, window);
    total += eval.q_values[state % eval.q_values.size()];
  }
  return total;
}

ChainMessages forward_backward(const ChainPotentials& pot, ExecPolicy policy) {
  const std::size_t T = pot.length;
  const std::size_t S = pot.states;
  const std::size_t Y = pot.labels;
  if (T == 0) throw InputError("sequence is empty");

  ChainMessages msg;
  msg.length = T;
  msg.states = S;
  msg.alpha_trans.assign(T * S, kLogZero);
  msg.alpha.assign(T * S, kLogZero);
  msg.beta_trans.assign(T * S, kLogZero);
  msg.beta.assign(T * S, kLogZero);
  msg.beta_local.assign(T * S, kLogZero);

  kernels::ChainStep step;
  step.branch = Y;
  step.stride = S / Y;

  const std::vector<double> virtual_start{0.0};
  for (std::size_t t = 0; t < T; ++t) {
    step.active_prev = t == 0 ? 1 : pot.active_states(t - 1);
    step.active_out = pot.active_states(t);
    const std::span<const double> prev =
        t == 0 ? std::span<const double>(virtual_start)
               : std::span<const double>(msg.alpha).subspan((t - 1) * S, S);
    kernels::forward_step(policy, step, prev, pot.edge_table(t),
                          std::span<double>(msg.alpha_trans).subspan(t * S, S));
    for (std::size_t s = 0; s < step.active_out; ++s)
      msg.alpha[t * S + s] = msg.alpha_trans[t * S + s] + pot.local[t * S + s];
  }
  msg.log_partition = log_sum_exp(
      std::span<const double>(msg.alpha).subspan((T - 1) * S, pot.active_states(T - 1)));

  for (std::size_t s = 0; s < pot.active_states(T - 1); ++s) {
    msg.beta_trans[(T - 1) * S + s] = 0.0;
    msg.beta[(T - 1) * S + s] = pot.local[(T - 1) * S + s];
  }
  for (std::size_t t = T - 1; t-- > 0;) {
    step.active_out = pot.active_states(t);
    kernels::backward_step(policy, step, std::span<const double>(msg.beta).subspan((t + 1) * S, S),
                           pot.edge_table(t + 1),
                           std::span<double>(msg.beta_trans).subspan(t * S, S));
    for (std::size_t s = 0; s < step.active_out; ++s)
      msg.beta[t * S + s] = msg.beta_trans[t * S + s] + pot.local[t * S + s];
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < pot.active_states(t); ++s)
      msg.beta_local[t * S + s] = msg.alpha_trans[t * S + s] + msg.beta_trans[t * S + s];

  std::vector<double> first(pot.active_states(0));
  for (std::size_t s = 0; s < first.size(); ++s) first[s] = msg.beta[s] + msg.alpha_trans[s];
  msg.log_partition_backward = log_sum_exp(first);

  if (!std::isfinite(msg.log_partition)) throw NumericError("chain partition is not finite");
  return msg;
}

ChainMessages forward_backward(const ChainModel& model, const Observations& observations,
                               ExecPolicy policy) {
  return forward_backward(compute_potentials(model, observations, policy), policy);
}

double sequence_score(const ChainModel& model, const Observations& observations,
                      std::span<const int> labels) {
  LabeledSequence check{observations, {labels.begin(), labels.end()}};
  check.validate(model.num_labels, model.feature_dim);
  double score = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    for (const auto& tf : model.transitions) {
      const long idx =
          tf.dictionary.index_of(observed_gram(labels, t, tf.dictionary.order(), model.num_labels));
      if (idx >= 0) score += tf.weights[static_cast<std::size_t>(idx)];
    }
    for (const auto& factor : model.local_factors) {
      if (t + 1 < static_cast<std::size_t>(factor.gram)) continue;
      const auto window = factor_window(model, factor, observations, t);
      const auto eval = spn::evaluate(factor.topology, factor.weights, window);
      score += eval.q_values[gram_label_index(labels, t, factor.gram, model.num_labels)];
    }
  }
  return score;
}

double sequence_log_likelihood(const ChainModel& model, const LabeledSequence& sequence) {
  sequence.validate(model.num_labels, model.feature_dim);
  const ChainMessages msg = forward_backward(model, sequence.observations);
  return sequence_score(model, sequence.observations, sequence.labels) - msg.log_partition;
}

std::vector<double> ChainMarginals::label_marginals() const {
  std::vector<double> out(length * labels, 0.0);
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t s = 0; s < states; ++s) out[t * labels + s % labels] += node[t * states + s];
  return out;
}

ChainMarginals posterior_marginals(const ChainModel& model, const Observations& observations) {
  const ChainPotentials pot = compute_potentials(model, observations);
  const ChainMessages msg = forward_backward(pot);
  const std::size_t T = pot.length;
  const std::size_t S = pot.states;
  const std::size_t Y = pot.labels;
  const std::size_t stride = S / Y;

  ChainMarginals out;
  out.length = T;
  out.states = S;
  out.labels = Y;
  out.node.assign(T * S, 0.0);
  out.edge.assign(T * S * Y, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < pot.active_states(t); ++s)
      out.node[t * S + s] =
          std::exp(msg.alpha[t * S + s] + msg.beta[t * S + s] - pot.local[t * S + s] -
                   msg.log_partition);
    const std::size_t active_prev = t == 0 ? 1 : pot.active_states(t - 1);
    const auto edge = pot.edge_table(t);
    for (std::size_t sp = 0; sp < active_prev; ++sp) {
      const double a = t == 0 ? 0.0 : msg.alpha[(t - 1) * S + sp];
      for (std::size_t y = 0; y < Y; ++y) {
        const std::size_t next = (sp % stride) * Y + y;
        out.edge[(t * S + sp) * Y + y] =
            std::exp(a + edge[sp * Y + y] + msg.beta[t * S + next] - msg.log_partition);
      }
    }
  }
  return out;
}

ChainModel gradient(const ChainModel& model, const LabeledSequence& sequence,
                    double* log_likelihood) {
  ChainModel grad = model.zeros_like();
  const double ll = accumulate_gradient_impl(model, sequence, grad);
  if (log_likelihood) *log_likelihood = ll;
  return grad;
}

ViterbiResult viterbi(const ChainModel& model, const Observations& observations) {
  const ChainPotentials pot = compute_potentials(model, observations);
  const std::size_t T = pot.length;
  const std::size_t S = pot.states;
  const std::size_t Y = pot.labels;
  const std::size_t stride = S / Y;

  std::vector<double> delta(T * S, kLogZero);
  std::vector<std::size_t> back(T * S, 0);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t active_prev = t == 0 ? 1 : pot.active_states(t - 1);
    const auto edge = pot.edge_table(t);
    for (std::size_t s = 0; s < pot.active_states(t); ++s) {
      const std::size_t tail = s / Y;
      const std::size_t y = s % Y;
      double best = kLogZero;
      std::size_t arg = 0;
      for (std::size_t a = 0; a < Y; ++a) {
        const std::size_t sp = a * stride + tail;
        if (sp >= active_prev) break;
        const double prev = t == 0 ? 0.0 : delta[(t - 1) * S + sp];
        const double v = prev + edge[sp * Y + y];
        if (v > best) {
          best = v;
          arg = sp;
        }
      }
      delta[t * S + s] = best + pot.local[t * S + s];
      back[t * S + s] = arg;
    }
  }

  std::size_t state = 0;
  double best = kLogZero;
  for (std::size_t s = 0; s < pot.active_states(T - 1); ++s)
    if (delta[(T - 1) * S + s] > best) {
      best = delta[(T - 1) * S + s];
      state = s;
    }

  ViterbiResult result;
  result.score = best;
  result.labels.resize(T);
  for (std::size_t t = T; t-- > 0;) {
    result.labels[t] = static_cast<int>(state % Y);
    state = back[t * S + state];
  }
  return result;
}

}  // namespace spnseq::crf
