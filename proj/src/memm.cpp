#include "spnseq/memm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "spnseq/error.hpp"
#include "spnseq/logspace.hpp"

namespace spnseq::memm {

namespace {

std::vector<double> normalize_scores(std::vector<double> scores) {
  const double z = log_sum_exp(scores);
  for (double& s : scores) s = std::exp(s - z);
  return scores;
}

// Unnormalized log scores log Q(y, window) + sum_m w[m][g_m][y].
std::vector<double> local_scores(const MemmModel& model, const spn::SpnEvaluation& eval,
                                 std::span<const int> history) {
  std::vector<double> scores = eval.q_values;
  for (int m = 1; m < model.order; ++m)
    for (int y = 0; y < model.num_labels; ++y)
      scores[static_cast<std::size_t>(y)] +=
          model.history_weight(m, history[static_cast<std::size_t>(m - 1)], y);
  return scores;
}

std::vector<spn::SpnEvaluation> evaluate_positions(const MemmModel& model,
                                                   const Observations& observations) {
  std::vector<spn::SpnEvaluation> evals;
  evals.reserve(observations.size());
  for (std::size_t t = 0; t < observations.size(); ++t)
    evals.push_back(spn::evaluate(model.topology, model.spn_weights,
                                  memm_window(model, observations, t)));
  return evals;
}

}  // namespace

void MemmModel::validate() const {
  if (num_labels < 1) throw StructuralError("MEMM needs at least one label");
  if (feature_dim < 1) throw StructuralError("MEMM needs feature_dim >= 1");
  if (order < 1) throw StructuralError("MEMM order must be >= 1");
  if (window < 1) throw StructuralError("MEMM window must be >= 1");
  if (history_weights.size() != static_cast<std::size_t>(order - 1) *
                                    static_cast<std::size_t>(num_labels + 1) *
                                    static_cast<std::size_t>(num_labels))
    throw StructuralError("history weight block has the wrong size");
  for (double w : history_weights)
    if (!std::isfinite(w)) throw NumericError("non-finite history weight");
  if (topology.num_labels != num_labels)
    throw StructuralError("MEMM SPN label space must equal the label count");
  if (topology.input_dim != window * feature_dim)
    throw StructuralError("MEMM SPN input_dim must be window * feature_dim");
  topology.validate();
  spn_weights.check(topology);
}

double& MemmModel::history_weight(int distance, int previous, int label) {
  return history_weights[(static_cast<std::size_t>(distance - 1) * (num_labels + 1) +
                          static_cast<std::size_t>(previous)) *
                             static_cast<std::size_t>(num_labels) +
                         static_cast<std::size_t>(label)];
}

double MemmModel::history_weight(int distance, int previous, int label) const {
  return history_weights[(static_cast<std::size_t>(distance - 1) * (num_labels + 1) +
                          static_cast<std::size_t>(previous)) *
                             static_cast<std::size_t>(num_labels) +
                         static_cast<std::size_t>(label)];
}

std::size_t MemmModel::parameter_count() const {
  return history_weights.size() + spn_weights.values.size();
}

std::vector<std::span<double>> MemmModel::parameter_blocks() {
  return {std::span<double>(history_weights), std::span<double>(spn_weights.values)};
}

std::vector<std::span<const double>> MemmModel::parameter_blocks() const {
  return {std::span<const double>(history_weights), std::span<const double>(spn_weights.values)};
}

MemmModel MemmModel::zeros_like() const {
  MemmModel out = *this;
  std::fill(out.history_weights.begin(), out.history_weights.end(), 0.0);
  std::fill(out.spn_weights.values.begin(), out.spn_weights.values.end(), 0.0);
  return out;
}

double MemmModel::log_likelihood(const LabeledSequence& sequence) const {
  return sequence_log_likelihood(*this, sequence);
}

double MemmModel::accumulate_gradient(const LabeledSequence& sequence, MemmModel& grad) const {
  sequence.validate(num_labels, feature_dim);
  validate();
  double ll = 0.0;
  std::vector<double> cot(static_cast<std::size_t>(num_labels));
  for (std::size_t t = 0; t < sequence.length(); ++t) {
    const auto window = memm_window(*this, sequence.observations, t);
    const auto eval = spn::evaluate(topology, spn_weights, window);
    const auto history = label_history(*this, sequence.labels, t);
    const auto p = normalize_scores(local_scores(*this, eval, history));
    const int gold = sequence.labels[t];
    ll += std::log(p[static_cast<std::size_t>(gold)]);
    for (int y = 0; y < num_labels; ++y)
      cot[static_cast<std::size_t>(y)] = (y == gold ? 1.0 : 0.0) - p[static_cast<std::size_t>(y)];
    for (int m = 1; m < order; ++m)
      for (int y = 0; y < num_labels; ++y)
        grad.history_weight(m, history[static_cast<std::size_t>(m - 1)], y) +=
            cot[static_cast<std::size_t>(y)];
    spn::accumulate_root_gradient(topology, window, eval, cot, grad.spn_weights);
  }
  return ll;
}

std::vector<int> MemmModel::decode(const Observations& observations) const {
  if (order == 1) return decode_viterbi(*this, observations);
  return decode_beam(*this, observations, beam_width).labels;
}

MemmModel make_memm_model(const MemmSpec& spec, std::uint64_t seed) {
  if (spec.num_labels < 1 || spec.feature_dim < 1 || spec.order < 1 || spec.window < 1)
    throw StructuralError("MEMM spec needs positive label count, feature_dim, order and window");
  if (spec.beam_width < 1) throw InputError("beam width must be >= 1");
  MemmModel model;
  model.num_labels = spec.num_labels;
  model.feature_dim = spec.feature_dim;
  model.order = spec.order;
  model.window = spec.window;
  model.beam_width = spec.beam_width;
  model.history_weights.assign(static_cast<std::size_t>(spec.order - 1) *
                                   static_cast<std::size_t>(spec.num_labels + 1) *
                                   static_cast<std::size_t>(spec.num_labels),
                               0.0);
  model.topology.num_layers = spec.layers;
  model.topology.children_per_parent = spec.children;
  model.topology.states_per_hidden = spec.states;
  model.topology.num_labels = spec.num_labels;
  model.topology.input_dim = spec.window * spec.feature_dim;
  model.topology.semiring = spec.semiring;
  std::mt19937_64 rng(seed);
  model.spn_weights = spn::SpnWeights::initialized(model.topology, rng);
  model.validate();
  return model;
}

std::vector<double> memm_window(const MemmModel& model, const Observations& observations,
                                std::size_t t) {
  const int start = static_cast<int>(t) + floor_div(1 - model.window, 2);
  return observation_window(observations, start, model.window, model.feature_dim);
}

std::vector<double> local_posterior(const MemmModel& model, const Observations& observations,
                                    std::size_t t, std::span<const int> history) {
  model.validate();
  validate_observations(observations, model.feature_dim);
  if (t >= observations.size()) throw InputError("position outside the sequence");
  if (history.size() != static_cast<std::size_t>(model.order - 1))
    throw InputError("history must hold M - 1 labels");
  for (int g : history)
    if (g < 0 || g > model.num_labels) throw InputError("history label out of range");
  const auto eval =
      spn::evaluate(model.topology, model.spn_weights, memm_window(model, observations, t));
  return normalize_scores(local_scores(model, eval, history));
}

std::vector<int> label_history(const MemmModel& model, std::span<const int> labels,
                               std::size_t t) {
  std::vector<int> history(static_cast<std::size_t>(model.order - 1));
  for (int m = 1; m < model.order; ++m) {
    const long pos = static_cast<long>(t) - m;
    history[static_cast<std::size_t>(m - 1)] =
        pos < 0 ? model.start_symbol() : labels[static_cast<std::size_t>(pos)];
  }
  return history;
}

double sequence_log_likelihood(const MemmModel& model, const LabeledSequence& sequence) {
  sequence.validate(model.num_labels, model.feature_dim);
  model.validate();
  double ll = 0.0;
  for (std::size_t t = 0; t < sequence.length(); ++t) {
    const auto eval = spn::evaluate(model.topology, model.spn_weights,
                                    memm_window(model, sequence.observations, t));
    const auto history = label_history(model, sequence.labels, t);
    const auto scores = local_scores(model, eval, history);
    ll += scores[static_cast<std::size_t>(sequence.labels[t])] - log_sum_exp(scores);
  }
  return ll;
}

MemmModel gradient(const MemmModel& model, const LabeledSequence& sequence,
                   double* log_likelihood) {
  MemmModel grad = model.zeros_like();
  const double ll = model.accumulate_gradient(sequence, grad);
  if (log_likelihood) *log_likelihood = ll;
  return grad;
}

std::vector<int> decode_viterbi(const MemmModel& model, const Observations& observations) {
  if (model.order != 1) throw ContractError("exact MEMM decoding requires order M = 1");
  model.validate();
  validate_observations(observations, model.feature_dim);
  std::vector<int> labels(observations.size());
  const auto evals = evaluate_positions(model, observations);
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const auto& q = evals[t].q_values;
    labels[t] = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
  }
  return labels;
}

BeamResult decode_beam(const MemmModel& model, const Observations& observations, int beam_width) {
  if (beam_width < 1) throw InputError("beam width must be >= 1");
  model.validate();
  validate_observations(observations, model.feature_dim);
  const auto evals = evaluate_positions(model, observations);

  const auto better = [](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.cumulative_log_prob != b.cumulative_log_prob)
      return a.cumulative_log_prob > b.cumulative_log_prob;
    return a.full_prefix < b.full_prefix;
  };

  std::vector<BeamHypothesis> beam(1);
  beam[0].label_history.assign(static_cast<std::size_t>(model.order - 1), model.start_symbol());

  for (std::size_t t = 0; t < observations.size(); ++t) {
    std::map<std::vector<int>, BeamHypothesis> merged;
    for (const auto& hyp : beam) {
      const auto p = normalize_scores(local_scores(model, evals[t], hyp.label_history));
      for (int y = 0; y < model.num_labels; ++y) {
        BeamHypothesis next;
        next.cumulative_log_prob = hyp.cumulative_log_prob + std::log(p[static_cast<std::size_t>(y)]);
        next.full_prefix = hyp.full_prefix;
        next.full_prefix.push_back(y);
        if (model.order > 1) {
          next.label_history.push_back(y);
          next.label_history.insert(next.label_history.end(), hyp.label_history.begin(),
                                    hyp.label_history.end() - 1);
        }
        auto [it, inserted] = merged.try_emplace(next.label_history, next);
        if (!inserted && better(next, it->second)) it->second = std::move(next);
      }
    }
    beam.clear();
    for (auto& [key, hyp] : merged) beam.push_back(std::move(hyp));
    std::sort(beam.begin(), beam.end(), better);
    if (beam.size() > static_cast<std::size_t>(beam_width))
      beam.resize(static_cast<std::size_t>(beam_width));
  }
  return {beam.front().full_prefix, beam.front().cumulative_log_prob};
}

}  // namespace spnseq::memm
