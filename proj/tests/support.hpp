#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "spnseq/chain_crf.hpp"
#include "spnseq/memm.hpp"
#include "spnseq/spn.hpp"

namespace testing_support {

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                          double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline spnseq::spn::SpnTopology make_topology(int layers, int children, int states, int labels,
                                              int input_dim,
                                              spnseq::Semiring semiring =
                                                  spnseq::Semiring::SumProduct) {
  spnseq::spn::SpnTopology t;
  t.num_layers = layers;
  t.children_per_parent = children;
  t.states_per_hidden = states;
  t.num_labels = labels;
  t.input_dim = input_dim;
  t.semiring = semiring;
  return t;
}

inline spnseq::spn::SpnWeights random_weights(const spnseq::spn::SpnTopology& t,
                                              std::mt19937_64& rng, double scale = 1.0) {
  return {uniform_vector(rng, t.parameter_count(), -scale, scale)};
}

inline spnseq::Observations random_observations(std::mt19937_64& rng, std::size_t length,
                                                int dim) {
  spnseq::Observations obs(length);
  for (auto& x : obs) x = uniform_vector(rng, static_cast<std::size_t>(dim));
  return obs;
}

inline std::vector<int> random_labels(std::mt19937_64& rng, std::size_t length, int labels) {
  std::vector<int> y(length);
  for (int& v : y) v = uniform_int(rng, 0, labels - 1);
  return y;
}

inline spnseq::LabeledSequence random_sequence(std::mt19937_64& rng, std::size_t length,
                                               int labels, int dim) {
  return {random_observations(rng, length, dim), random_labels(rng, length, labels)};
}

template <typename Model>
void randomize(Model& model, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto block : model.parameter_blocks())
    for (double& w : block) w = d(rng);
}

inline spnseq::crf::ChainModel random_chain(std::mt19937_64& rng,
                                            const spnseq::crf::ChainSpec& spec,
                                            double scale = 1.0) {
  auto model = spnseq::crf::make_chain_model(spec, {}, rng());
  randomize(model, rng, scale);
  return model;
}

inline spnseq::memm::MemmModel random_memm(std::mt19937_64& rng,
                                           const spnseq::memm::MemmSpec& spec,
                                           double scale = 1.0) {
  auto model = spnseq::memm::make_memm_model(spec, rng());
  randomize(model, rng, scale);
  return model;
}

}  // namespace testing_support
