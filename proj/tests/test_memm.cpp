#include "doctest.h"

#include <cmath>
#include <numeric>

#include "spnseq/error.hpp"
#include "spnseq/memm.hpp"
#include "spnseq/oracle.hpp"
#include "spnseq/training.hpp"
#include "support.hpp"

using namespace spnseq;
using namespace spnseq::memm;
using testing_support::random_memm;
using testing_support::random_observations;
using testing_support::random_sequence;
using testing_support::uniform_int;

namespace {

MemmSpec spec_for(int labels, int dim, int order, int window = 1) {
  MemmSpec s;
  s.num_labels = labels;
  s.feature_dim = dim;
  s.order = order;
  s.window = window;
  s.layers = 1;
  s.children = 2;
  s.states = 2;
  return s;
}

MemmModel zero_memm(int labels, int dim, int order) {
  auto m = make_memm_model(spec_for(labels, dim, order), 0);
  for (auto b : m.parameter_blocks()) std::fill(b.begin(), b.end(), 0.0);
  return m;
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

TEST_CASE("zero weights give uniform local posteriors") {
  const auto model = zero_memm(3, 2, 3);
  const Observations obs{{0.1, 0.2}, {0.3, -0.4}};
  const std::vector<int> history{3, 1};
  for (double p : local_posterior(model, obs, 1, history)) CHECK(p == doctest::Approx(1.0 / 3.0));
  LabeledSequence seq{obs, {2, 0}};
  CHECK(sequence_log_likelihood(model, seq) == doctest::Approx(2.0 * std::log(1.0 / 3.0)));
  CHECK(decode_viterbi(zero_memm(3, 2, 1), obs) == std::vector<int>{0, 0});
}

TEST_CASE("order one reduces to the SPN posterior") {
  std::mt19937_64 rng(1);
  const auto model = random_memm(rng, spec_for(3, 2, 1));
  const auto obs = random_observations(rng, 4, 2);
  for (std::size_t t = 0; t < 4; ++t) {
    const auto p = local_posterior(model, obs, t, {});
    const auto q = spn::posterior(spn::evaluate(model.topology, model.spn_weights, obs[t]));
    for (std::size_t y = 0; y < 3; ++y) CHECK(p[y] == doctest::Approx(q[y]).epsilon(1e-13));
  }
}

TEST_CASE("local posteriors normalize and match the termwise oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int Y = uniform_int(rng, 1, 3);
    const int M = uniform_int(rng, 1, 3);
    const int m = uniform_int(rng, 1, 3);
    const auto model = random_memm(rng, spec_for(Y, 2, M, m));
    const auto seq = random_sequence(rng, static_cast<std::size_t>(uniform_int(rng, 1, 5)), Y, 2);
    for (std::size_t t = 0; t < seq.length(); ++t) {
      const auto p = local_posterior(model, seq.observations, t,
                                     label_history(model, seq.labels, t));
      CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12);
    }
    CHECK(sequence_log_likelihood(model, seq) ==
          doctest::Approx(oracle::memm_log_prob(model, seq.observations, seq.labels))
              .epsilon(1e-12));
    CHECK(sequence_log_likelihood(model, seq) <= 0.0);
    const auto brute = oracle::memm_brute_force(model, seq.observations);
    CHECK(brute.total_probability == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("history labels are START padded") {
  const auto model = zero_memm(2, 1, 3);
  const std::vector<int> labels{1, 0, 1};
  CHECK(label_history(model, labels, 0) == std::vector<int>{2, 2});
  CHECK(label_history(model, labels, 1) == std::vector<int>{1, 2});
  CHECK(label_history(model, labels, 2) == std::vector<int>{0, 1});
}

TEST_CASE("zero-weight history gradient") {
  const auto model = zero_memm(3, 1, 3);
  const LabeledSequence seq{{{0.5}, {-0.5}, {1.0}, {0.0}}, {2, 0, 2, 1}};
  const auto g = gradient(model, seq);
  for (int m = 1; m < 3; ++m)
    for (int prev = 0; prev <= 3; ++prev)
      for (int y = 0; y < 3; ++y) {
        double expected = 0.0;
        for (std::size_t t = 0; t < seq.length(); ++t) {
          const long pos = static_cast<long>(t) - m;
          const int g_tm = pos < 0 ? 3 : seq.labels[static_cast<std::size_t>(pos)];
          if (g_tm == prev) expected += (seq.labels[t] == y ? 1.0 : 0.0) - 1.0 / 3.0;
        }
        CHECK(g.history_weight(m, prev, y) == doctest::Approx(expected).epsilon(1e-13));
      }
}

TEST_CASE("history gradient rows sum to zero") {
  std::mt19937_64 rng(3);
  const auto model = random_memm(rng, spec_for(3, 2, 3));
  const auto seq = random_sequence(rng, 5, 3, 2);
  const auto g = gradient(model, seq);
  for (int m = 1; m < 3; ++m)
    for (int prev = 0; prev <= 3; ++prev) {
      double s = 0.0;
      for (int y = 0; y < 3; ++y) s += g.history_weight(m, prev, y);
      CHECK(std::abs(s) <= 1e-12);
    }
}

TEST_CASE("MEMM gradient matches central differences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 8; ++trial) {
    const auto model =
        random_memm(rng, spec_for(uniform_int(rng, 2, 3), 2, uniform_int(rng, 1, 3),
                                  uniform_int(rng, 1, 2)),
                    0.5);
    REQUIRE(model.parameter_count() <= 500);
    const auto seq = random_sequence(rng, 4, model.num_labels, 2);
    const auto report = training::finite_difference_check(model, seq);
    CHECK(report.passed());
  }
}

TEST_CASE("exact decoding for order one") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int Y = uniform_int(rng, 1, 3);
    const auto model = random_memm(rng, spec_for(Y, 2, 1));
    const auto obs = random_observations(rng, static_cast<std::size_t>(uniform_int(rng, 1, 6)), 2);
    const auto brute = oracle::memm_brute_force(model, obs);
    const auto vit = decode_viterbi(model, obs);
    CHECK(vit == brute.argmax);
    for (int B : {1, 2, 5}) CHECK(decode_beam(model, obs, B).labels == vit);
    for (std::size_t t = 0; t < obs.size(); ++t) {
      const auto p = local_posterior(model, obs, t, {});
      CHECK(vit[t] == static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    }
  }
  CHECK_THROWS_AS(decode_viterbi(zero_memm(2, 1, 2), Observations{{0.0}}), ContractError);
}

TEST_CASE("wide beams are exact") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const int Y = uniform_int(rng, 1, 3);
    const int M = uniform_int(rng, 1, 3);
    const auto model = random_memm(rng, spec_for(Y, 2, M), 2.0);
    const auto T = static_cast<std::size_t>(uniform_int(rng, 1, 5));
    const auto obs = random_observations(rng, T, 2);
    const auto brute = oracle::memm_brute_force(model, obs);
    const int B = static_cast<int>(ipow(static_cast<std::size_t>(Y), M - 1));
    const auto beam = decode_beam(model, obs, B);
    CHECK(beam.labels == brute.argmax);
    CHECK(beam.log_prob == doctest::Approx(brute.max_log_prob).epsilon(1e-12));
  }
}

TEST_CASE("beam of one is greedy") {
  std::mt19937_64 rng(7);
  const auto model = random_memm(rng, spec_for(3, 2, 3), 2.0);
  const auto obs = random_observations(rng, 6, 2);
  std::vector<int> greedy;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    const auto p = local_posterior(model, obs, t, label_history(model, greedy, t));
    greedy.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
  }
  CHECK(decode_beam(model, obs, 1).labels == greedy);
  CHECK_THROWS_AS(decode_beam(model, obs, 0), InputError);
}

TEST_CASE("beam score is non-decreasing in the width") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_memm(rng, spec_for(3, 2, 3), 2.0);
    const auto obs = random_observations(rng, 6, 2);
    double previous = -INFINITY;
    for (int B = 1; B <= 10; ++B) {
      const double score = decode_beam(model, obs, B).log_prob;
      CHECK(score >= previous - 1e-12);
      previous = score;
    }
  }
}

TEST_CASE("beam result is consistent") {
  std::mt19937_64 rng(9);
  const auto model = random_memm(rng, spec_for(3, 2, 2));
  const auto obs = random_observations(rng, 5, 2);
  const auto beam = decode_beam(model, obs, 20);
  CHECK(beam.log_prob <= 0.0);
  CHECK(beam.log_prob ==
        doctest::Approx(oracle::memm_log_prob(model, obs, beam.labels)).epsilon(1e-12));
  CHECK(model.decode(obs) == beam.labels);
}

TEST_CASE("MEMM structural checks") {
  CHECK_THROWS_AS(make_memm_model(spec_for(0, 1, 1), 0), StructuralError);
  CHECK_THROWS_AS(make_memm_model(spec_for(2, 1, 0), 0), StructuralError);
  auto spec = spec_for(2, 1, 2);
  spec.beam_width = 0;
  CHECK_THROWS_AS(make_memm_model(spec, 0), InputError);
  auto model = zero_memm(2, 1, 2);
  model.history_weights.pop_back();
  CHECK_THROWS_AS(model.validate(), StructuralError);
  CHECK_THROWS_AS(local_posterior(zero_memm(2, 1, 2), Observations{{0.0}}, 0, std::vector<int>{}),
                  InputError);
}

TEST_CASE("MEMM oracle budget") {
  const auto model = zero_memm(3, 1, 2);
  Observations obs(20, std::vector<double>{0.0});
  CHECK_THROWS_AS(oracle::memm_brute_force(model, obs), BudgetError);
}
