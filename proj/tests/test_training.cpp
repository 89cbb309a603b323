#include "doctest.h"

#include <cmath>

#include "spnseq/batch.hpp"
#include "spnseq/data_io.hpp"
#include "spnseq/error.hpp"
#include "spnseq/training.hpp"
#include "support.hpp"

using namespace spnseq;
using namespace spnseq::training;
using testing_support::random_chain;
using testing_support::random_memm;
using testing_support::random_sequence;

namespace {

crf::ChainSpec toy_chain_spec() {
  crf::ChainSpec s;
  s.num_labels = 4;
  s.feature_dim = 8;
  s.layers = 1;
  s.children = 2;
  s.states = 2;
  return s;
}

data::Dataset toy_data(int n, std::uint64_t seed = 0) {
  data::SynthSpec spec;
  spec.seed = seed;
  spec.num_sequences = n;
  return data::synth_task(spec).dataset;
}

// Train and dev drawn from the same task.
std::pair<data::Dataset, data::Dataset> toy_split(int train, int dev, std::uint64_t seed) {
  const auto all = toy_data(train + dev, seed);
  return {data::subset(all, 0, static_cast<std::size_t>(train)),
          data::subset(all, static_cast<std::size_t>(train), all.sequences.size())};
}

template <typename Model>
void zero_all(Model& m) {
  for (auto b : m.parameter_blocks()) std::fill(b.begin(), b.end(), 0.0);
}

}  // namespace

TEST_CASE("configuration checks") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.l2 = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  const auto model = crf::make_chain_model(toy_chain_spec(), {}, 0);
  CHECK_THROWS_AS(train(model, {}, {}, TrainConfig{}), InputError);
}

TEST_CASE("dominant regularizer keeps weights near zero") {
  const auto data = toy_data(20);
  auto model = crf::make_chain_model(toy_chain_spec(), {}, 0);
  zero_all(model);
  TrainConfig c;
  c.learning_rate = 1e-4;
  c.l2 = 20.0 / c.learning_rate;  // per-sample decay eta * rho / N = 1
  c.epochs = 3;
  const auto run = train(model, data.sequences, {}, c);
  double max_w = 0.0;
  for (auto b : run.best_model.parameter_blocks())
    for (double w : b) max_w = std::max(max_w, std::abs(w));
  CHECK(max_w < 1e-3);
  const double baseline = static_cast<double>(data.total_labels()) * std::log(1.0 / 4.0);
  for (const auto& e : run.report.epochs)
    CHECK(e.objective == doctest::Approx(baseline).epsilon(0.01));
}

TEST_CASE("toy task is learned") {
  const auto data = toy_data(40, 3);
  const auto model = crf::make_chain_model(toy_chain_spec(), data.sequences, 1);
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.l2 = 1e-4;
  c.epochs = 50;
  const auto run = train(model, data.sequences, {}, c);
  CHECK(error_rate(run.best_model, data.sequences) <= 0.01);
}

TEST_CASE("small steps increase the objective") {
  const auto data = toy_data(30, 4);
  const auto model = crf::make_chain_model(toy_chain_spec(), data.sequences, 2);
  TrainConfig c;
  c.learning_rate = 1e-4;
  c.l2 = 0.0;
  c.epochs = 5;
  const auto run = train(model, data.sequences, {}, c);
  const double start = batch::ordered_sum(batch::log_likelihoods(model, data.sequences));
  double previous = start;
  for (const auto& e : run.report.epochs) {
    CHECK(e.objective >= previous);
    previous = e.objective;
  }
}

TEST_CASE("training is deterministic and independent of evaluation threads") {
  const auto [data, dev] = toy_split(20, 5, 5);
  const auto model = crf::make_chain_model(toy_chain_spec(), data.sequences, 3);
  TrainConfig c;
  c.epochs = 4;
  c.shuffle_seed = 17;
  const auto a = train(model, data.sequences, dev.sequences, c);
  const auto b = train(model, data.sequences, dev.sequences, c);
  c.evaluation = {ExecPolicy::Parallel, 4};
  const auto p = train(model, data.sequences, dev.sequences, c);
  REQUIRE(a.report.epochs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.report.epochs[i].objective == b.report.epochs[i].objective);
    CHECK(a.report.epochs[i].objective == p.report.epochs[i].objective);
    CHECK(a.report.epochs[i].dev_error == p.report.epochs[i].dev_error);
  }
  CHECK(flatten(a.best_model) == flatten(p.best_model));

  c.shuffle_seed = 18;
  const auto other = train(model, data.sequences, dev.sequences, c);
  CHECK(other.report.epochs[0].objective != a.report.epochs[0].objective);
}

TEST_CASE("report keeps the best dev snapshot") {
  const auto [data, dev] = toy_split(20, 10, 7);
  const auto model = crf::make_chain_model(toy_chain_spec(), data.sequences, 4);
  TrainConfig c;
  c.epochs = 6;
  c.eval_every = 2;
  const auto run = train(model, data.sequences, dev.sequences, c);
  double best = INFINITY;
  int evaluated = 0;
  for (const auto& e : run.report.epochs)
    if (e.dev_error) {
      ++evaluated;
      best = std::min(best, *e.dev_error);
    }
  CHECK(evaluated == 3);
  CHECK(run.report.best_dev_error == best);
  CHECK(error_rate(run.best_model, dev.sequences) == best);
  CHECK(run.report.best_epoch % 2 == 0);

  const auto j = run.report.to_json();
  CHECK(j["epochs"].size() == 6);
  CHECK(j["epochs"][0]["dev_error"].is_null());
  CHECK(j["best_dev_error"].get<double>() == best);
}

TEST_CASE("MEMM training runs") {
  const auto data = toy_data(20, 9);
  memm::MemmSpec spec;
  spec.num_labels = 4;
  spec.feature_dim = 8;
  spec.order = 2;
  const auto model = memm::make_memm_model(spec, 0);
  TrainConfig c;
  c.epochs = 10;
  const auto run = train(model, data.sequences, {}, c);
  CHECK(run.report.epochs.back().objective > run.report.epochs.front().objective);
  CHECK(error_rate(run.best_model, data.sequences) < 0.1);
}

TEST_CASE("regularized objective gradient") {
  std::mt19937_64 rng(10);
  crf::ChainSpec spec;
  spec.num_labels = 3;
  spec.feature_dim = 2;
  spec.ngram_orders = {2, 3};
  auto model = random_chain(rng, spec, 0.5);
  const std::vector<LabeledSequence> data{random_sequence(rng, 4, 3, 2),
                                          random_sequence(rng, 3, 3, 2)};
  const double rho = 0.3;
  const auto grad = regularized_gradient(model, std::span<const LabeledSequence>(data), rho);
  auto probe = model;
  const auto report = compare_with_finite_differences(
      probe.parameter_blocks(), flatten(grad),
      [&] { return regularized_objective(probe, std::span<const LabeledSequence>(data), rho); });
  CHECK(report.passed());
  CHECK(report.checked == model.parameter_count());
}

TEST_CASE("finite-difference harness") {
  std::mt19937_64 rng(11);
  crf::ChainSpec spec;
  spec.num_labels = 2;
  spec.feature_dim = 2;
  auto zero = crf::make_chain_model(spec, {}, 0);
  zero_all(zero);
  const auto seq = random_sequence(rng, 3, 2, 2);
  CHECK(finite_difference_check(zero, seq).passed());

  const auto model = random_chain(rng, spec);
  auto grad = model.zeros_like();
  model.accumulate_gradient(seq, grad);
  auto analytic = flatten(grad);
  std::size_t corrupted = 0;
  while (std::abs(analytic[corrupted]) < 1e-3) ++corrupted;
  analytic[corrupted] *= 2.0;
  auto probe = model;
  const auto report = compare_with_finite_differences(
      probe.parameter_blocks(), analytic, [&] { return probe.log_likelihood(seq); });
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].index == corrupted);
  CHECK(report.failures[0].rel_error == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(flatten(probe) == flatten(model));

  CHECK_THROWS_AS(compare_with_finite_differences(probe.parameter_blocks(),
                                                  std::vector<double>{1.0}, [] { return 0.0; }),
                  ContractError);
}

TEST_CASE("grid search") {
  CHECK(default_grid().size() == 9);
  const auto [data, dev] = toy_split(30, 10, 12);
  const std::function<crf::ChainModel()> make = [&] {
    return crf::make_chain_model(toy_chain_spec(), data.sequences, 5);
  };
  TrainConfig base;
  base.epochs = 5;
  const std::vector<GridPoint> single{{1e-2, 1e-3}};
  const auto one = grid_search(make, data.sequences, dev.sequences, base, single);
  CHECK(one.best.learning_rate == 1e-2);
  CHECK(one.best.l2 == 1e-3);
  CHECK(one.entries.size() == 1);

  // rho = 1e3 with eta = 1e-2 and N = 30 decays weights by a third per sample.
  const std::vector<GridPoint> grid{{1e-2, 1e3}, {1e-2, 1e-4}};
  const auto res = grid_search(make, data.sequences, dev.sequences, base, grid);
  CHECK(res.best.l2 == 1e-4);
  CHECK(res.entries[0].dev_error > res.entries[1].dev_error);
  CHECK_THROWS_AS(grid_search(make, data.sequences, dev.sequences, base, {}), ConfigError);
}

TEST_CASE("parallel batch operations match serial") {
  std::mt19937_64 rng(14);
  crf::ChainSpec spec;
  spec.num_labels = 3;
  spec.feature_dim = 2;
  const auto chain = random_chain(rng, spec);
  memm::MemmSpec mspec;
  mspec.num_labels = 3;
  mspec.feature_dim = 2;
  mspec.order = 2;
  const auto memm_model = random_memm(rng, mspec);
  std::vector<LabeledSequence> data;
  for (int i = 0; i < 37; ++i) data.push_back(random_sequence(rng, 5, 3, 2));
  const batch::Parallelism par{ExecPolicy::Parallel, 4};

  CHECK(batch::log_likelihoods(chain, data) == batch::log_likelihoods(chain, data, par));
  CHECK(batch::decode_all(chain, data) == batch::decode_all(chain, data, par));
  double a = 0.0, b = 0.0;
  CHECK(flatten(batch::gradient_sum(chain, data, &a)) ==
        flatten(batch::gradient_sum(chain, data, &b, par)));
  CHECK(a == b);
  CHECK(batch::decode_all(memm_model, data) == batch::decode_all(memm_model, data, par));
  CHECK(flatten(batch::gradient_sum(memm_model, data, &a)) ==
        flatten(batch::gradient_sum(memm_model, data, &b, par)));

  data[20].labels[0] = 7;
  CHECK_THROWS_AS(batch::log_likelihoods(chain, data, par), InputError);
}

TEST_CASE("error counting") {
  const std::vector<LabeledSequence> data{{{{0.0}, {0.0}}, {0, 1}}, {{{0.0}}, {2}}};
  CHECK(batch::count_errors(std::vector<std::vector<int>>{{0, 1}, {2}}, data).rate() == 0.0);
  CHECK(batch::count_errors(std::vector<std::vector<int>>{{1, 0}, {0}}, data).rate() == 1.0);
  const auto e = batch::count_errors(std::vector<std::vector<int>>{{0, 0}, {2}}, data);
  CHECK(e.wrong == 1);
  CHECK(e.total == 3);
  CHECK_THROWS_AS(batch::count_errors(std::vector<std::vector<int>>{{0}, {2}}, data), InputError);
}
