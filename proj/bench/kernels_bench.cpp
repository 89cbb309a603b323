// Serial reference vs OpenMP variants of the hot kernels and of the
// dataset-level gradient pass.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spnseq/batch.hpp"
#include "spnseq/chain_crf.hpp"
#include "spnseq/data_io.hpp"
#include "spnseq/kernels.hpp"

using namespace spnseq;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::Serial : ExecPolicy::Parallel;
}

// Rows = leaves of an OCR-sized SPN (26 labels, (I H)^L = 36), dim = 128 pixels.
void BM_LeafScores(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(1));
  const std::size_t dim = 128;
  const auto w = random_vector(rows * dim, 1);
  const auto b = random_vector(rows, 2);
  const auto x = random_vector(dim, 3);
  std::vector<double> out(rows);
  for (auto _ : state) {
    kernels::leaf_scores(policy_of(state), w, b, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows * dim));
}

void BM_OuterAccumulate(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(1));
  const std::size_t dim = 128;
  const auto c = random_vector(rows, 4);
  const auto x = random_vector(dim, 5);
  std::vector<double> g(rows * dim, 0.0);
  for (auto _ : state) {
    kernels::outer_accumulate(policy_of(state), c, x, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows * dim));
}

// Second-order chain over Y labels: Y^2 states, Y predecessors each.
kernels::ChainStep chain_step(std::size_t labels) {
  return {labels, labels, labels * labels, labels * labels};
}

void BM_ForwardStep(benchmark::State& state) {
  const auto y = static_cast<std::size_t>(state.range(1));
  const auto step = chain_step(y);
  const auto prev = random_vector(y * y, 6);
  const auto edge = random_vector(y * y * y, 7);
  std::vector<double> out(y * y);
  for (auto _ : state) {
    kernels::forward_step(policy_of(state), step, prev, edge, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_BackwardStep(benchmark::State& state) {
  const auto y = static_cast<std::size_t>(state.range(1));
  const auto step = chain_step(y);
  const auto next = random_vector(y * y, 8);
  const auto edge = random_vector(y * y * y, 9);
  std::vector<double> out(y * y);
  for (auto _ : state) {
    kernels::backward_step(policy_of(state), step, next, edge, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// Full-dataset gradient of a first-order SPN-CRF on the toy task.
void BM_GradientSum(benchmark::State& state) {
  data::SynthSpec spec;
  spec.num_sequences = static_cast<int>(state.range(1));
  spec.feature_dim = 32;
  const auto ds = data::synth_task(spec).dataset;
  crf::ChainSpec cs;
  cs.num_labels = spec.num_labels;
  cs.feature_dim = spec.feature_dim;
  cs.layers = 2;
  cs.children = 2;
  cs.states = 2;
  const auto model = crf::make_chain_model(cs, ds.sequences, 0);
  const batch::Parallelism par{policy_of(state), 0};
  for (auto _ : state) {
    double ll = 0.0;
    auto g = batch::gradient_sum(model, ds.sequences, &ll, par);
    benchmark::DoNotOptimize(ll);
  }
  state.SetItemsProcessed(state.iterations() * spec.num_sequences);
}

}  // namespace

BENCHMARK(BM_LeafScores)->ArgsProduct({{0, 1}, {936, 26 * 256}});
BENCHMARK(BM_OuterAccumulate)->ArgsProduct({{0, 1}, {936, 26 * 256}});
BENCHMARK(BM_ForwardStep)->ArgsProduct({{0, 1}, {26, 64}});
BENCHMARK(BM_BackwardStep)->ArgsProduct({{0, 1}, {26, 64}});
BENCHMARK(BM_GradientSum)->ArgsProduct({{0, 1}, {64, 256}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
