#include "spnseq/kernels.hpp"

#include <cmath>

#include "spnseq/logspace.hpp"

namespace spnseq::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 14;

inline double leaf_score(std::span<const double> weights, std::span<const double> bias,
                         std::span<const double> x, std::size_t r) {
  const std::size_t dim = x.size();
  const double* row = weights.data() + r * dim;
  double acc = bias[r];
  for (std::size_t j = 0; j < dim; ++j) acc += row[j] * x[j];
  return acc;
}

inline double forward_state(const ChainStep& step, std::span<const double> prev,
                            std::span<const double> edge, std::size_t s) {
  const std::size_t tail = s / step.branch;
  const std::size_t label = s % step.branch;
  double peak = kLogZero;
  for (std::size_t a = 0; a < step.branch; ++a) {
    const std::size_t p = a * step.stride + tail;
    if (p >= step.active_prev) break;
    peak = std::max(peak, prev[p] + edge[p * step.branch + label]);
  }
  if (peak == kLogZero) return kLogZero;
  double total = 0.0;
  for (std::size_t a = 0; a < step.branch; ++a) {
    const std::size_t p = a * step.stride + tail;
    if (p >= step.active_prev) break;
    total += std::exp(prev[p] + edge[p * step.branch + label] - peak);
  }
  return peak + std::log(total);
}

inline double backward_state(const ChainStep& step, std::span<const double> next,
                             std::span<const double> edge, std::size_t s) {
  const std::size_t head = (s % step.stride) * step.branch;
  double peak = kLogZero;
  for (std::size_t y = 0; y < step.branch; ++y)
    peak = std::max(peak, edge[s * step.branch + y] + next[head + y]);
  if (peak == kLogZero) return kLogZero;
  double total = 0.0;
  for (std::size_t y = 0; y < step.branch; ++y)
    total += std::exp(edge[s * step.branch + y] + next[head + y] - peak);
  return peak + std::log(total);
}

}  // namespace

void leaf_scores_serial(std::span<const double> weights, std::span<const double> bias,
                        std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = leaf_score(weights, bias, x, r);
}

void leaf_scores_parallel(std::span<const double> weights, std::span<const double> bias,
                          std::span<const double> x, std::span<double> out) {
  const auto rows = static_cast<long>(out.size());
#pragma omp parallel for schedule(static) if (weights.size() >= kParallelThreshold)
  for (long r = 0; r < rows; ++r)
    out[static_cast<std::size_t>(r)] = leaf_score(weights, bias, x, static_cast<std::size_t>(r));
}

void outer_accumulate_serial(std::span<const double> coeff, std::span<const double> x,
                             std::span<double> grad) {
  const std::size_t dim = x.size();
  for (std::size_t r = 0; r < coeff.size(); ++r) {
    if (coeff[r] == 0.0) continue;
    double* row = grad.data() + r * dim;
    for (std::size_t j = 0; j < dim; ++j) row[j] += coeff[r] * x[j];
  }
}

void outer_accumulate_parallel(std::span<const double> coeff, std::span<const double> x,
                               std::span<double> grad) {
  const std::size_t dim = x.size();
  const auto rows = static_cast<long>(coeff.size());
#pragma omp parallel for schedule(static) if (grad.size() >= kParallelThreshold)
  for (long r = 0; r < rows; ++r) {
    const double c = coeff[static_cast<std::size_t>(r)];
    if (c == 0.0) continue;
    double* row = grad.data() + static_cast<std::size_t>(r) * dim;
    for (std::size_t j = 0; j < dim; ++j) row[j] += c * x[j];
  }
}

void forward_step_serial(const ChainStep& step, std::span<const double> prev,
                         std::span<const double> edge, std::span<double> out) {
  for (std::size_t s = 0; s < step.active_out; ++s) out[s] = forward_state(step, prev, edge, s);
}

void forward_step_parallel(const ChainStep& step, std::span<const double> prev,
                           std::span<const double> edge, std::span<double> out) {
  const auto states = static_cast<long>(step.active_out);
#pragma omp parallel for schedule(static) if (step.active_out * step.branch >= kParallelThreshold)
  for (long s = 0; s < states; ++s)
    out[static_cast<std::size_t>(s)] = forward_state(step, prev, edge, static_cast<std::size_t>(s));
}

void backward_step_serial(const ChainStep& step, std::span<const double> next,
                          std::span<const double> edge, std::span<double> out) {
  for (std::size_t s = 0; s < step.active_out; ++s) out[s] = backward_state(step, next, edge, s);
}

void backward_step_parallel(const ChainStep& step, std::span<const double> next,
                            std::span<const double> edge, std::span<double> out) {
  const auto states = static_cast<long>(step.active_out);
#pragma omp parallel for schedule(static) if (step.active_out * step.branch >= kParallelThreshold)
  for (long s = 0; s < states; ++s)
    out[static_cast<std::size_t>(s)] =
        backward_state(step, next, edge, static_cast<std::size_t>(s));
}

}  // namespace spnseq::kernels
