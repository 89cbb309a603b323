#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP variant; the variants perform the same per-element arithmetic so
// their results are bitwise identical.

#include <cstddef>
#include <span>

namespace spnseq {

enum class ExecPolicy { Serial, Parallel };

namespace kernels {

// out[r] = bias[r] + dot(weights[r * dim : (r + 1) * dim], x)
void leaf_scores_serial(std::span<const double> weights, std::span<const double> bias,
                        std::span<const double> x, std::span<double> out);
void leaf_scores_parallel(std::span<const double> weights, std::span<const double> bias,
                          std::span<const double> x, std::span<double> out);

inline void leaf_scores(ExecPolicy policy, std::span<const double> weights,
                        std::span<const double> bias, std::span<const double> x,
                        std::span<double> out) {
  if (policy == ExecPolicy::Parallel)
    leaf_scores_parallel(weights, bias, x, out);
  else
    leaf_scores_serial(weights, bias, x, out);
}

// grad[r * dim + j] += coeff[r] * x[j]
void outer_accumulate_serial(std::span<const double> coeff, std::span<const double> x,
                             std::span<double> grad);
void outer_accumulate_parallel(std::span<const double> coeff, std::span<const double> x,
                               std::span<double> grad);

inline void outer_accumulate(ExecPolicy policy, std::span<const double> coeff,
                             std::span<const double> x, std::span<double> grad) {
  if (policy == ExecPolicy::Parallel)
    outer_accumulate_parallel(coeff, x, grad);
  else
    outer_accumulate_serial(coeff, x, grad);
}

// One step of the chain recursion over an expanded state space with
// `branch` predecessors per state (states are base-`branch` digit strings,
// the newest label in the lowest digit).
//
// Forward:  out[s] = reduce_a (prev[a * stride + s / branch] + edge[(a * stride + s / branch) * branch + s % branch])
// Backward: out[s] = reduce_y (edge[s * branch + y] + next[(s % stride) * branch + y])
//
// `active_out` limits the states written; states at or beyond it are left
// untouched. Forward predecessors at or beyond `active_prev` are skipped.
struct ChainStep {
  std::size_t branch = 0;   // labels per position (Y)
  std::size_t stride = 0;   // Y^(K-1)
  std::size_t active_prev = 0;
  std::size_t active_out = 0;
};

void forward_step_serial(const ChainStep& step, std::span<const double> prev,
                         std::span<const double> edge, std::span<double> out);
void forward_step_parallel(const ChainStep& step, std::span<const double> prev,
                           std::span<const double> edge, std::span<double> out);
void backward_step_serial(const ChainStep& step, std::span<const double> next,
                          std::span<const double> edge, std::span<double> out);
void backward_step_parallel(const ChainStep& step, std::span<const double> next,
                            std::span<const double> edge, std::span<double> out);

inline void forward_step(ExecPolicy policy, const ChainStep& step, std::span<const double> prev,
                         std::span<const double> edge, std::span<double> out) {
  if (policy == ExecPolicy::Parallel)
    forward_step_parallel(step, prev, edge, out);
  else
    forward_step_serial(step, prev, edge, out);
}

inline void backward_step(ExecPolicy policy, const ChainStep& step, std::span<const double> next,
                          std::span<const double> edge, std::span<double> out) {
  if (policy == ExecPolicy::Parallel)
    backward_step_parallel(step, next, edge, out);
  else
    backward_step_serial(step, next, edge, out);
}

}  // namespace kernels
}  // namespace spnseq
