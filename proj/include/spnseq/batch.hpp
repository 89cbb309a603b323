#pragma once

// Dataset-level maps over sequences. Parallel versions split the work into
// fixed chunks and reduce them in index order, so results do not depend on
// the thread count.

#include <span>
#include <vector>

#include "spnseq/chain_crf.hpp"
#include "spnseq/kernels.hpp"
#include "spnseq/memm.hpp"

namespace spnseq::batch {

struct Parallelism {
  ExecPolicy policy = ExecPolicy::Serial;
  int jobs = 1;  // threads for ExecPolicy::Parallel; <= 0 uses the OpenMP default
};

std::vector<double> log_likelihoods(const crf::ChainModel& model,
                                    std::span<const LabeledSequence> data, Parallelism par = {});
std::vector<double> log_likelihoods(const memm::MemmModel& model,
                                    std::span<const LabeledSequence> data, Parallelism par = {});

std::vector<std::vector<int>> decode_all(const crf::ChainModel& model,
                                         std::span<const LabeledSequence> data,
                                         Parallelism par = {});
std::vector<std::vector<int>> decode_all(const memm::MemmModel& model,
                                         std::span<const LabeledSequence> data,
                                         Parallelism par = {});

// Sum of per-sequence gradients and log-likelihoods.
crf::ChainModel gradient_sum(const crf::ChainModel& model, std::span<const LabeledSequence> data,
                             double* log_likelihood, Parallelism par = {});
memm::MemmModel gradient_sum(const memm::MemmModel& model, std::span<const LabeledSequence> data,
                             double* log_likelihood, Parallelism par = {});

// Sum in index order.
double ordered_sum(std::span<const double> values);

struct ErrorCount {
  std::size_t wrong = 0;
  std::size_t total = 0;
  double rate() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
  }
};

// Throws InputError when a prediction and its reference differ in length.
ErrorCount count_errors(std::span<const std::vector<int>> predictions,
                        std::span<const LabeledSequence> data);

}  // namespace spnseq::batch
