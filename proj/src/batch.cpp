#include "spnseq/batch.hpp"

#include <algorithm>
#include <exception>
#include <string>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spnseq/error.hpp"

namespace spnseq::batch {

namespace {

constexpr std::size_t kChunk = 8;

int thread_count(const Parallelism& par) {
#ifdef _OPENMP
  return par.jobs > 0 ? par.jobs : omp_get_max_threads();
#else
  (void)par;
  return 1;
#endif
}

// f(i) for every index, parallel when requested.
template <typename F>
void for_each_index(std::size_t n, const Parallelism& par, F&& f) {
  if (par.policy == ExecPolicy::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const long count = static_cast<long>(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(par))
  for (long i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(spnseq_batch_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

template <typename Model>
std::vector<double> log_likelihoods_impl(const Model& model, std::span<const LabeledSequence> data,
                                         const Parallelism& par) {
  std::vector<double> out(data.size());
  for_each_index(data.size(), par, [&](std::size_t i) { out[i] = model.log_likelihood(data[i]); });
  return out;
}

template <typename Model>
std::vector<std::vector<int>> decode_impl(const Model& model, std::span<const LabeledSequence> data,
                                          const Parallelism& par) {
  std::vector<std::vector<int>> out(data.size());
  for_each_index(data.size(), par,
                 [&](std::size_t i) { out[i] = model.decode(data[i].observations); });
  return out;
}

template <typename Model>
void add_into(Model& acc, const Model& part) {
  auto dst = acc.parameter_blocks();
  const auto src = std::as_const(part).parameter_blocks();
  for (std::size_t b = 0; b < dst.size(); ++b)
    for (std::size_t j = 0; j < dst[b].size(); ++j) dst[b][j] += src[b][j];
}

// Sequences are summed within fixed chunks, chunks are added in order.
template <typename Model>
Model gradient_sum_impl(const Model& model, std::span<const LabeledSequence> data, double* ll,
                        const Parallelism& par) {
  const std::size_t chunks = (data.size() + kChunk - 1) / kChunk;
  std::vector<Model> partial(chunks, model.zeros_like());
  std::vector<double> partial_ll(chunks, 0.0);
  for_each_index(chunks, par, [&](std::size_t c) {
    const std::size_t end = std::min(data.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i)
      partial_ll[c] += model.accumulate_gradient(data[i], partial[c]);
  });
  Model total = model.zeros_like();
  for (const auto& p : partial) add_into(total, p);
  if (ll) *ll = ordered_sum(partial_ll);
  return total;
}

}  // namespace

std::vector<double> log_likelihoods(const crf::ChainModel& model,
                                    std::span<const LabeledSequence> data, Parallelism par) {
  return log_likelihoods_impl(model, data, par);
}

std::vector<double> log_likelihoods(const memm::MemmModel& model,
                                    std::span<const LabeledSequence> data, Parallelism par) {
  return log_likelihoods_impl(model, data, par);
}

std::vector<std::vector<int>> decode_all(const crf::ChainModel& model,
                                         std::span<const LabeledSequence> data, Parallelism par) {
  return decode_impl(model, data, par);
}

std::vector<std::vector<int>> decode_all(const memm::MemmModel& model,
                                         std::span<const LabeledSequence> data, Parallelism par) {
  return decode_impl(model, data, par);
}

crf::ChainModel gradient_sum(const crf::ChainModel& model, std::span<const LabeledSequence> data,
                             double* log_likelihood, Parallelism par) {
  return gradient_sum_impl(model, data, log_likelihood, par);
}

memm::MemmModel gradient_sum(const memm::MemmModel& model, std::span<const LabeledSequence> data,
                             double* log_likelihood, Parallelism par) {
  return gradient_sum_impl(model, data, log_likelihood, par);
}

double ordered_sum(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

ErrorCount count_errors(std::span<const std::vector<int>> predictions,
                        std::span<const LabeledSequence> data) {
  if (predictions.size() != data.size())
    throw InputError("prediction count does not match the dataset");
  ErrorCount out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predictions[i].size() != data[i].labels.size())
      throw InputError("prediction length does not match sequence " + std::to_string(i));
    for (std::size_t t = 0; t < data[i].labels.size(); ++t)
      if (predictions[i][t] != data[i].labels[t]) ++out.wrong;
    out.total += data[i].labels.size();
  }
  return out;
}

}  // namespace spnseq::batch
