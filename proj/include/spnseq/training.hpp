#pragma once

// Conditional-likelihood SGD with batch size one, L2 decay, per-epoch
// objective tracking and selection of the best dev snapshot. Works with any
// model exposing parameter_blocks(), zeros_like(), log_likelihood(),
// accumulate_gradient() and decode() (ChainModel, MemmModel).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spnseq/batch.hpp"
#include "spnseq/error.hpp"
#include "spnseq/sequence.hpp"

namespace spnseq::training {

struct EpochRecord {
  int epoch = 0;                       // 1-based
  double objective = 0.0;              // F = sum_n log p(y_n | x_n) on the training set
  double regularized_objective = 0.0;  // F - rho/2 ||w||^2
  std::optional<double> dev_error;
};

struct TrainConfig {
  double learning_rate = 1e-2;  // eta
  double l2 = 1e-4;             // rho
  int epochs = 50;
  int batch_size = 1;
  std::uint64_t shuffle_seed = 0;
  int eval_every = 1;
  batch::Parallelism evaluation{};  // for objective and dev passes only
  std::function<void(const EpochRecord&)> on_epoch;  // optional progress hook

  // Throws ConfigError.
  void validate() const;
};

struct TrainReport {
  TrainConfig config;
  std::size_t train_size = 0;
  std::size_t dev_size = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_error = std::numeric_limits<double>::quiet_NaN();

  nlohmann::json to_json() const;
};

template <typename Model>
struct TrainResult {
  Model best_model;
  TrainReport report;
};

double squared_norm(std::span<const std::span<const double>> blocks);

template <typename Model>
double squared_norm(const Model& model) {
  const auto blocks = model.parameter_blocks();
  return squared_norm(std::span<const std::span<const double>>(blocks));
}

// Label error rate of model.decode over `data`.
template <typename Model>
double error_rate(const Model& model, std::span<const LabeledSequence> data,
                  batch::Parallelism par = {}) {
  return batch::count_errors(batch::decode_all(model, data, par), data).rate();
}

// F(w) - rho/2 ||w||^2.
template <typename Model>
double regularized_objective(const Model& model, std::span<const LabeledSequence> data, double l2,
                             batch::Parallelism par = {}) {
  const auto lls = batch::log_likelihoods(model, data, par);
  return batch::ordered_sum(lls) - 0.5 * l2 * squared_norm(model);
}

template <typename Model>
Model regularized_gradient(const Model& model, std::span<const LabeledSequence> data, double l2,
                           batch::Parallelism par = {}) {
  Model grad = batch::gradient_sum(model, data, nullptr, par);
  auto g = grad.parameter_blocks();
  const auto w = model.parameter_blocks();
  for (std::size_t b = 0; b < g.size(); ++b)
    for (std::size_t j = 0; j < g[b].size(); ++j) g[b][j] -= l2 * w[b][j];
  return grad;
}

namespace detail {

template <typename Model>
void zero(Model& model) {
  for (auto block : model.parameter_blocks()) std::fill(block.begin(), block.end(), 0.0);
}

// w += eta * (g - decay * w)
template <typename Model>
void sgd_step(Model& model, const Model& grad, double eta, double decay) {
  auto w = model.parameter_blocks();
  const auto g = grad.parameter_blocks();
  for (std::size_t b = 0; b < w.size(); ++b)
    for (std::size_t j = 0; j < w[b].size(); ++j) w[b][j] += eta * (g[b][j] - decay * w[b][j]);
}

template <typename Model>
void check_finite(const Model& model) {
  for (auto block : model.parameter_blocks())
    for (double v : block)
      if (!std::isfinite(v)) throw NumericError("training diverged: non-finite weight");
}

}  // namespace detail

// Dev error decides the snapshot when a dev set is given, otherwise the
// training objective does. Ties keep the earlier epoch.
template <typename Model>
TrainResult<Model> train(Model model, std::span<const LabeledSequence> train_set,
                         std::span<const LabeledSequence> dev_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw InputError("training set is empty");

  TrainResult<Model> result{model, {}};
  TrainReport& report = result.report;
  report.config = config;
  report.train_size = train_set.size();
  report.dev_size = dev_set.size();

  const double n = static_cast<double>(train_set.size());
  const double decay = config.l2 / n;
  std::mt19937_64 rng(config.shuffle_seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const bool use_dev = !dev_set.empty();
  double best_score = std::numeric_limits<double>::infinity();

  Model grad = model.zeros_like();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      detail::zero(grad);
      model.accumulate_gradient(train_set[i], grad);
      detail::sgd_step(model, grad, config.learning_rate, decay);
    }
    detail::check_finite(model);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.objective = batch::ordered_sum(batch::log_likelihoods(model, train_set, config.evaluation));
    rec.regularized_objective = rec.objective - 0.5 * config.l2 * squared_norm(model);
    if (!std::isfinite(rec.objective)) throw NumericError("training objective is not finite");

    const bool evaluate = epoch % config.eval_every == 0 || epoch == config.epochs;
    if (evaluate) {
      double score = 0.0;
      if (use_dev) {
        rec.dev_error = error_rate(model, dev_set, config.evaluation);
        score = *rec.dev_error;
      } else {
        score = -rec.regularized_objective;
      }
      if (score < best_score) {
        best_score = score;
        report.best_epoch = epoch;
        if (use_dev) report.best_dev_error = score;
        result.best_model = model;
      }
    }
    report.epochs.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);
  }
  return result;
}

struct GridPoint {
  double learning_rate = 0.0;
  double l2 = 0.0;
};

// The 3 x 3 grid eta, rho in {1e-2, 1e-3, 1e-4}.
std::vector<GridPoint> default_grid();

struct GridEntry {
  GridPoint point;
  double dev_error = 0.0;
  int best_epoch = 0;
};

struct GridResult {
  GridPoint best;
  std::vector<GridEntry> entries;  // grid order
};

// Trains a fresh model per point; the lowest dev error wins, ties go to the
// earlier point.
template <typename Model>
GridResult grid_search(const std::function<Model()>& make_model,
                       std::span<const LabeledSequence> train_set,
                       std::span<const LabeledSequence> dev_set, const TrainConfig& base,
                       std::span<const GridPoint> grid) {
  if (grid.empty()) throw ConfigError("grid is empty");
  if (dev_set.empty()) throw InputError("grid search needs a development set");
  GridResult out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : grid) {
    TrainConfig cfg = base;
    cfg.learning_rate = p.learning_rate;
    cfg.l2 = p.l2;
    const auto run = train(make_model(), train_set, dev_set, cfg);
    out.entries.push_back({p, run.report.best_dev_error, run.report.best_epoch});
    if (run.report.best_dev_error < best) {
      best = run.report.best_dev_error;
      out.best = p;
    }
  }
  return out;
}

struct GradientCheckOptions {
  double step = 1e-5;
  double rel_tolerance = 1e-5;
  double abs_floor = 1e-8;
};

struct CoordinateMismatch {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradientCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;  // over coordinates whose absolute error exceeds the floor
  double max_abs_error = 0.0;
  std::vector<CoordinateMismatch> failures;
  bool passed() const noexcept { return failures.empty(); }
};

// Central differences of `objective` with respect to every entry of
// `params` (blocks flattened in order), compared with `analytic`. A
// coordinate fails when its absolute error exceeds `abs_floor` and its
// relative error exceeds `rel_tolerance`. Parameters are restored.
GradientCheckReport compare_with_finite_differences(std::vector<std::span<double>> params,
                                                    std::span<const double> analytic,
                                                    const std::function<double()>& objective,
                                                    const GradientCheckOptions& options = {});

template <typename Model>
std::vector<double> flatten(const Model& model) {
  std::vector<double> out;
  for (auto block : model.parameter_blocks()) out.insert(out.end(), block.begin(), block.end());
  return out;
}

// d log p(y | x) / dw for one sequence against central differences.
template <typename Model>
GradientCheckReport finite_difference_check(const Model& model, const LabeledSequence& sequence,
                                            const GradientCheckOptions& options = {}) {
  Model grad = model.zeros_like();
  model.accumulate_gradient(sequence, grad);
  Model probe = model;
  return compare_with_finite_differences(
      probe.parameter_blocks(), flatten(grad),
      [&] { return probe.log_likelihood(sequence); }, options);
}

}  // namespace spnseq::training
