#include "spnseq/training.hpp"

namespace spnseq::training {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ConfigError("l2 must be non-negative");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size != 1) throw ConfigError("only batch size 1 is supported");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json j;
  j["config"] = {{"learning_rate", config.learning_rate},
                 {"l2", config.l2},
                 {"epochs", config.epochs},
                 {"batch_size", config.batch_size},
                 {"shuffle_seed", config.shuffle_seed},
                 {"eval_every", config.eval_every}};
  j["train_size"] = train_size;
  j["dev_size"] = dev_size;
  j["best_epoch"] = best_epoch;
  j["best_dev_error"] = std::isnan(best_dev_error) ? nlohmann::json(nullptr)
                                                   : nlohmann::json(best_dev_error);
  auto& arr = j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json r{{"epoch", e.epoch},
                     {"objective", e.objective},
                     {"regularized_objective", e.regularized_objective}};
    r["dev_error"] = e.dev_error ? nlohmann::json(*e.dev_error) : nlohmann::json(nullptr);
    arr.push_back(std::move(r));
  }
  return j;
}

double squared_norm(std::span<const std::span<const double>> blocks) {
  double s = 0.0;
  for (auto b : blocks)
    for (double v : b) s += v * v;
  return s;
}

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> grid;
  for (double eta : {1e-2, 1e-3, 1e-4})
    for (double rho : {1e-2, 1e-3, 1e-4}) grid.push_back({eta, rho});
  return grid;
}

GradientCheckReport compare_with_finite_differences(std::vector<std::span<double>> params,
                                                    std::span<const double> analytic,
                                                    const std::function<double()>& objective,
                                                    const GradientCheckOptions& options) {
  std::size_t total = 0;
  for (auto b : params) total += b.size();
  if (total != analytic.size())
    throw ContractError("analytic gradient size does not match the parameters");
  if (!(options.step > 0.0)) throw ConfigError("finite-difference step must be positive");

  GradientCheckReport report;
  std::size_t index = 0;
  for (auto block : params) {
    for (double& w : block) {
      const double saved = w;
      w = saved + options.step;
      const double up = objective();
      w = saved - options.step;
      const double down = objective();
      w = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[index];
      const double abs_err = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale > 0.0 ? abs_err / scale : 0.0;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        report.failures.push_back({index, a, numeric, std::numeric_limits<double>::infinity()});
        report.max_rel_error = std::numeric_limits<double>::infinity();
      } else if (abs_err > options.abs_floor) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel > options.rel_tolerance) report.failures.push_back({index, a, numeric, rel});
      }
      ++index;
      ++report.checked;
    }
  }
  return report;
}

}  // namespace spnseq::training
