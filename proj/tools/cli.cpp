#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "spnseq/batch.hpp"
#include "spnseq/data_io.hpp"
#include "spnseq/error.hpp"
#include "spnseq/logspace.hpp"
#include "spnseq/model_io.hpp"
#include "spnseq/training.hpp"
#include "spnseq/verify.hpp"

namespace spnseq::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

const std::vector<std::string> kModels{"spn-crf", "spn-ho-crf", "spn-memm"};

bool is_chain(const std::string& model) { return model != "spn-memm"; }

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("bad " + what + ": '" + s + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(item, what));
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

batch::Parallelism parallelism(int jobs) {
  return jobs > 1 ? batch::Parallelism{ExecPolicy::Parallel, jobs} : batch::Parallelism{};
}

// Independent streams for initialization and shuffling, both from --seed.
struct Seeds {
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
};

Seeds derive_seeds(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  Seeds s;
  s.init = rng();
  s.shuffle = rng();
  return s;
}

struct Splits {
  data::Dataset train;
  data::Dataset dev;
  data::Dataset test;
  std::optional<data::NormalizationStats> stats;
};

data::Dataset load_with_labels(const std::string& path, int num_labels, int feature_dim) {
  if (path.empty()) return {};
  auto ds = data::load_jsonl(path, num_labels);
  if (!ds.sequences.empty() && ds.feature_dim != feature_dim)
    throw InputError(path + ": feature_dim " + std::to_string(ds.feature_dim) + " differs from " +
                     std::to_string(feature_dim));
  return ds;
}

Splits load_splits(const RunConfig& c) {
  Splits s;
  if (!c.ocr_path.empty()) {
    auto ocr = data::load_ocr(c.ocr_path);
    if (c.fold < 0 || c.fold >= ocr.folds.num_folds)
      throw ConfigError("--fold must be in [0, " + std::to_string(ocr.folds.num_folds) + ")");
    auto [train, test] = data::split_by_fold(ocr.dataset, ocr.folds, c.fold);
    s.train = std::move(train);
    s.test = std::move(test);
  } else {
    s.train = data::load_jsonl(c.train_path);
    s.dev = load_with_labels(c.dev_path, s.train.num_labels(), s.train.feature_dim);
    s.test = load_with_labels(c.test_path, s.train.num_labels(), s.train.feature_dim);
  }
  if (s.train.sequences.empty()) throw InputError("training set is empty");
  if (c.normalize) {
    s.stats = data::compute_stats(s.train);
    data::apply_stats(*s.stats, s.train);
    if (!s.dev.sequences.empty()) data::apply_stats(*s.stats, s.dev);
    if (!s.test.sequences.empty()) data::apply_stats(*s.stats, s.test);
  }
  return s;
}

using AnyModel = std::variant<crf::ChainModel, memm::MemmModel>;

AnyModel build_model(const RunConfig& c, const data::Dataset& train, std::uint64_t seed) {
  if (is_chain(c.model))
    return crf::make_chain_model(chain_spec(c, train.num_labels(), train.feature_dim),
                                 train.sequences, seed);
  return memm::make_memm_model(memm_spec(c, train.num_labels(), train.feature_dim), seed);
}

training::TrainConfig train_config(const RunConfig& c, std::uint64_t shuffle_seed) {
  training::TrainConfig t;
  t.learning_rate = c.learning_rate;
  t.l2 = c.l2;
  t.epochs = c.epochs;
  t.eval_every = c.eval_every;
  t.shuffle_seed = shuffle_seed;
  t.evaluation = parallelism(c.jobs);
  return t;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string percent(double rate) { return fixed(100.0 * rate, 2) + "%"; }

Json run_config_json(const RunConfig& c) {
  Json j;
  j["model"] = c.model;
  j["layers"] = c.layers;
  j["children"] = c.children;
  j["states"] = c.states;
  if (c.factors) j["factors"] = *c.factors;
  if (c.order) j["order"] = *c.order;
  if (c.ngrams) j["ngrams"] = *c.ngrams;
  j["window"] = c.window;
  j["beam_width"] = c.beam_width;
  j["semiring"] = c.semiring;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["normalize"] = c.normalize;
  if (!c.ocr_path.empty()) {
    j["ocr"] = c.ocr_path;
    j["fold"] = c.fold;
  } else {
    j["train"] = c.train_path;
    if (!c.dev_path.empty()) j["dev"] = c.dev_path;
    if (!c.test_path.empty()) j["test"] = c.test_path;
  }
  return j;
}

// ---- option wiring -------------------------------------------------------

void add_model_options(CLI::App& app, RunConfig& c) {
  app.add_option("--model", c.model, "Model kind")->check(CLI::IsMember(kModels));
  app.add_option("--layers", c.layers, "SPN hidden layers L");
  app.add_option("--children", c.children, "Children per parent I");
  app.add_option("--states", c.states, "States per hidden variable H");
  app.add_option("--factors", c.factors, "CRF local factors as m:n,...");
  app.add_option("--order", c.order,
                 "CRF: highest transition n-gram order; MEMM: order M");
  app.add_option("--ngrams", c.ngrams, "Transition dictionaries: dense or sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  app.add_option("--window", c.window, "MEMM observation window m");
  app.add_option("--beam-width", c.beam_width, "MEMM beam width");
  app.add_option("--semiring", c.semiring, "SPN semiring")->check(CLI::IsMember({"sum", "max"}));
}

void add_train_options(CLI::App& app, RunConfig& c) {
  app.add_option("--lr", c.learning_rate, "Learning rate");
  app.add_option("--l2", c.l2, "L2 regularizer");
  app.add_option("--epochs", c.epochs, "Training epochs");
  app.add_option("--eval-every", c.eval_every, "Epochs between dev evaluations");
}

void add_data_options(CLI::App& app, RunConfig& c) {
  app.add_option("--train", c.train_path, "Training set (JSON lines)");
  app.add_option("--dev", c.dev_path, "Development set (JSON lines)");
  app.add_option("--test", c.test_path, "Test set (JSON lines)");
  app.add_option("--ocr", c.ocr_path, "OCR letter file (replaces --train/--test)");
  app.add_option("--fold", c.fold, "OCR test fold");
  app.add_flag("--normalize,!--no-normalize", c.normalize, "Normalize features (default on)");
}

void add_common_options(CLI::App& app, RunConfig& c) {
  app.add_option("--seed", c.seed, "Seed for every random choice");
  app.add_option("--jobs", c.jobs, "Worker threads for evaluation passes");
}

// ---- commands ------------------------------------------------------------

template <typename Model>
Json error_report(const Model& model, std::span<const LabeledSequence> data,
                  const batch::Parallelism& par) {
  const auto predictions = batch::decode_all(model, data, par);
  const auto total = batch::count_errors(predictions, data);
  Json per = Json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t wrong = 0;
    for (std::size_t t = 0; t < data[i].labels.size(); ++t)
      wrong += predictions[i][t] != data[i].labels[t] ? 1 : 0;
    per.push_back({{"index", i}, {"wrong", wrong}, {"total", data[i].labels.size()}});
  }
  Json j;
  j["error_rate"] = total.rate();
  j["wrong"] = total.wrong;
  j["total"] = total.total;
  j["per_sequence"] = std::move(per);
  return j;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  c.validate();
  const auto seeds = derive_seeds(c.seed);
  auto cfg = train_config(c, seeds.shuffle);
  cfg.validate();
  const auto splits = load_splits(c);
  cfg.on_epoch = [&](const training::EpochRecord& r) {
    err << "epoch " << r.epoch << "  objective " << fixed(r.objective)
        << "  regularized " << fixed(r.regularized_objective);
    if (r.dev_error) err << "  dev error " << percent(*r.dev_error);
    err << '\n';
  };
  const AnyModel initial = build_model(c, splits.train, seeds.init);

  return std::visit(
      [&](const auto& model) {
        const auto run = training::train(model, splits.train.sequences, splits.dev.sequences, cfg);
        io::save_checkpoint({c.model, run.best_model, splits.train.label_alphabet, splits.stats},
                            c.checkpoint);
        Json report;
        report["run"] = run_config_json(c);
        report["parameters"] = model.parameter_count();
        report["training"] = run.report.to_json();
        out << "best epoch " << run.report.best_epoch;
        if (!splits.dev.sequences.empty())
          out << "  dev error " << percent(run.report.best_dev_error);
        if (!splits.test.sequences.empty()) {
          report["test"] = error_report(run.best_model, splits.test.sequences, cfg.evaluation);
          out << "  test error " << percent(report["test"]["error_rate"].get<double>());
        }
        out << '\n';
        io::write_json(report, c.report);
        out << "wrote " << c.checkpoint << " and " << c.report << '\n';
        return kExitOk;
      },
      initial);
}

struct EvalArgs {
  std::string checkpoint = "model.json";
  std::string data_path;
  std::string ocr_path;
  int fold = 0;
  std::string report;
  std::string output;
  std::string marginals;
  int jobs = 1;
};

data::Dataset eval_data(const EvalArgs& a, const io::Checkpoint& cp) {
  const int num_labels = static_cast<int>(cp.label_alphabet.size());
  data::Dataset ds;
  if (!a.ocr_path.empty()) {
    auto ocr = data::load_ocr(a.ocr_path);
    if (a.fold < 0 || a.fold >= ocr.folds.num_folds)
      throw ConfigError("--fold must be in [0, " + std::to_string(ocr.folds.num_folds) + ")");
    ds = data::split_by_fold(ocr.dataset, ocr.folds, a.fold).second;
  } else {
    if (a.data_path.empty()) throw ConfigError("--data or --ocr is required");
    ds = data::load_jsonl(a.data_path, num_labels);
  }
  if (cp.normalization && !ds.sequences.empty()) data::apply_stats(*cp.normalization, ds);
  return ds;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto cp = io::load_checkpoint(a.checkpoint);
  const auto ds = eval_data(a, cp);
  const auto par = parallelism(a.jobs);
  const Json report = std::visit(
      [&](const auto& model) { return error_report(model, ds.sequences, par); }, cp.model);
  out << "error rate " << percent(report["error_rate"].get<double>()) << " ("
      << report["wrong"].get<std::size_t>() << " of " << report["total"].get<std::size_t>()
      << " labels)\n";
  if (!a.report.empty()) io::write_json(report, a.report);
  return kExitOk;
}

int cmd_predict(const EvalArgs& a, std::ostream& out) {
  const auto cp = io::load_checkpoint(a.checkpoint);
  const auto ds = eval_data(a, cp);
  const auto* chain = std::get_if<crf::ChainModel>(&cp.model);
  if (!a.marginals.empty() && chain == nullptr)
    throw ConfigError("--marginals needs a CRF checkpoint");
  const auto predictions = std::visit(
      [&](const auto& model) { return batch::decode_all(model, ds.sequences, parallelism(a.jobs)); },
      cp.model);

  std::ofstream file;
  if (!a.output.empty()) {
    file.open(a.output);
    if (!file) throw InputError("cannot write " + a.output);
  }
  std::ostream& dest = a.output.empty() ? out : file;
  for (const auto& labels : predictions) {
    for (std::size_t t = 0; t < labels.size(); ++t) dest << (t ? " " : "") << labels[t];
    dest << '\n';
  }

  if (!a.marginals.empty()) {
    std::ofstream m(a.marginals);
    if (!m) throw InputError("cannot write " + a.marginals);
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
      const auto mg = crf::posterior_marginals(*chain, ds.sequences[i].observations);
      Json rows = Json::array();
      for (std::size_t t = 0; t < mg.length; ++t)
        rows.push_back(std::vector<double>(mg.node.begin() + static_cast<long>(t * mg.states),
                                           mg.node.begin() + static_cast<long>((t + 1) * mg.states)));
      Json rec{{"index", i}, {"states", mg.states}, {"marginals", std::move(rows)}};
      m << rec.dump() << '\n';
    }
  }
  return kExitOk;
}

int cmd_grid(const RunConfig& c, std::ostream& out, std::ostream& err) {
  c.validate();
  const auto seeds = derive_seeds(c.seed);
  const auto base = train_config(c, seeds.shuffle);
  base.validate();
  const auto splits = load_splits(c);
  if (splits.dev.sequences.empty()) throw ConfigError("grid-search needs --dev");
  const auto grid = training::default_grid();

  auto search = [&](const auto& initial) {
    using Model = std::decay_t<decltype(initial)>;
    const std::function<Model()> make = [&] { return initial; };
    return training::grid_search(make, splits.train.sequences, splits.dev.sequences, base,
                                 std::span<const training::GridPoint>(grid));
  };
  const auto result = std::visit(search, build_model(c, splits.train, seeds.init));

  Json report;
  report["run"] = run_config_json(c);
  report["epochs"] = c.epochs;
  auto& entries = report["entries"] = Json::array();
  for (const auto& e : result.entries) {
    err << "lr " << e.point.learning_rate << "  l2 " << e.point.l2 << "  dev error "
        << percent(e.dev_error) << "  (epoch " << e.best_epoch << ")\n";
    entries.push_back({{"learning_rate", e.point.learning_rate},
                       {"l2", e.point.l2},
                       {"dev_error", e.dev_error},
                       {"best_epoch", e.best_epoch}});
  }
  report["best"] = {{"learning_rate", result.best.learning_rate}, {"l2", result.best.l2}};
  io::write_json(report, c.report);
  out << "best lr " << result.best.learning_rate << "  l2 " << result.best.l2 << '\n';
  return kExitOk;
}

struct VerifyArgs {
  std::string scope = "all";
  bool inject_fault = false;
  std::uint64_t seed = 0;
  int instances = 0;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  verify::SuiteOptions opt;
  opt.seed = a.seed;
  opt.instances = a.instances;
  opt.inject_fault = a.inject_fault;
  const auto results = verify::run_scope(a.scope, opt);
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.instances << " instances, "
        << r.failures << " failures, max error " << r.max_error << ", " << fixed(r.seconds, 2)
        << " s\n";
    for (const auto& msg : r.messages) out << "  " << msg << '\n';
    ok = ok && r.passed();
  }
  return ok ? kExitOk : kExitVerify;
}

struct SynthArgs {
  data::SynthSpec spec;
  std::string sizes = "125,25,50";
  std::string output_dir = ".";
};

int cmd_synth(SynthArgs a, std::ostream& out) {
  const auto sizes = parse_int_list(a.sizes, "--sizes");
  if (sizes.size() > 3) throw ConfigError("--sizes takes at most train,dev,test");
  int n = 0;
  for (int s : sizes) {
    if (s < 1) throw ConfigError("--sizes entries must be >= 1");
    n += s;
  }
  a.spec.num_sequences = n;
  const auto task = data::synth_task(a.spec);
  fs::create_directories(a.output_dir);
  const char* names[] = {"train.jsonl", "dev.jsonl", "test.jsonl"};
  std::size_t begin = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto end = begin + static_cast<std::size_t>(sizes[i]);
    const auto path = fs::path(a.output_dir) / names[i];
    data::save_jsonl(data::subset(task.dataset, begin, end), path);
    out << "wrote " << path.string() << " (" << sizes[i] << " sequences)\n";
    begin = end;
  }
  out << "estimated per-frame Bayes error " << percent(task.frame_error_estimate) << '\n';
  return kExitOk;
}

}  // namespace

std::vector<crf::FactorShape> parse_factors(const std::string& text) {
  std::vector<crf::FactorShape> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("factor '" + item + "' is not m:n");
    crf::FactorShape f;
    f.window = parse_int(item.substr(0, colon), "factor window");
    f.gram = parse_int(item.substr(colon + 1), "factor order");
    if (f.window < 1 || f.gram < 1 || f.gram > 3)
      throw ConfigError("factor '" + item + "' needs m >= 1 and 1 <= n <= 3");
    out.push_back(f);
  }
  if (out.empty()) throw ConfigError("--factors is empty");
  return out;
}

void RunConfig::validate() const {
  if (std::find(kModels.begin(), kModels.end(), model) == kModels.end())
    throw ConfigError("unknown model '" + model + "'");
  if (layers < 1) throw ConfigError("--layers must be >= 1");
  if (children < 1) throw ConfigError("--children must be >= 1");
  if (states < 1) throw ConfigError("--states must be >= 1");
  if (epochs < 1) throw ConfigError("--epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("--lr must be positive");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ConfigError("--l2 must be non-negative");
  if (eval_every < 1) throw ConfigError("--eval-every must be >= 1");
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (semiring != "sum" && semiring != "max") throw ConfigError("--semiring is sum or max");
  if (ocr_path.empty() && train_path.empty()) throw ConfigError("--train or --ocr is required");
  if (!ocr_path.empty() && (!train_path.empty() || !test_path.empty()))
    throw ConfigError("--ocr replaces --train and --test");
  if (is_chain(model)) {
    const auto shapes = parse_factors(factors.value_or("1:1"));
    const int n = order.value_or(model == "spn-crf" ? 2 : 3);
    if (n < 1 || n > 3) throw ConfigError("--order must be in [1, 3] for CRF models");
    if (model == "spn-crf") {
      if (n > 2) throw ConfigError("spn-crf is first order; use spn-ho-crf for --order 3");
      for (const auto& f : shapes)
        if (f.gram != 1) throw ConfigError("spn-crf factors have n = 1; use spn-ho-crf");
    }
  } else {
    if (factors) throw ConfigError("--factors applies to CRF models");
    if (ngrams) throw ConfigError("--ngrams applies to CRF models");
    if (order.value_or(1) < 1) throw ConfigError("--order must be >= 1 for spn-memm");
    if (window < 1) throw ConfigError("--window must be >= 1");
    if (beam_width < 1) throw ConfigError("--beam-width must be >= 1");
  }
}

crf::ChainSpec chain_spec(const RunConfig& c, int num_labels, int feature_dim) {
  crf::ChainSpec s;
  s.num_labels = num_labels;
  s.feature_dim = feature_dim;
  const int n = c.order.value_or(c.model == "spn-crf" ? 2 : 3);
  s.ngram_orders.clear();
  if (n == 1) s.ngram_orders.push_back(1);
  for (int k = 2; k <= n; ++k) s.ngram_orders.push_back(k);
  s.sparse_ngrams = c.ngrams ? *c.ngrams == "sparse" : c.model == "spn-ho-crf";
  s.factors = parse_factors(c.factors.value_or("1:1"));
  s.layers = c.layers;
  s.children = c.children;
  s.states = c.states;
  s.semiring = semiring_from_string(c.semiring);
  return s;
}

memm::MemmSpec memm_spec(const RunConfig& c, int num_labels, int feature_dim) {
  memm::MemmSpec s;
  s.num_labels = num_labels;
  s.feature_dim = feature_dim;
  s.order = c.order.value_or(1);
  s.window = c.window;
  s.layers = c.layers;
  s.children = c.children;
  s.states = c.states;
  s.semiring = semiring_from_string(c.semiring);
  s.beam_width = c.beam_width;
  return s;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SPN-based sequence labelling: CRFs and MEMMs with SPN local factors"};
  app.name("spnseq");
  app.set_config("--config", "", "Read options from a config file (flags override it)");
  app.require_subcommand(1);

  RunConfig train_cfg;
  auto* train = app.add_subcommand("train", "Train a model and write checkpoint and report");
  add_model_options(*train, train_cfg);
  add_train_options(*train, train_cfg);
  add_data_options(*train, train_cfg);
  add_common_options(*train, train_cfg);
  train->add_option("--checkpoint", train_cfg.checkpoint, "Checkpoint output path");
  train->add_option("--report", train_cfg.report, "Report output path");

  RunConfig grid_cfg;
  grid_cfg.report = "grid.json";
  auto* grid = app.add_subcommand("grid-search", "Select lr and l2 on the dev set");
  add_model_options(*grid, grid_cfg);
  add_train_options(*grid, grid_cfg);
  add_data_options(*grid, grid_cfg);
  add_common_options(*grid, grid_cfg);
  grid->add_option("--report", grid_cfg.report, "Report output path");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Label error rate of a checkpoint");
  EvalArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Decode a dataset with a checkpoint");
  for (auto [cmd, args] : {std::pair{eval, &eval_args}, std::pair{predict, &predict_args}}) {
    cmd->add_option("--checkpoint", args->checkpoint, "Checkpoint path");
    cmd->add_option("--data", args->data_path, "Dataset (JSON lines)");
    cmd->add_option("--ocr", args->ocr_path, "OCR letter file; evaluates --fold");
    cmd->add_option("--fold", args->fold, "OCR fold");
    cmd->add_option("--jobs", args->jobs, "Worker threads")->check(CLI::PositiveNumber);
  }
  eval->add_option("--report", eval_args.report, "JSON report with per-sequence errors");
  predict->add_option("--output", predict_args.output, "Label file (default stdout)");
  predict->add_option("--marginals", predict_args.marginals, "Posterior marginals (JSON lines)");

  VerifyArgs verify_args;
  auto* ver = app.add_subcommand("verify", "Run oracle and finite-difference suites");
  ver->add_option("--scope", verify_args.scope, "Suite to run")
      ->check(CLI::IsMember(verify::scope_names()));
  ver->add_flag("--inject-fault", verify_args.inject_fault, "Corrupt one weight (must fail)");
  ver->add_option("--seed", verify_args.seed, "Seed");
  ver->add_option("--instances", verify_args.instances, "Instances per suite (0 = default)");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write the synthetic sequence task");
  synth->add_option("--seed", synth_args.spec.seed, "Seed");
  synth->add_option("--length", synth_args.spec.length, "Sequence length T");
  synth->add_option("--labels", synth_args.spec.num_labels, "Labels Y");
  synth->add_option("--dim", synth_args.spec.feature_dim, "Feature dimension");
  synth->add_option("--separation", synth_args.spec.separation, "Cluster separation in sigma");
  synth->add_option("--sizes", synth_args.sizes, "Sequences in train[,dev[,test]]");
  synth->add_option("--output-dir", synth_args.output_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_cfg, out, err);
    if (grid->parsed()) return cmd_grid(grid_cfg, out, err);
    if (eval->parsed()) return cmd_eval(eval_args, out);
    if (predict->parsed()) return cmd_predict(predict_args, out);
    if (ver->parsed()) return cmd_verify(verify_args, out);
    if (synth->parsed()) return cmd_synth(synth_args, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace spnseq::cli
