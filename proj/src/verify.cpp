#include "spnseq/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "spnseq/chain_crf.hpp"
#include "spnseq/error.hpp"
#include "spnseq/memm.hpp"
#include "spnseq/oracle.hpp"
#include "spnseq/spn.hpp"
#include "spnseq/training.hpp"

namespace spnseq::verify {

namespace {

constexpr double kSpnTolerance = 1e-10;
constexpr double kPartitionTolerance = 1e-10;
constexpr double kForwardBackwardTolerance = 1e-9;
constexpr std::size_t kMaxGradientParams = 500;
constexpr std::size_t kMaxMessages = 5;

using Clock = std::chrono::steady_clock;

class Random {
 public:
  explicit Random(std::uint64_t seed) : rng_(seed) {}
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::vector<double> vector(std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = real(-scale, scale);
    return v;
  }
  Observations observations(std::size_t length, int dim) {
    Observations obs(length);
    for (auto& x : obs) x = vector(static_cast<std::size_t>(dim));
    return obs;
  }
  std::vector<int> labels(std::size_t length, int num_labels) {
    std::vector<int> y(length);
    for (int& v : y) v = integer(0, num_labels - 1);
    return y;
  }
  template <typename Model>
  void randomize(Model& model, double scale) {
    for (auto block : model.parameter_blocks())
      for (double& w : block) w = real(-scale, scale);
  }
  // Adds `delta` to one random parameter.
  template <typename Model>
  void corrupt(Model& model, double delta) {
    auto blocks = model.parameter_blocks();
    std::size_t total = 0;
    for (auto b : blocks) total += b.size();
    auto index = static_cast<std::size_t>(integer(0, static_cast<int>(total) - 1));
    for (auto b : blocks) {
      if (index < b.size()) {
        b[index] += delta;
        return;
      }
      index -= b.size();
    }
  }
  std::uint64_t next() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

class Recorder {
 public:
  explicit Recorder(std::string name) : start_(Clock::now()) { result_.name = std::move(name); }

  void instance() { ++result_.instances; }
  void error(double e) { result_.max_error = std::max(result_.max_error, e); }
  void fail(const std::string& message) {
    ++result_.failures;
    if (result_.messages.size() < kMaxMessages) result_.messages.push_back(message);
  }
  void miss(const std::string& check) { ++result_.check_failures[check]; }
  SuiteResult finish() {
    result_.seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    return result_;
  }

 private:
  SuiteResult result_;
  Clock::time_point start_;
};

std::string describe(const std::vector<int>& labels) {
  std::ostringstream os;
  for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
  return os.str();
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

crf::ChainModel random_chain(Random& rnd, int labels, int dim, int max_order) {
  crf::ChainSpec spec;
  spec.num_labels = labels;
  spec.feature_dim = dim;
  spec.ngram_orders.clear();
  for (int n = 1; n <= max_order; ++n)
    if (rnd.integer(0, 1) == 1) spec.ngram_orders.push_back(n);
  spec.factors.clear();
  const int factor_count = rnd.integer(1, 2);
  for (int f = 0; f < factor_count; ++f)
    spec.factors.push_back({rnd.integer(1, 3), rnd.integer(1, std::min(2, max_order))});
  spec.layers = 1;
  spec.children = rnd.integer(1, 2);
  spec.states = 2;
  auto model = crf::make_chain_model(spec, {}, rnd.next());
  rnd.randomize(model, 1.0);
  return model;
}

memm::MemmModel random_memm(Random& rnd, int labels, int dim, int order, double scale) {
  memm::MemmSpec spec;
  spec.num_labels = labels;
  spec.feature_dim = dim;
  spec.order = order;
  spec.window = rnd.integer(1, 3);
  spec.layers = 1;
  spec.children = rnd.integer(1, 2);
  spec.states = 2;
  auto model = memm::make_memm_model(spec, rnd.next());
  rnd.randomize(model, scale);
  return model;
}

void check_gradient(Recorder& rec, const std::string& what,
                    std::vector<std::span<double>> params, std::vector<double> analytic,
                    const std::function<double()>& objective, bool inject) {
  if (inject) {
    for (double& g : analytic)
      if (std::abs(g) > 1e-3) {
        g *= 2.0;
        break;
      }
  }
  const auto report = training::compare_with_finite_differences(std::move(params), analytic,
                                                                objective);
  rec.instance();
  rec.error(report.max_abs_error);
  if (!report.passed()) {
    const auto& f = report.failures.front();
    std::ostringstream os;
    os << what << ": " << report.failures.size() << " coordinate(s) off, first #" << f.index
       << " analytic " << f.analytic << " numeric " << f.numeric;
    rec.fail(os.str());
  }
}

}  // namespace

SuiteResult spn_oracle(const SuiteOptions& options) {
  Recorder rec("spn-oracle");
  Random rnd(options.seed);
  const int n = options.instances > 0 ? options.instances : 200;
  for (int i = 0; i < n; ++i) {
    spn::SpnTopology t;
    t.num_layers = rnd.integer(1, 3);
    t.children_per_parent = rnd.integer(1, 2);
    t.states_per_hidden = rnd.integer(2, 3);
    t.num_labels = rnd.integer(1, 3);
    t.input_dim = rnd.integer(1, 5);
    spn::SpnWeights w{rnd.vector(t.parameter_count())};
    const auto x = rnd.vector(static_cast<std::size_t>(t.input_dim));
    auto fast_weights = w;
    if (options.inject_fault)
      fast_weights.values[static_cast<std::size_t>(
          rnd.integer(0, static_cast<int>(w.values.size()) - 1))] += 0.5;

    const auto reference = oracle::spn_brute_force(t, w, x);
    const auto eval = spn::evaluate(t, fast_weights, x);
    double worst = 0.0;
    for (std::size_t y = 0; y < reference.size(); ++y)
      worst = std::max(worst, std::abs(std::exp(eval.q_values[y]) - reference[y]) / reference[y]);
    rec.instance();
    rec.error(worst);
    if (!(worst <= kSpnTolerance)) {
      std::ostringstream os;
      os << "model " << i << " (L=" << t.num_layers << " I=" << t.children_per_parent
         << " H=" << t.states_per_hidden << " Y=" << t.num_labels << "): rel error " << worst;
      rec.fail(os.str());
    }
  }
  return rec.finish();
}

SuiteResult chain_oracle(const SuiteOptions& options) {
  Recorder rec("chain-oracle");
  Random rnd(options.seed);
  const int n = options.instances > 0 ? options.instances : 100;
  for (int i = 0; i < n; ++i) {
    const int Y = rnd.integer(1, 4);
    const int D = rnd.integer(1, 3);
    const auto T = static_cast<std::size_t>(rnd.integer(1, 6));
    const auto model = random_chain(rnd, Y, D, 2);
    const auto obs = rnd.observations(T, D);
    auto fast = model;
    if (options.inject_fault) rnd.corrupt(fast, 0.5);

    rec.instance();
    const auto brute = oracle::chain_brute_force(model, obs);
    const auto msg = crf::forward_backward(fast, obs);
    const double delta = std::abs(msg.log_partition - brute.log_partition);
    const double fb = std::abs(msg.log_partition - msg.log_partition_backward);
    rec.error(delta);
    std::ostringstream os;
    if (!(delta <= kPartitionTolerance)) {
      rec.miss("partition");
      os << " log Z off by " << delta << ";";
    }
    if (!(fb <= kForwardBackwardTolerance)) {
      rec.miss("forward-backward");
      os << " forward/backward differ by " << fb << ";";
    }
    const auto vit = crf::viterbi(fast, obs);
    if (vit.labels != brute.argmax) {
      rec.miss("viterbi");
      os << " Viterbi " << describe(vit.labels) << " vs " << describe(brute.argmax) << ";";
    }

    const auto m = random_memm(rnd, Y, D, 1, 1.0);
    auto m_fast = m;
    if (options.inject_fault) rnd.corrupt(m_fast, 2.0);
    const auto m_brute = oracle::memm_brute_force(m, obs);
    const auto m_vit = memm::decode_viterbi(m_fast, obs);
    if (m_vit != m_brute.argmax) {
      rec.miss("memm-viterbi");
      os << " MEMM Viterbi " << describe(m_vit) << " vs " << describe(m_brute.argmax) << ";";
    }
    if (!os.str().empty()) rec.fail("instance " + std::to_string(i) + ":" + os.str());
  }
  return rec.finish();
}

SuiteResult beam_oracle(const SuiteOptions& options) {
  Recorder rec("beam-oracle");
  Random rnd(options.seed);
  const int n = options.instances > 0 ? options.instances : 100;
  for (int i = 0; i < n; ++i) {
    const int Y = rnd.integer(1, 3);
    const int M = rnd.integer(1, 3);
    const int D = rnd.integer(1, 3);
    const auto T = static_cast<std::size_t>(rnd.integer(1, 5));
    const auto model = random_memm(rnd, Y, D, M, 2.0);
    const auto obs = rnd.observations(T, D);
    auto fast = model;
    if (options.inject_fault) rnd.corrupt(fast, 3.0);
    const int B = static_cast<int>(ipow(static_cast<std::size_t>(Y), M - 1));

    rec.instance();
    const auto brute = oracle::memm_brute_force(model, obs);
    const auto beam = memm::decode_beam(fast, obs, B);
    rec.error(std::abs(beam.log_prob - brute.max_log_prob));
    if (beam.labels != brute.argmax)
      rec.fail("instance " + std::to_string(i) + " (Y=" + std::to_string(Y) +
               " M=" + std::to_string(M) + " B=" + std::to_string(B) + "): beam " +
               describe(beam.labels) + " vs " + describe(brute.argmax));
  }
  return rec.finish();
}

SuiteResult gradients(const SuiteOptions& options) {
  Recorder rec("gradients");
  Random rnd(options.seed);
  const int n = options.instances > 0 ? options.instances : 20;

  for (int i = 0; i < n; ++i) {
    crf::ChainModel model;
    do {
      model = random_chain(rnd, rnd.integer(2, 3), 2, 3);
    } while (model.parameter_count() > kMaxGradientParams);
    LabeledSequence seq{rnd.observations(static_cast<std::size_t>(rnd.integer(2, 5)), 2), {}};
    seq.labels = rnd.labels(seq.observations.size(), model.num_labels);
    auto grad = model.zeros_like();
    model.accumulate_gradient(seq, grad);
    auto probe = model;
    check_gradient(rec, "crf " + std::to_string(i), probe.parameter_blocks(),
                   training::flatten(grad), [&] { return probe.log_likelihood(seq); },
                   options.inject_fault);
  }

  for (int i = 0; i < n; ++i) {
    memm::MemmModel model;
    do {
      model = random_memm(rnd, rnd.integer(2, 3), 2, rnd.integer(1, 3), 1.0);
    } while (model.parameter_count() > kMaxGradientParams);
    LabeledSequence seq{rnd.observations(static_cast<std::size_t>(rnd.integer(2, 5)), 2), {}};
    seq.labels = rnd.labels(seq.observations.size(), model.num_labels);
    auto grad = model.zeros_like();
    model.accumulate_gradient(seq, grad);
    auto probe = model;
    check_gradient(rec, "memm " + std::to_string(i), probe.parameter_blocks(),
                   training::flatten(grad), [&] { return probe.log_likelihood(seq); },
                   options.inject_fault);
  }

  for (int i = 0; i < n; ++i) {
    spn::SpnTopology t;
    do {
      t.num_layers = rnd.integer(1, 2);
      t.children_per_parent = rnd.integer(1, 2);
      t.states_per_hidden = rnd.integer(2, 3);
      t.num_labels = rnd.integer(2, 3);
      t.input_dim = rnd.integer(1, 3);
    } while (t.parameter_count() > kMaxGradientParams);
    spn::SpnWeights w{rnd.vector(t.parameter_count())};
    const auto x = rnd.vector(static_cast<std::size_t>(t.input_dim));
    const int observed = rnd.integer(0, t.num_labels - 1);
    const auto g = spn::gradient(t, w, x, observed);
    auto probe = w;
    check_gradient(rec, "spn " + std::to_string(i), {std::span<double>(probe.values)},
                   g.gradient.values,
                   [&] {
                     const auto e = spn::evaluate(t, probe, x);
                     return e.q_values[static_cast<std::size_t>(observed)] - e.partition;
                   },
                   options.inject_fault);
  }
  return rec.finish();
}

std::vector<std::string> scope_names() { return {"spn", "chain", "beam", "gradients", "all"}; }

std::vector<SuiteResult> run_scope(const std::string& scope, const SuiteOptions& options) {
  std::vector<SuiteResult> out;
  const bool all = scope == "all";
  if (all || scope == "spn") out.push_back(spn_oracle(options));
  if (all || scope == "chain") out.push_back(chain_oracle(options));
  if (all || scope == "beam") out.push_back(beam_oracle(options));
  if (all || scope == "gradients") out.push_back(gradients(options));
  if (out.empty())
    throw ConfigError("unknown verify scope '" + scope + "' (spn, chain, beam, gradients, all)");
  return out;
}

}  // namespace spnseq::verify
