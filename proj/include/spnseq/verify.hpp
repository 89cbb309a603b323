#pragma once

// Randomized equivalence suites: fast inference against the exhaustive
// references and analytic gradients against finite differences.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace spnseq::verify {

struct SuiteOptions {
  std::uint64_t seed = 0;
  int instances = 0;  // 0 = suite default
  // Perturbs one weight of the model handed to the fast path (or one
  // analytic gradient component) so the suite must fail.
  bool inject_fault = false;
};

struct SuiteResult {
  std::string name;
  int instances = 0;
  int failures = 0;
  double max_error = 0.0;  // suite-specific measure, see each suite
  double seconds = 0.0;
  std::vector<std::string> messages;  // first few failures
  std::map<std::string, int> check_failures;  // failing instances per named check
  int failures_of(const std::string& check) const {
    const auto it = check_failures.find(check);
    return it == check_failures.end() ? 0 : it->second;
  }
  bool passed() const noexcept { return failures == 0 && instances > 0; }
};

// evaluate() vs exhaustive hidden sums. L <= 3, I <= 2, H <= 3, Y <= 3,
// input_dim <= 5; max_error is the largest relative error of Q. Default 200.
SuiteResult spn_oracle(const SuiteOptions& options);

// Forward log Z vs exhaustive (T <= 6, Y <= 4, orders <= 2); forward vs
// backward partition; Viterbi vs exhaustive argmax; order-one MEMM Viterbi
// vs exhaustive on the same inputs. max_error is the largest |delta log Z|.
// Named checks: partition, forward-backward, viterbi, memm-viterbi.
// Default 100.
SuiteResult chain_oracle(const SuiteOptions& options);

// Beam search with B >= Y^(M-1) vs exhaustive MEMM argmax, T <= 5, Y <= 3,
// M <= 3. Default 100.
SuiteResult beam_oracle(const SuiteOptions& options);

// Central differences (h = 1e-5, rel 1e-5, abs floor 1e-8) on CRF, MEMM and
// SPN models with <= 500 parameters. max_error is the largest absolute
// difference between analytic and numeric components. Default 20 per model
// kind.
SuiteResult gradients(const SuiteOptions& options);

// Names accepted by run_scope: spn, chain, beam, gradients, all.
std::vector<std::string> scope_names();
// Throws ConfigError for an unknown scope.
std::vector<SuiteResult> run_scope(const std::string& scope, const SuiteOptions& options);

}  // namespace spnseq::verify
