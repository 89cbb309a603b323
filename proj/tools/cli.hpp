#pragma once

// Command-line front end: train, eval, predict, grid-search, verify, synth.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spnseq/chain_crf.hpp"
#include "spnseq/memm.hpp"

namespace spnseq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVerify = 4;

struct RunConfig {
  std::string model = "spn-crf";  // spn-crf | spn-ho-crf | spn-memm
  int layers = 1;
  int children = 2;
  int states = 2;
  std::optional<std::string> factors;  // "m:n,..." (CRF models)
  std::optional<int> order;            // CRF: highest transition n-gram; MEMM: M
  std::optional<std::string> ngrams;   // dense | sparse
  int window = 1;                      // MEMM observation window
  int beam_width = 20;
  std::string semiring = "sum";
  double learning_rate = 1e-2;
  double l2 = 1e-4;
  int epochs = 50;
  int eval_every = 1;
  std::uint64_t seed = 0;
  int jobs = 1;

  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string ocr_path;
  int fold = 0;
  bool normalize = true;

  std::string checkpoint = "model.json";
  std::string report = "report.json";

  // Throws ConfigError.
  void validate() const;
};

// "1:1,3:2" -> {{1, 1}, {3, 2}}. Throws ConfigError.
std::vector<crf::FactorShape> parse_factors(const std::string& text);

crf::ChainSpec chain_spec(const RunConfig& config, int num_labels, int feature_dim);
memm::MemmSpec memm_spec(const RunConfig& config, int num_labels, int feature_dim);

// Parses and runs one command; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spnseq::cli
