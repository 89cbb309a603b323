#include "doctest.h"

#include <filesystem>
#include <random>

#include "spnseq/error.hpp"
#include "spnseq/model_io.hpp"
#include "spnseq/training.hpp"
#include "support.hpp"

using namespace spnseq;
namespace fs = std::filesystem;

TEST_CASE("SPN weights round trip bit-exactly") {
  std::mt19937_64 rng(1);
  const auto t = testing_support::make_topology(2, 2, 3, 3, 4, Semiring::MaxProduct);
  auto w = testing_support::random_weights(t, rng);
  w.values[0] = 0.1;
  w.values[1] = 1.0 / 3.0;
  w.values[2] = -5e-324;
  w.values[3] = 1.7976931348623157e308;
  const auto text = io::spn_to_json(t, w).dump();
  const auto [t2, w2] = io::spn_from_json(io::Json::parse(text));
  CHECK(t2 == t);
  CHECK(w2.values == w.values);
}

TEST_CASE("SPN document lists weights in canonical order") {
  const auto t = testing_support::make_topology(1, 2, 2, 2, 1);
  spn::SpnWeights w = spn::SpnWeights::zeros(t);
  for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] = static_cast<double>(i);
  const auto doc = io::spn_to_json(t, w);
  CHECK(doc["prefix_weights"][0] == io::Json::array({0.0, 1.0}));
  CHECK(doc["prefix_weights"][1].size() == 8);
  CHECK(doc["prefix_weights"][1][0] == 2.0);
  CHECK(doc["leaf_weights"].size() == 8);
  CHECK(doc["leaf_weights"][0] == io::Json::array({10.0}));
  CHECK(doc.begin().key() == "topology");
}

TEST_CASE("malformed SPN documents") {
  const auto t = testing_support::make_topology(1, 2, 2, 2, 1);
  auto doc = io::spn_to_json(t, spn::SpnWeights::zeros(t));
  auto missing = doc;
  missing.erase("leaf_weights");
  CHECK_THROWS_AS(io::spn_from_json(missing), ParseError);
  auto short_row = doc;
  short_row["prefix_weights"][1].erase(0);
  CHECK_THROWS_AS(io::spn_from_json(short_row), StructuralError);
  auto bad_semiring = doc;
  bad_semiring["topology"]["semiring"] = "min";
  CHECK_THROWS_AS(io::spn_from_json(bad_semiring), ConfigError);
}

TEST_CASE("checkpoints round trip") {
  std::mt19937_64 rng(2);
  const auto dir = fs::temp_directory_path() / ("spnseq_io_" + std::to_string(rng()));
  fs::create_directories(dir);

  crf::ChainSpec cspec;
  cspec.num_labels = 3;
  cspec.feature_dim = 2;
  cspec.ngram_orders = {2, 3};
  cspec.sparse_ngrams = true;
  cspec.factors = {{1, 1}, {3, 2}};
  std::vector<LabeledSequence> train{testing_support::random_sequence(rng, 6, 3, 2)};
  auto chain = crf::make_chain_model(cspec, train, 1);
  testing_support::randomize(chain, rng);

  io::Checkpoint cp{"spn-ho-crf", chain, {"a", "b", "c"},
                    data::NormalizationStats{{0.5, -0.5}, {1.0, 2.0}}};
  io::save_checkpoint(cp, dir / "chain.json");
  const auto back = io::load_checkpoint(dir / "chain.json");
  CHECK(back.kind == "spn-ho-crf");
  CHECK(back.label_alphabet == cp.label_alphabet);
  CHECK(back.normalization->stddev == std::vector<double>{1.0, 2.0});
  const auto& c2 = std::get<crf::ChainModel>(back.model);
  CHECK(training::flatten(c2) == training::flatten(chain));
  CHECK(c2.transitions[0].dictionary.entries() == chain.transitions[0].dictionary.entries());
  const auto obs = testing_support::random_observations(rng, 5, 2);
  CHECK(crf::forward_backward(c2, obs).log_partition ==
        crf::forward_backward(chain, obs).log_partition);

  memm::MemmSpec mspec;
  mspec.num_labels = 3;
  mspec.feature_dim = 2;
  mspec.order = 3;
  mspec.window = 3;
  mspec.beam_width = 7;
  const auto m = testing_support::random_memm(rng, mspec);
  io::save_checkpoint({"spn-memm", m, {"x", "y", "z"}, std::nullopt}, dir / "memm.json");
  const auto mb = io::load_checkpoint(dir / "memm.json");
  CHECK_FALSE(mb.normalization.has_value());
  const auto& m2 = std::get<memm::MemmModel>(mb.model);
  CHECK(m2.beam_width == 7);
  CHECK(m2.window == 3);
  CHECK(training::flatten(m2) == training::flatten(m));

  auto doc = io::read_json(dir / "memm.json");
  doc["kind"] = "hmm";
  CHECK_THROWS_AS(io::checkpoint_from_json(doc), ParseError);
  CHECK_THROWS_AS(io::load_checkpoint(dir / "nothing.json"), InputError);
  fs::remove_all(dir);
}
