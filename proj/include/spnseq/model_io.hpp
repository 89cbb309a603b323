#pragma once

// JSON documents for SPN weights and model checkpoints. Numbers are written
// in the shortest form that parses back to the same double, so a save/load
// round trip is bit-exact.

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "spnseq/chain_crf.hpp"
#include "spnseq/data_io.hpp"
#include "spnseq/memm.hpp"
#include "spnseq/spn.hpp"

namespace spnseq::io {

using Json = nlohmann::ordered_json;

// {"topology": {...}, "prefix_weights": [[depth 0], ..., [depth L]],
//  "leaf_weights": [[leaf 0], ...]}, all in canonical prefix order.
Json spn_to_json(const spn::SpnTopology& topology, const spn::SpnWeights& weights);
// Throws ParseError / StructuralError.
std::pair<spn::SpnTopology, spn::SpnWeights> spn_from_json(const Json& doc);

Json chain_to_json(const crf::ChainModel& model);
crf::ChainModel chain_from_json(const Json& doc);

Json memm_to_json(const memm::MemmModel& model);
memm::MemmModel memm_from_json(const Json& doc);

struct Checkpoint {
  std::string kind;  // "spn-crf", "spn-ho-crf" or "spn-memm"
  std::variant<crf::ChainModel, memm::MemmModel> model;
  std::vector<std::string> label_alphabet;
  std::optional<data::NormalizationStats> normalization;
};

Json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& doc);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_json(const Json& doc, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace spnseq::io
