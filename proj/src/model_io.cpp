#include "spnseq/model_io.hpp"

#include <fstream>

#include "spnseq/error.hpp"

namespace spnseq::io {

namespace {

template <typename T>
T field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key))
    throw ParseError(std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what());
  }
}

const Json& object(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key))
    throw ParseError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

Json topology_to_json(const spn::SpnTopology& t) {
  return Json{{"num_layers", t.num_layers},
              {"children_per_parent", t.children_per_parent},
              {"states_per_hidden", t.states_per_hidden},
              {"num_labels", t.num_labels},
              {"input_dim", t.input_dim},
              {"semiring", to_string(t.semiring)}};
}

spn::SpnTopology topology_from_json(const Json& doc) {
  spn::SpnTopology t;
  t.num_layers = field<int>(doc, "num_layers");
  t.children_per_parent = field<int>(doc, "children_per_parent");
  t.states_per_hidden = field<int>(doc, "states_per_hidden");
  t.num_labels = field<int>(doc, "num_labels");
  t.input_dim = field<int>(doc, "input_dim");
  t.semiring = semiring_from_string(field<std::string>(doc, "semiring"));
  t.validate();
  return t;
}

}  // namespace

Json spn_to_json(const spn::SpnTopology& topology, const spn::SpnWeights& weights) {
  weights.check(topology);
  Json doc;
  doc["topology"] = topology_to_json(topology);
  Json prefix = Json::array();
  for (int l = 0; l <= topology.num_layers; ++l) {
    const auto w = weights.prefix_weights(topology, l);
    prefix.push_back(std::vector<double>(w.begin(), w.end()));
  }
  doc["prefix_weights"] = std::move(prefix);
  Json leaves = Json::array();
  const auto d = static_cast<std::size_t>(topology.input_dim);
  const auto all = weights.leaf_weights(topology);
  for (std::size_t r = 0; r < topology.leaf_count(); ++r)
    leaves.push_back(std::vector<double>(all.begin() + static_cast<long>(r * d),
                                         all.begin() + static_cast<long>((r + 1) * d)));
  doc["leaf_weights"] = std::move(leaves);
  return doc;
}

std::pair<spn::SpnTopology, spn::SpnWeights> spn_from_json(const Json& doc) {
  const auto topology = topology_from_json(object(doc, "topology"));
  const auto prefix = field<std::vector<std::vector<double>>>(doc, "prefix_weights");
  const auto leaves = field<std::vector<std::vector<double>>>(doc, "leaf_weights");
  if (prefix.size() != static_cast<std::size_t>(topology.num_layers) + 1)
    throw StructuralError("prefix_weights needs one list per depth 0..L");
  spn::SpnWeights w;
  w.values.reserve(topology.parameter_count());
  for (int l = 0; l <= topology.num_layers; ++l) {
    const auto& row = prefix[static_cast<std::size_t>(l)];
    if (row.size() != topology.prefix_count(l))
      throw StructuralError("prefix weight count mismatch at depth " + std::to_string(l));
    w.values.insert(w.values.end(), row.begin(), row.end());
  }
  if (leaves.size() != topology.leaf_count()) throw StructuralError("leaf weight count mismatch");
  for (const auto& row : leaves) {
    if (row.size() != static_cast<std::size_t>(topology.input_dim))
      throw StructuralError("leaf weight vector has the wrong length");
    w.values.insert(w.values.end(), row.begin(), row.end());
  }
  w.check(topology);
  return {topology, std::move(w)};
}

Json chain_to_json(const crf::ChainModel& model) {
  model.validate();
  Json doc;
  doc["num_labels"] = model.num_labels;
  doc["feature_dim"] = model.feature_dim;
  Json trans = Json::array();
  for (const auto& f : model.transitions) {
    trans.push_back(Json{{"order", f.dictionary.order()},
                         {"include_unseen", f.dictionary.include_unseen()},
                         {"ngrams", f.dictionary.entries()},
                         {"weights", f.weights}});
  }
  doc["transitions"] = std::move(trans);
  Json locals = Json::array();
  for (const auto& f : model.local_factors)
    locals.push_back(Json{{"window", f.window}, {"gram", f.gram},
                          {"spn", spn_to_json(f.topology, f.weights)}});
  doc["local_factors"] = std::move(locals);
  return doc;
}

crf::ChainModel chain_from_json(const Json& doc) {
  crf::ChainModel model;
  model.num_labels = field<int>(doc, "num_labels");
  model.feature_dim = field<int>(doc, "feature_dim");
  for (const auto& t : object(doc, "transitions")) {
    crf::NGramDictionary dict(field<int>(t, "order"), model.num_labels,
                              field<bool>(t, "include_unseen"));
    for (const auto& g : field<std::vector<std::vector<int>>>(t, "ngrams")) dict.insert(g);
    crf::TransitionFactor f{std::move(dict), field<std::vector<double>>(t, "weights")};
    model.transitions.push_back(std::move(f));
  }
  for (const auto& l : object(doc, "local_factors")) {
    crf::LocalFactor f;
    f.window = field<int>(l, "window");
    f.gram = field<int>(l, "gram");
    auto [topo, w] = spn_from_json(object(l, "spn"));
    f.topology = topo;
    f.weights = std::move(w);
    model.local_factors.push_back(std::move(f));
  }
  model.validate();
  return model;
}

Json memm_to_json(const memm::MemmModel& model) {
  model.validate();
  return Json{{"num_labels", model.num_labels},
              {"feature_dim", model.feature_dim},
              {"order", model.order},
              {"window", model.window},
              {"beam_width", model.beam_width},
              {"history_weights", model.history_weights},
              {"spn", spn_to_json(model.topology, model.spn_weights)}};
}

memm::MemmModel memm_from_json(const Json& doc) {
  memm::MemmModel model;
  model.num_labels = field<int>(doc, "num_labels");
  model.feature_dim = field<int>(doc, "feature_dim");
  model.order = field<int>(doc, "order");
  model.window = field<int>(doc, "window");
  model.beam_width = field<int>(doc, "beam_width");
  model.history_weights = field<std::vector<double>>(doc, "history_weights");
  auto [topo, w] = spn_from_json(object(doc, "spn"));
  model.topology = topo;
  model.spn_weights = std::move(w);
  if (model.beam_width < 1) throw StructuralError("beam width must be >= 1");
  model.validate();
  return model;
}

Json checkpoint_to_json(const Checkpoint& checkpoint) {
  Json doc;
  doc["kind"] = checkpoint.kind;
  doc["label_alphabet"] = checkpoint.label_alphabet;
  if (checkpoint.normalization)
    doc["normalization"] = Json{{"mean", checkpoint.normalization->mean},
                                {"stddev", checkpoint.normalization->stddev}};
  else
    doc["normalization"] = nullptr;
  if (const auto* chain = std::get_if<crf::ChainModel>(&checkpoint.model))
    doc["model"] = chain_to_json(*chain);
  else
    doc["model"] = memm_to_json(std::get<memm::MemmModel>(checkpoint.model));
  return doc;
}

Checkpoint checkpoint_from_json(const Json& doc) {
  Checkpoint cp;
  cp.kind = field<std::string>(doc, "kind");
  cp.label_alphabet = field<std::vector<std::string>>(doc, "label_alphabet");
  const auto& norm = object(doc, "normalization");
  if (!norm.is_null())
    cp.normalization = data::NormalizationStats{field<std::vector<double>>(norm, "mean"),
                                                field<std::vector<double>>(norm, "stddev")};
  if (cp.kind == "spn-crf" || cp.kind == "spn-ho-crf")
    cp.model = chain_from_json(object(doc, "model"));
  else if (cp.kind == "spn-memm")
    cp.model = memm_from_json(object(doc, "model"));
  else
    throw ParseError("unknown checkpoint kind '" + cp.kind + "'");
  return cp;
}

void write_json(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw InputError("write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_json(checkpoint_to_json(checkpoint), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json(path));
}

}  // namespace spnseq::io
