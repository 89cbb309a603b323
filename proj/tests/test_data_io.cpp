#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "spnseq/data_io.hpp"
#include "spnseq/error.hpp"

using namespace spnseq;
using namespace spnseq::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("spnseq_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string ocr_row(long id, char letter, long next, long word, long pos, int fold,
                    int ink = 0, int pixels = 128) {
  std::ostringstream os;
  os << id << '\t' << letter << '\t' << next << '\t' << word << '\t' << pos << '\t' << fold;
  for (int p = 0; p < pixels; ++p) os << '\t' << (p == ink ? 1 : 0);
  os << '\n';
  return os.str();
}

}  // namespace

TEST_CASE("OCR: two-row chain") {
  TempDir dir;
  const auto f = dir.file("letters.data");
  write_text(f, ocr_row(1, 'a', 2, 1, 1, 0, 3) + ocr_row(2, 'b', -1, 1, 2, 0, 5));
  const auto data = load_ocr(f);
  REQUIRE(data.dataset.sequences.size() == 1);
  const auto& s = data.dataset.sequences[0];
  CHECK(s.labels == std::vector<int>{0, 1});
  CHECK(s.observations[0][3] == 1.0);
  CHECK(s.observations[1][5] == 1.0);
  CHECK(data.dataset.num_labels() == 26);
  CHECK(data.dataset.feature_dim == 128);
  CHECK(data.folds.assignment == std::vector<int>{0});
}

TEST_CASE("OCR: chains are followed by id regardless of row order") {
  TempDir dir;
  const auto f = dir.file("letters.data");
  write_text(f, ocr_row(7, 'c', -1, 2, 3, 1) + ocr_row(10, 'x', -1, 3, 1, 4) +
                    ocr_row(5, 'a', 6, 2, 1, 1) + ocr_row(6, 'b', 7, 2, 2, 1));
  const auto data = load_ocr(f);
  REQUIRE(data.dataset.sequences.size() == 2);
  CHECK(data.dataset.total_labels() == 4);
  CHECK(data.dataset.sequences[0].labels == std::vector<int>{23});
  CHECK(data.dataset.sequences[1].labels == std::vector<int>{0, 1, 2});
  CHECK(data.folds.assignment == std::vector<int>{4, 1});
  CHECK(data.folds.num_folds == 5);
  const auto [train, test] = split_by_fold(data.dataset, data.folds, 1);
  CHECK(train.sequences.size() == 1);
  CHECK(test.sequences.size() == 1);
  CHECK(test.sequences[0].labels.size() == 3);
}

TEST_CASE("OCR: parse errors carry line numbers") {
  TempDir dir;
  const auto f = dir.file("bad.data");
  const auto line_of = [&](const std::string& text) -> std::size_t {
    write_text(f, text);
    try {
      load_ocr(f);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of(ocr_row(1, 'a', -1, 1, 1, 0) + ocr_row(2, 'a', -1, 2, 1, 0, 0, 127)) == 2);
  CHECK(line_of(ocr_row(1, 'A', -1, 1, 1, 0)) == 1);
  CHECK(line_of(ocr_row(1, 'a', 9, 1, 1, 0)) == 1);
  CHECK(line_of(ocr_row(1, 'a', -1, 1, 1, 0) + "2\tb\n") == 2);
  CHECK(line_of(ocr_row(1, 'a', 2, 1, 1, 0) + ocr_row(2, 'b', 1, 1, 2, 0)) >= 1);
  CHECK(line_of(ocr_row(1, 'a', 3, 1, 1, 0) + ocr_row(2, 'b', 3, 1, 1, 0) +
                ocr_row(3, 'c', -1, 1, 2, 0)) == 2);
  CHECK(line_of(ocr_row(1, 'a', -1, 1, 1, 0) + ocr_row(1, 'b', -1, 2, 1, 0)) == 2);
  CHECK_THROWS_AS(load_ocr(dir.file("missing.data")), InputError);
}

TEST_CASE("JSON lines") {
  TempDir dir;
  SUBCASE("empty file") {
    write_text(dir.file("e.jsonl"), "");
    const auto d = load_jsonl(dir.file("e.jsonl"));
    CHECK(d.sequences.empty());
    CHECK_NOTHROW(d.validate());
  }
  SUBCASE("single unit sequence") {
    write_text(dir.file("one.jsonl"), R"({"labels": [2], "features": [[0.5, -1.0]]})" "\n");
    const auto d = load_jsonl(dir.file("one.jsonl"));
    REQUIRE(d.sequences.size() == 1);
    CHECK(d.sequences[0].labels == std::vector<int>{2});
    CHECK(d.feature_dim == 2);
    CHECK(d.num_labels() == 3);
  }
  SUBCASE("round trip is the identity") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Dataset d;
    d.feature_dim = 3;
    d.label_alphabet = {"0", "1", "2", "3"};
    for (int i = 0; i < 5; ++i) {
      LabeledSequence s;
      for (int t = 0; t <= i; ++t) {
        s.labels.push_back(t % 4);
        s.observations.push_back({n(rng), n(rng) * 1e-300, n(rng) * 1e300});
      }
      d.sequences.push_back(s);
    }
    save_jsonl(d, dir.file("rt.jsonl"));
    const auto back = load_jsonl(dir.file("rt.jsonl"), 4);
    REQUIRE(back.sequences.size() == d.sequences.size());
    for (std::size_t i = 0; i < d.sequences.size(); ++i) {
      CHECK(back.sequences[i].labels == d.sequences[i].labels);
      CHECK(back.sequences[i].observations == d.sequences[i].observations);
    }
  }
  SUBCASE("malformed records") {
    const auto line_of = [&](const std::string& text, std::optional<int> y = {}) -> std::size_t {
      write_text(dir.file("bad.jsonl"), text);
      try {
        load_jsonl(dir.file("bad.jsonl"), y);
      } catch (const ParseError& e) {
        return e.line();
      }
      return 0;
    };
    CHECK(line_of("{\"labels\": [0], \"features\": [[1.0]]}\n"
                  "{\"labels\": [0, 1], \"features\": [[1.0], [1.0, 2.0]]}\n") == 2);
    CHECK(line_of("{\"labels\": [0, 1], \"features\": [[1.0]]}\n") == 1);
    CHECK(line_of("{\"labels\": [5], \"features\": [[1.0]]}\n", 3) == 1);
    CHECK(line_of("{\"labels\": [-1], \"features\": [[1.0]]}\n") == 1);
    CHECK(line_of("not json\n") == 1);
    CHECK(line_of("{\"labels\": [0]}\n") == 1);
  }
}

TEST_CASE("normalization") {
  Dataset train;
  train.feature_dim = 3;
  train.label_alphabet = {"a"};
  train.sequences.push_back({{{1.0, 5.0, 2.0}, {3.0, 5.0, 4.0}}, {0, 0}});
  train.sequences.push_back({{{5.0, 5.0, 9.0}}, {0}});
  Dataset dev = subset(train, 0, 0);
  dev.sequences.push_back({{{3.0, 7.0, 5.0}}, {0}});

  const auto out = normalize(train, {dev});
  // Constant dimension: sigma floored, values become zero.
  CHECK(out.stats.stddev[1] == kStdFloor);
  for (const auto& s : out.train.sequences)
    for (const auto& x : s.observations) CHECK(x[1] == 0.0);

  for (std::size_t j : {0u, 2u}) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : out.train.sequences)
      for (const auto& x : s.observations) {
        sum += x[j];
        sq += x[j] * x[j];
        ++n;
      }
    CHECK(std::abs(sum / n) <= 1e-10);
    CHECK(std::abs(std::sqrt(sq / n) - 1.0) <= 1e-10);
  }

  // Dev uses the training mean (3) and not its own.
  CHECK(out.others[0].sequences[0].observations[0][0] == doctest::Approx(0.0));
  CHECK(out.others[0].sequences[0].observations[0][1] == doctest::Approx(2.0 / kStdFloor));
  CHECK(out.others[0].normalization_stats.has_value());

  // Idempotent given fixed stats.
  auto again = train;
  apply_stats(out.stats, again);
  CHECK(again.sequences[0].observations == out.train.sequences[0].observations);
}

TEST_CASE("synthetic task") {
  SynthSpec spec;
  spec.seed = 5;
  spec.num_sequences = 30;
  const auto a = synth_task(spec);
  const auto b = synth_task(spec);
  REQUIRE(a.dataset.sequences.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(a.dataset.sequences[i].labels == b.dataset.sequences[i].labels);
    CHECK(a.dataset.sequences[i].observations == b.dataset.sequences[i].observations);
  }
  CHECK_NOTHROW(a.dataset.validate());

  for (int dim : {2, 4, 8}) {
    SynthSpec s;
    s.num_labels = 4;
    s.feature_dim = dim;
    s.num_sequences = 1;
    const auto task = synth_task(s);
    CHECK(task.frame_error_estimate < 0.02);
    for (std::size_t p = 0; p < 4; ++p)
      for (std::size_t q = p + 1; q < 4; ++q) {
        double d2 = 0.0;
        for (int j = 0; j < dim; ++j) {
          const double diff = task.class_means[p][static_cast<std::size_t>(j)] -
                              task.class_means[q][static_cast<std::size_t>(j)];
          d2 += diff * diff;
        }
        CHECK(std::sqrt(d2) >= 6.0 - 1e-9);
      }
  }

  SynthSpec one;
  one.num_labels = 1;
  one.num_sequences = 4;
  for (const auto& s : synth_task(one).dataset.sequences)
    for (int y : s.labels) CHECK(y == 0);

  spec.seed = 6;
  CHECK(synth_task(spec).dataset.sequences[0].observations !=
        a.dataset.sequences[0].observations);
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.feature_dim = 2;
  d.label_alphabet = {"a", "b"};
  d.sequences.push_back({{{0.0, 1.0}}, {1}});
  CHECK_NOTHROW(d.validate());
  d.sequences.push_back({{{0.0}}, {1}});
  CHECK_THROWS_AS(d.validate(), InputError);
  d.sequences.back() = {{{0.0, 1.0}}, {2}};
  CHECK_THROWS_AS(d.validate(), InputError);
}
