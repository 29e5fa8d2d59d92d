#include <fstream>
#include <sstream>

#include "doctest.h"
#include "scsampler/binary_io.hpp"
#include "scsampler/datamodel.hpp"
#include "scsampler/error.hpp"
#include "scsampler/synthgen.hpp"
#include "support.hpp"

using namespace scsampler;
using testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void write_features(const std::filesystem::path& p, std::size_t rows, std::size_t cols,
                    float fill = 0.25f) {
  std::vector<float> v(rows * cols, fill);
  io::write_matrix_file(p, io::kFeatureMagic, rows, cols, v);
}

const char* kHeader =
    R"({"format":"scsampler-manifest","version":1,"dataset":"tiny","split":"train",)"
    R"("label_space":{"num_classes":2,"names":["a","b"]},)"
    R"("modalities":[{"name":"visual-md","dim":3,"window_clips":1},{"name":"audio-mel","dim":2,"window_clips":2,"truncated_tail":true}]})";

}  // namespace

TEST_CASE("load a one-video manifest") {
  TempDir dir("dm_one");
  write_features(dir.path() / "v.md.scft", 4, 3);
  write_features(dir.path() / "v.mel.scft", 4, 2);
  spit(dir.path() / "m.manifest",
       std::string(kHeader) + "\n" +
           R"({"id":"v","label":1,"num_clips":4,"features":{"visual-md":"v.md.scft","audio-mel":"v.mel.scft"}})" +
           "\n");
  const auto m = load_manifest(dir.path() / "m.manifest");
  REQUIRE(m.videos.size() == 1);
  CHECK(m.dataset_id == "tiny");
  CHECK(m.num_classes() == 2);
  CHECK(m.videos[0].label == 1);
  CHECK(m.videos[0].modality("visual-md").rows() == 4);
  CHECK(m.videos[0].modality("audio-mel").row(3)[1] == doctest::Approx(0.25));
  CHECK(validate_dataset(m).empty());
}

TEST_CASE("feature header disagreeing with num_clips is rejected") {
  TempDir dir("dm_mismatch");
  write_features(dir.path() / "v.md.scft", 5, 3);
  write_features(dir.path() / "v.mel.scft", 4, 2);
  spit(dir.path() / "m.manifest",
       std::string(kHeader) + "\n" +
           R"({"id":"v","label":0,"num_clips":4,"features":{"visual-md":"v.md.scft","audio-mel":"v.mel.scft"}})" +
           "\n");
  try {
    load_manifest(dir.path() / "m.manifest");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("v") != std::string::npos);
    CHECK(msg.find("visual-md") != std::string::npos);
  }
}

TEST_CASE("malformed manifests name the line") {
  TempDir dir("dm_bad");
  spit(dir.path() / "m.manifest", std::string(kHeader) + "\n{\"id\":\n");
  try {
    load_manifest(dir.path() / "m.manifest");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("m.manifest:2:") != std::string::npos);
  }
}

TEST_CASE("truncated feature files are rejected") {
  TempDir dir("dm_trunc");
  write_features(dir.path() / "f.scft", 4, 3);
  auto bytes = slurp(dir.path() / "f.scft");
  spit(dir.path() / "f.scft", bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(io::read_matrix_header(dir.path() / "f.scft", io::kFeatureMagic), DataError);
  spit(dir.path() / "g.scft", "SCXX" + bytes.substr(4));
  CHECK_THROWS_AS(io::read_matrix_header(dir.path() / "g.scft", io::kFeatureMagic), DataError);
}

TEST_CASE("manifest text round-trips byte-identically") {
  TempDir dir("dm_round");
  SynthConfig cfg;
  cfg.train_videos_per_class = 2;
  cfg.test_videos_per_class = 1;
  cfg.num_classes = 3;
  cfg.clips_min = 6;
  cfg.clips_max = 9;
  generate_dataset(cfg, dir.path());
  for (auto name : {kTrainManifest, kTestManifest}) {
    const auto path = dir.path() / name;
    const auto original = slurp(path);
    const auto loaded = load_manifest(path);
    CHECK(manifest_to_string(loaded) == original);
    write_manifest(loaded, dir.path() / "copy.manifest");
    CHECK(slurp(dir.path() / "copy.manifest") == original);
  }
}

TEST_CASE("normalized_location") {
  CHECK(normalized_location(0, 10) == doctest::Approx(0.05));
  CHECK(normalized_location(9, 10) == doctest::Approx(0.95));
  CHECK(normalized_location(0, 1) == 0.5);
  CHECK_THROWS_AS(normalized_location(10, 10), std::out_of_range);
  CHECK_THROWS_AS(normalized_location(0, 0), std::out_of_range);
}

TEST_CASE("validate_dataset") {
  auto m = testing::make_manifest("mem", 2, {{"visual-md", 2}});
  for (int k = 0; k < 3; ++k) {
    auto v = testing::make_video("v" + std::to_string(k), k % 2, 3);
    testing::attach(v, "visual-md", 2, std::vector<float>(6, 0.5f));
    v.scripted_scores = FeatureMatrix::from_values(3, 2, {0.5f, 0.5f, 0.9f, 0.1f, 0.3f, 0.7f});
    m.videos.push_back(std::move(v));
  }
  CHECK(validate_dataset(m).empty());

  SUBCASE("score row summing to 0.8") {
    m.videos[1].scripted_scores = FeatureMatrix::from_values(3, 2, {0.5f, 0.5f, 0.4f, 0.4f, 0.3f, 0.7f});
    const auto violations = validate_dataset(m);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].video_id == "v1");
    CHECK(violations[0].rule == "probability-sum");
    CHECK(violations[0].detail.find("row 1") != std::string::npos);
  }
  SUBCASE("non-finite feature") {
    std::vector<float> bad(6, 0.5f);
    bad[3] = std::nanf("");
    testing::attach(m.videos[2], "visual-md", 2, bad);
    const auto violations = validate_dataset(m);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].rule == "finite");
  }
  SUBCASE("missing required modality") {
    const std::vector<std::string> required{"audio-mel"};
    CHECK(validate_dataset(m, required).size() >= 3);
  }
  SUBCASE("label out of range") {
    m.videos[0].label = 5;
    const auto violations = validate_dataset(m);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].rule == "label-range");
  }
}

TEST_CASE("large generated dataset validates clean") {
  TempDir dir("dm_large");
  SynthConfig cfg;
  cfg.num_classes = 10;
  cfg.train_videos_per_class = 50;
  cfg.test_videos_per_class = 50;
  cfg.clips_min = 5;
  cfg.clips_max = 12;
  cfg.modalities = {{"visual-rgb", 4}, {"visual-md", 4}, {"audio-mel", 4}};
  const auto ds = generate_dataset(cfg, dir.path(), 4);
  CHECK(ds.train.videos.size() + ds.test.videos.size() == 1000);
  CHECK(validate_dataset(ds.train).empty());
  CHECK(validate_dataset(ds.test).empty());
}
