#include "scsampler/datamodel.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scsampler/binary_io.hpp"
#include "scsampler/error.hpp"

namespace scsampler {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kManifestFormat = "scsampler-manifest";

class OwnedBlob final : public detail::Blob {
 public:
  explicit OwnedBlob(std::vector<float> values) : values_(std::move(values)) {}
  const float* data() const override { return values_.data(); }

 private:
  std::vector<float> values_;
};

std::string at_line(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

ModalityDescriptor parse_modality(const json& j) {
  ModalityDescriptor m;
  m.name = j.at("name").get<std::string>();
  m.dim = j.at("dim").get<std::size_t>();
  m.window_clips = j.value("window_clips", std::size_t{1});
  m.truncated_tail = j.value("truncated_tail", false);
  if (m.name.empty() || m.dim == 0 || m.window_clips == 0) {
    throw DataError("modality '" + m.name + "' needs a name, dim >= 1 and window_clips >= 1");
  }
  return m;
}

}  // namespace

void LabelSpace::check() const {
  if (names.size() < 2) throw DataError("label space needs at least 2 classes");
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw DataError("duplicate class name '" + n + "'");
  }
}

LabelSpace LabelSpace::numbered(std::size_t num_classes) {
  LabelSpace space;
  for (std::size_t c = 0; c < num_classes; ++c) {
    space.names.push_back("class_" + std::to_string(c));
  }
  return space;
}

FeatureMatrix FeatureMatrix::from_values(std::size_t rows, std::size_t cols,
                                         std::vector<float> values) {
  if (values.size() != rows * cols) {
    throw std::invalid_argument("feature values do not match rows x cols");
  }
  return FeatureMatrix(std::make_shared<OwnedBlob>(std::move(values)), rows, cols);
}

const FeatureMatrix& VideoRecord::modality(std::string_view name) const {
  auto it = features.find(name);
  if (it == features.end()) {
    throw DataError("video '" + id + "' has no modality '" + std::string(name) + "'");
  }
  return it->second;
}

std::string_view split_name(Split split) {
  return split == Split::train ? "train" : "test";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw DataError("unknown split '" + std::string(name) + "'");
}

const ModalityDescriptor* DatasetManifest::find_modality(std::string_view name) const {
  for (const auto& m : modalities) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const auto base = path.parent_path();

  DatasetManifest manifest;
  std::set<std::string, std::less<>> ids;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(at_line(path, line_no) + "parse error: " + e.what());
    }

    try {
      if (!have_header) {
        if (j.value("format", std::string{}) != kManifestFormat) {
          throw DataError("missing manifest header");
        }
        if (j.value("version", 0) != 1) throw DataError("unsupported manifest version");
        manifest.dataset_id = j.value("dataset", std::string{});
        manifest.split = parse_split(j.at("split").get<std::string>());
        const auto& ls = j.at("label_space");
        manifest.label_space.names = ls.at("names").get<std::vector<std::string>>();
        if (ls.contains("num_classes") &&
            ls.at("num_classes").get<std::size_t>() != manifest.label_space.names.size()) {
          throw DataError("num_classes does not match the number of class names");
        }
        manifest.label_space.check();
        std::set<std::string> names;
        for (const auto& jm : j.at("modalities")) {
          auto m = parse_modality(jm);
          if (!names.insert(m.name).second) {
            throw DataError("duplicate modality '" + m.name + "'");
          }
          manifest.modalities.push_back(std::move(m));
        }
        have_header = true;
        continue;
      }

      VideoRecord v;
      v.id = j.at("id").get<std::string>();
      if (!ids.insert(v.id).second) throw DataError("duplicate video id '" + v.id + "'");
      const auto label = j.at("label").get<std::int64_t>();
      if (label < 0 || static_cast<std::size_t>(label) >= manifest.num_classes()) {
        throw DataError("video '" + v.id + "': label " + std::to_string(label) +
                        " out of range [0, " + std::to_string(manifest.num_classes()) + ")");
      }
      v.label = static_cast<std::size_t>(label);
      v.num_clips = j.at("num_clips").get<std::size_t>();
      if (v.num_clips == 0) throw DataError("video '" + v.id + "': num_clips must be >= 1");

      for (const auto& [name, rel] : j.at("features").items()) {
        const auto* desc = manifest.find_modality(name);
        if (desc == nullptr) {
          throw DataError("video '" + v.id + "': undeclared modality '" + name + "'");
        }
        const auto rel_path = rel.get<std::string>();
        FeatureMatrix fm;
        try {
          fm = io::open_matrix_file(base / rel_path, io::kFeatureMagic);
        } catch (const DataError& e) {
          throw DataError("video '" + v.id + "', modality '" + name + "': " + e.what());
        }
        if (fm.rows() != v.num_clips || fm.cols() != desc->dim) {
          throw DataError("video '" + v.id + "', modality '" + name +
                          "': header mismatch (file " + std::to_string(fm.rows()) + "x" +
                          std::to_string(fm.cols()) + ", manifest " +
                          std::to_string(v.num_clips) + "x" + std::to_string(desc->dim) + ")");
        }
        v.features.emplace(name, std::move(fm));
        v.feature_paths.emplace(name, rel_path);
      }

      if (j.contains("scores")) {
        const auto rel_path = j.at("scores").get<std::string>();
        FeatureMatrix sm;
        try {
          sm = io::open_matrix_file(base / rel_path, io::kScoreMagic);
        } catch (const DataError& e) {
          throw DataError("video '" + v.id + "', scores: " + e.what());
        }
        if (sm.rows() != v.num_clips || sm.cols() != manifest.num_classes()) {
          throw DataError("video '" + v.id + "', scores: header mismatch (file " +
                          std::to_string(sm.rows()) + "x" + std::to_string(sm.cols()) +
                          ", manifest " + std::to_string(v.num_clips) + "x" +
                          std::to_string(manifest.num_classes()) + ")");
        }
        v.scripted_scores = std::move(sm);
        v.score_path = rel_path;
      }
      manifest.videos.push_back(std::move(v));
    } catch (const DataError& e) {
      throw DataError(at_line(path, line_no) + e.what());
    } catch (const json::exception& e) {
      throw DataError(at_line(path, line_no) + "malformed record: " + e.what());
    }
  }
  if (!have_header) throw DataError(path.string() + ": empty manifest");
  return manifest;
}

std::string manifest_to_string(const DatasetManifest& manifest) {
  std::ostringstream out;
  ordered_json header;
  header["format"] = kManifestFormat;
  header["version"] = 1;
  header["dataset"] = manifest.dataset_id;
  header["split"] = split_name(manifest.split);
  header["label_space"]["num_classes"] = manifest.num_classes();
  header["label_space"]["names"] = manifest.label_space.names;
  header["modalities"] = ordered_json::array();
  for (const auto& m : manifest.modalities) {
    ordered_json jm;
    jm["name"] = m.name;
    jm["dim"] = m.dim;
    jm["window_clips"] = m.window_clips;
    if (m.truncated_tail) jm["truncated_tail"] = true;
    header["modalities"].push_back(std::move(jm));
  }
  out << header.dump() << '\n';

  for (const auto& v : manifest.videos) {
    ordered_json jv;
    jv["id"] = v.id;
    jv["label"] = v.label;
    jv["num_clips"] = v.num_clips;
    jv["features"] = ordered_json::object();
    for (const auto& [name, rel] : v.feature_paths) jv["features"][name] = rel;
    if (v.score_path) jv["scores"] = *v.score_path;
    out << jv.dump() << '\n';
  }
  return out.str();
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << manifest_to_string(manifest);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Violation> validate_dataset(const DatasetManifest& manifest,
                                        std::span<const std::string> required) {
  std::vector<Violation> out;
  auto add = [&out](const VideoRecord& v, std::string modality, std::string rule,
                    std::string detail) {
    out.push_back({v.id, std::move(modality), std::move(rule), std::move(detail)});
  };

  if (manifest.label_space.names.size() < 2) {
    out.push_back({"", "", "label-space", "fewer than 2 classes"});
  }
  const std::size_t C = manifest.num_classes();

  for (const auto& v : manifest.videos) {
    if (v.num_clips == 0) add(v, "", "num-clips", "video has no clips");
    if (v.label >= C) add(v, "", "label-range", "label " + std::to_string(v.label));

    for (const auto& desc : manifest.modalities) {
      auto it = v.features.find(desc.name);
      if (it == v.features.end()) {
        add(v, desc.name, "missing-modality", "declared modality absent");
        continue;
      }
      const auto& fm = it->second;
      if (fm.rows() != v.num_clips || fm.cols() != desc.dim) {
        add(v, desc.name, "shape", "matrix " + std::to_string(fm.rows()) + "x" +
                                       std::to_string(fm.cols()));
        continue;
      }
      const auto values = fm.values();
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k])) {
          add(v, desc.name, "finite", "row " + std::to_string(k / fm.cols()));
          break;
        }
      }
    }
    for (const auto& [name, fm] : v.features) {
      if (manifest.find_modality(name) == nullptr) {
        add(v, name, "undeclared-modality", "modality not in header");
      }
    }
    for (const auto& name : required) {
      if (!v.has_modality(name)) add(v, name, "required-modality", "missing");
    }

    if (v.scripted_scores) {
      const auto& sm = *v.scripted_scores;
      if (sm.rows() != v.num_clips || sm.cols() != C) {
        add(v, "scores", "shape", "matrix " + std::to_string(sm.rows()) + "x" +
                                      std::to_string(sm.cols()));
      } else {
        for (std::size_t i = 0; i < sm.rows(); ++i) {
          double sum = 0.0;
          bool in_range = true;
          for (float p : sm.row(i)) {
            sum += p;
            if (!(p >= 0.0f && p <= 1.0f)) in_range = false;
          }
          if (!in_range) {
            add(v, "scores", "probability-range", "row " + std::to_string(i));
          } else if (std::abs(sum - 1.0) > kProbabilityTolerance) {
            std::ostringstream msg;
            msg << "row " << i << " sums to " << sum;
            add(v, "scores", "probability-sum", msg.str());
          }
        }
      }
    }
  }
  return out;
}

double normalized_location(std::size_t index, std::size_t num_clips) {
  if (index >= num_clips) {
    throw std::out_of_range("clip index " + std::to_string(index) +
                            " out of range for " + std::to_string(num_clips) + " clips");
  }
  return (static_cast<double>(index) + 0.5) / static_cast<double>(num_clips);
}

}  // namespace scsampler
