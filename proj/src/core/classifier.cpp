#include "scsampler/classifier.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "scsampler/binary_io.hpp"
#include "scsampler/checkpoint.hpp"
#include "scsampler/error.hpp"
#include "scsampler/kernels.hpp"
#include "scsampler/rng.hpp"

namespace scsampler {
namespace {

constexpr std::uint64_t kInitStream = 0x1417;

struct ClipRef {
  std::uint32_t video;
  std::uint32_t clip;
};

void require_modality(const DatasetManifest& data, const std::string& modality,
                      std::size_t* dim) {
  const auto* desc = data.find_modality(modality);
  if (desc == nullptr) {
    throw DataError("dataset '" + data.dataset_id + "' has no modality '" + modality + "'");
  }
  for (const auto& v : data.videos) {
    if (!v.has_modality(modality)) {
      throw DataError("video '" + v.id + "' lacks modality '" + modality + "'");
    }
  }
  *dim = desc->dim;
}

}  // namespace

bool ClassDistribution::is_valid(double tolerance) const {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
    total += p;
  }
  return !probs.empty() && std::abs(total - 1.0) <= tolerance;
}

LinearClipClassifier::LinearClipClassifier(std::string modality, SoftmaxHead head)
    : modality_(std::move(modality)), head_(std::move(head)) {
  if (head_.params.size() != head_.num_classes * head_.dim + head_.num_classes) {
    throw std::invalid_argument("classifier parameters do not match C x d");
  }
  for (double p : head_.params) {
    if (!std::isfinite(p)) throw NumericError("classifier has non-finite parameters");
  }
}

ClassDistribution LinearClipClassifier::classify_clip(const VideoRecord& video,
                                                      std::size_t clip) const {
  if (clip >= video.num_clips) {
    throw std::out_of_range("clip " + std::to_string(clip) + " out of range for video '" +
                            video.id + "'");
  }
  const auto& fm = video.modality(modality_);
  if (fm.cols() != head_.dim) {
    throw DataError("video '" + video.id + "', modality '" + modality_ +
                    "': feature dim " + std::to_string(fm.cols()) +
                    " does not match classifier dim " + std::to_string(head_.dim));
  }
  ClassDistribution out{std::vector<double>(head_.num_classes)};
  head_.probabilities(fm.row(clip), out.probs);
  return out;
}

ScriptedClassifier::ScriptedClassifier(std::size_t num_classes, std::string name)
    : num_classes_(num_classes), name_(std::move(name)) {}

ScriptedClassifier ScriptedClassifier::from_dataset(const DatasetManifest& dataset,
                                                    std::string name) {
  ScriptedClassifier f(dataset.num_classes(), std::move(name));
  for (const auto& v : dataset.videos) {
    if (!v.scripted_scores) {
      throw DataError("video '" + v.id + "' has no scripted scores");
    }
    f.add(v.id, *v.scripted_scores);
  }
  return f;
}

void ScriptedClassifier::add(const std::string& video_id, FeatureMatrix scores) {
  if (scores.cols() != num_classes_) {
    throw DataError("scripted scores for '" + video_id + "' have " +
                    std::to_string(scores.cols()) + " classes, expected " +
                    std::to_string(num_classes_));
  }
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    ClassDistribution row{std::vector<double>(scores.row(i).begin(), scores.row(i).end())};
    if (!row.is_valid()) {
      throw DataError("scripted scores for '" + video_id + "', row " + std::to_string(i) +
                      " are not a probability distribution");
    }
  }
  table_.insert_or_assign(video_id, std::move(scores));
}

ClassDistribution ScriptedClassifier::classify_clip(const VideoRecord& video,
                                                    std::size_t clip) const {
  auto it = table_.find(video.id);
  if (it == table_.end()) {
    throw DataError("no scripted scores for video '" + video.id + "'");
  }
  if (clip >= it->second.rows() || clip >= video.num_clips) {
    throw std::out_of_range("clip " + std::to_string(clip) + " out of range for video '" +
                            video.id + "'");
  }
  const auto row = it->second.row(clip);
  return ClassDistribution{std::vector<double>(row.begin(), row.end())};
}

ClassDistribution aggregate_mean(std::span<const ClassDistribution> dists) {
  if (dists.empty()) throw std::invalid_argument("aggregate_mean of an empty list");
  const std::size_t C = dists.front().num_classes();
  ClassDistribution out{std::vector<double>(C, 0.0)};
  for (const auto& d : dists) {
    if (d.num_classes() != C) {
      throw std::invalid_argument("aggregate_mean over distributions of different length");
    }
    kernels::axpy(1.0, std::span<const double>(d.probs), std::span<double>(out.probs));
  }
  const double n = static_cast<double>(dists.size());
  for (double& p : out.probs) p /= n;
  return out;
}

VideoPrediction predict_video(const ClipClassifier& f, const VideoRecord& video,
                              const SelectionResult& selection) {
  if (selection.indices.empty()) {
    throw std::invalid_argument("predict_video on an empty selection for '" + video.id + "'");
  }
  std::vector<ClassDistribution> dists;
  dists.reserve(selection.indices.size());
  for (std::size_t i : selection.indices) dists.push_back(f.classify_clip(video, i));
  VideoPrediction out;
  out.distribution = aggregate_mean(dists);
  out.label = out.distribution.top_class();
  return out;
}

std::vector<double> label_scores(const ClipClassifier& f, const VideoRecord& video,
                                 std::size_t label) {
  std::vector<double> out(video.num_clips);
  for (std::size_t i = 0; i < video.num_clips; ++i) {
    out[i] = f.classify_clip(video, i).probs.at(label);
  }
  return out;
}

double mean_cross_entropy(const SoftmaxHead& head, const DatasetManifest& data,
                          const std::string& modality) {
  std::vector<double> scratch(head.params.size());
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& v : data.videos) {
    const auto& fm = v.modality(modality);
    for (std::size_t i = 0; i < v.num_clips; ++i) {
      total += head.accumulate_cross_entropy(fm.row(i), v.label, 0.0, scratch);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double stable_learning_rate(const DatasetManifest& data, const std::string& modality) {
  double max_sq = 1.0;
  for (const auto& v : data.videos) {
    const auto& fm = v.modality(modality);
    for (std::size_t i = 0; i < v.num_clips; ++i) {
      const auto x = fm.row(i);
      double sq = 1.0;
      for (float value : x) sq += static_cast<double>(value) * value;
      max_sq = std::max(max_sq, sq);
    }
  }
  return 4.0 / max_sq;
}

SoftmaxHead train_softmax_head(const DatasetManifest& train, const std::string& modality,
                               const TrainingConfig& cfg, TrainingHistory* history) {
  cfg.check();
  std::size_t dim = 0;
  require_modality(train, modality, &dim);
  const std::size_t C = train.num_classes();

  SoftmaxHead head(C, dim);
  Rng init(derive_seed(cfg.seed, kInitStream));
  for (double& p : head.params) p = init.uniform(-0.01, 0.01);

  std::vector<ClipRef> samples;
  for (std::size_t n = 0; n < train.videos.size(); ++n) {
    for (std::size_t i = 0; i < train.videos[n].num_clips; ++i) {
      samples.push_back({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(i)});
    }
  }
  if (samples.empty() && cfg.epochs > 0) throw DataError("training set has no clips");

  std::vector<double> grad(head.params.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng order(derive_seed(cfg.seed, kInitStream, epoch));
    order.shuffle(std::span<ClipRef>(samples));

    for (std::size_t start = 0; start < samples.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(samples.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& v = train.videos[samples[k].video];
        batch_loss += head.accumulate_cross_entropy(v.modality(modality).row(samples[k].clip),
                                                    v.label, scale, grad);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite cross-entropy at epoch " + std::to_string(epoch) +
                           " (learning_rate " + std::to_string(cfg.learning_rate) + ")");
      }
      kernels::axpy(-cfg.learning_rate, std::span<const double>(grad),
                    std::span<double>(head.params));
    }

    const double loss = mean_cross_entropy(head, train, modality);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite cross-entropy after epoch " + std::to_string(epoch));
    }
    if (history != nullptr) history->epoch_loss.push_back(loss);
    if (cfg.log != nullptr) {
      nlohmann::ordered_json rec;
      rec["epoch"] = epoch;
      rec["loss"] = loss;
      rec["heldout"] = nullptr;
      *cfg.log << rec.dump() << '\n';
    }
  }
  if (history != nullptr) history->selected_epoch = cfg.epochs;
  return head;
}

LinearClipClassifier train_linear_classifier(const DatasetManifest& train,
                                             const std::string& modality,
                                             const TrainingConfig& cfg,
                                             TrainingHistory* history) {
  return LinearClipClassifier(modality, train_softmax_head(train, modality, cfg, history));
}

void export_scores(DatasetManifest& dataset, const ClipClassifier& f,
                   const std::filesystem::path& manifest_dir, const std::string& subdir) {
  if (f.num_classes() != dataset.num_classes()) {
    throw DataError("classifier has " + std::to_string(f.num_classes()) +
                    " classes but dataset has " + std::to_string(dataset.num_classes()));
  }
  std::filesystem::create_directories(manifest_dir / subdir);
  const std::size_t C = dataset.num_classes();
  for (auto& v : dataset.videos) {
    std::vector<float> values;
    values.reserve(v.num_clips * C);
    for (std::size_t i = 0; i < v.num_clips; ++i) {
      for (double p : f.classify_clip(v, i).probs) values.push_back(static_cast<float>(p));
    }
    const std::string rel = subdir + "/" + v.id + ".scsc";
    io::write_matrix_file(manifest_dir / rel, io::kScoreMagic, v.num_clips, C, values);
    v.scripted_scores = io::open_matrix_file(manifest_dir / rel, io::kScoreMagic);
    v.score_path = rel;
  }
}

void save_classifier(const LinearClipClassifier& f, const std::filesystem::path& path) {
  const auto& h = f.head();
  io::ModelFile model;
  model.kind = io::ModelKind::linear_classifier;
  model.modality = f.modality();
  const auto C = static_cast<std::uint32_t>(h.num_classes);
  const auto d = static_cast<std::uint32_t>(h.dim);
  model.tensors.push_back({C, d, {h.weights().begin(), h.weights().end()}});
  model.tensors.push_back({C, 1, {h.bias().begin(), h.bias().end()}});
  io::write_model_file(path, model);
}

LinearClipClassifier load_classifier(const std::filesystem::path& path) {
  auto model = io::read_model_file(path);
  if (model.kind != io::ModelKind::linear_classifier || model.tensors.size() != 2 ||
      model.tensors[1].rows != model.tensors[0].rows || model.tensors[1].cols != 1) {
    throw DataError(path.string() + ": not a linear classifier checkpoint");
  }
  SoftmaxHead head(model.tensors[0].rows, model.tensors[0].cols);
  std::copy(model.tensors[0].values.begin(), model.tensors[0].values.end(),
            head.params.begin());
  std::copy(model.tensors[1].values.begin(), model.tensors[1].values.end(),
            head.params.begin() + static_cast<std::ptrdiff_t>(head.num_classes * head.dim));
  return LinearClipClassifier(model.modality, std::move(head));
}

}  // namespace scsampler
