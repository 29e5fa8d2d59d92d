#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scsampler/datamodel.hpp"
#include "scsampler/selection_result.hpp"
#include "scsampler/softmax_head.hpp"
#include "scsampler/training.hpp"

namespace scsampler {

struct ClassDistribution {
  std::vector<double> probs;

  std::size_t num_classes() const { return probs.size(); }
  std::size_t top_class() const { return argmax(probs); }
  bool is_valid(double tolerance = kProbabilityTolerance) const;
};

/// The expensive clip classifier f. Implementations are immutable and
/// safe to call concurrently.
class ClipClassifier {
 public:
  virtual ~ClipClassifier() = default;
  virtual std::size_t num_classes() const = 0;
  virtual ClassDistribution classify_clip(const VideoRecord& video,
                                          std::size_t clip) const = 0;
  virtual std::string describe() const = 0;
};

/// softmax(W phi + b) over one modality's clip features.
class LinearClipClassifier final : public ClipClassifier {
 public:
  LinearClipClassifier(std::string modality, SoftmaxHead head);

  std::size_t num_classes() const override { return head_.num_classes; }
  ClassDistribution classify_clip(const VideoRecord& video,
                                  std::size_t clip) const override;
  std::string describe() const override { return "linear:" + modality_; }

  const std::string& modality() const { return modality_; }
  const SoftmaxHead& head() const { return head_; }

 private:
  std::string modality_;
  SoftmaxHead head_;
};

/// Replays precomputed clip scores keyed by video id.
class ScriptedClassifier final : public ClipClassifier {
 public:
  ScriptedClassifier(std::size_t num_classes, std::string name = "scripted");
  // Takes every video's scripted_scores; throws DataError if any is missing.
  static ScriptedClassifier from_dataset(const DatasetManifest& dataset,
                                         std::string name = "scripted");

  void add(const std::string& video_id, FeatureMatrix scores);

  std::size_t num_classes() const override { return num_classes_; }
  ClassDistribution classify_clip(const VideoRecord& video,
                                  std::size_t clip) const override;
  std::string describe() const override { return name_; }

 private:
  std::size_t num_classes_;
  std::string name_;
  std::map<std::string, FeatureMatrix, std::less<>> table_;
};

struct VideoPrediction {
  std::size_t label = 0;
  ClassDistribution distribution;
};

ClassDistribution aggregate_mean(std::span<const ClassDistribution> dists);

VideoPrediction predict_video(const ClipClassifier& f, const VideoRecord& video,
                              const SelectionResult& selection);

/// f_label(v^(i)) for every clip i.
std::vector<double> label_scores(const ClipClassifier& f, const VideoRecord& video,
                                 std::size_t label);

/// Softmax-regression fit over every (clip feature, video label) pair.
/// Parameters start from seeded U[-0.01, 0.01].
SoftmaxHead train_softmax_head(const DatasetManifest& train, const std::string& modality,
                               const TrainingConfig& cfg,
                               TrainingHistory* history = nullptr);

LinearClipClassifier train_linear_classifier(const DatasetManifest& train,
                                             const std::string& modality,
                                             const TrainingConfig& cfg,
                                             TrainingHistory* history = nullptr);

/// Mean cross-entropy of a head over all training clips.
double mean_cross_entropy(const SoftmaxHead& head, const DatasetManifest& data,
                          const std::string& modality);

/// Largest constant step for which full-batch gradient descent on the mean
/// cross-entropy cannot increase the loss: 4 / max ||[x, 1]||^2.
double stable_learning_rate(const DatasetManifest& data, const std::string& modality);

/// Writes f's clip distributions for every video as score files under
/// `dir / subdir` and records them as the videos' scripted scores.
void export_scores(DatasetManifest& dataset, const ClipClassifier& f,
                   const std::filesystem::path& manifest_dir,
                   const std::string& subdir = "scores");

void save_classifier(const LinearClipClassifier& f, const std::filesystem::path& path);
LinearClipClassifier load_classifier(const std::filesystem::path& path);

}  // namespace scsampler
