#pragma once

// Experiment configuration and the batch commands behind the CLI.
//
// Output directory layout:
//   <output_dir>/checkpoints/classifier.sclm
//   <output_dir>/checkpoints/sampler/{visual,audio}_<i>_<modality>.sclm
//   <output_dir>/checkpoints/joint/{visual,audio}_<i>_<modality>.sclm
//   <output_dir>/logs/train_<target>.log
//   <output_dir>/reports/{evaluate,sweep}.{jsonl,csv}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scsampler/evalharness.hpp"
#include "scsampler/fusion.hpp"
#include "scsampler/saliency.hpp"
#include "scsampler/synthgen.hpp"
#include "scsampler/training.hpp"

namespace scsampler {

enum class SamplerLoss { ac, sal_rank };

struct ScorerSpec {
  std::string modality;
  ScorerKind kind = ScorerKind::linear_sigmoid;
  std::size_t hidden_width = kDefaultHiddenWidth;
};

struct ExperimentConfig {
  std::filesystem::path base_dir;
  std::filesystem::path output_dir = "out";
  std::filesystem::path dataset_dir = "data";
  std::optional<std::filesystem::path> train_manifest;
  std::optional<std::filesystem::path> test_manifest;
  std::size_t workers = 1;

  SynthConfig synth;

  std::string classifier_modality = std::string(modality::kRgb);
  TrainingConfig classifier_training;

  SamplerLoss sampler_loss = SamplerLoss::sal_rank;
  std::vector<ScorerSpec> visual_scorers;
  std::vector<ScorerSpec> audio_scorers;
  TrainingConfig sampler_training;
  std::optional<FusionConfig> fusion;
  TrainingConfig joint_training;

  std::vector<StrategyKind> strategies;
  std::size_t k = 10;
  std::size_t stride = 1;
  std::uint64_t eval_seed = 1;
  std::size_t histogram_bins = kDefaultHistogramBins;
  bool top5 = false;
  CostModel cost;
  std::optional<SweepSpec> sweep;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path train_manifest_path() const;
  std::filesystem::path test_manifest_path() const;
  std::filesystem::path checkpoint_dir() const { return resolve(output_dir) / "checkpoints"; }

  void check() const;
};

/// Parses the JSON experiment file; relative paths resolve against its directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir);

enum class TrainTarget { classifier, sampler, joint };
TrainTarget parse_train_target(std::string_view name);

/// FNV-1a over the bytes of every regular file under `dir`, in path order.
std::uint64_t directory_checksum(const std::filesystem::path& dir);

void cmd_generate(const ExperimentConfig& cfg, std::ostream& out);
void cmd_train(const ExperimentConfig& cfg, TrainTarget target, std::ostream& out);
std::vector<EvalReport> cmd_evaluate(const ExperimentConfig& cfg, std::ostream& out);
std::vector<EvalReport> cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);
/// Returns the number of violations found.
std::size_t cmd_validate(const ExperimentConfig& cfg, std::ostream& out);

/// Loads the trained sampler named by the configuration (joint checkpoints
/// when the fusion scheme is joint-training).
SamplerModel load_sampler_model(const ExperimentConfig& cfg);

}  // namespace scsampler
