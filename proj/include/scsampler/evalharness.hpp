#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scsampler/classifier.hpp"
#include "scsampler/fusion.hpp"
#include "scsampler/saliency.hpp"
#include "scsampler/selection.hpp"

namespace scsampler {

/// Per-clip compute prices in GFLOPs.
struct CostModel {
  double classifier_per_clip = 0.0;
  std::map<std::string, double, std::less<>> sampler_per_clip;
  double fixed_overhead = 0.0;

  double sampler_total() const;
  /// Same prices, sampler restricted to the given modalities.
  CostModel restricted_to(std::span<const std::string> modalities) const;
  void check() const;
};

enum class CostScheme { dense, sampled };

/// dense:   L * c_f + overhead
/// sampled: ceil(L / N) * sum(c_s) + min(K, ceil(L / N)) * c_f + overhead
double compute_cost(const CostModel& model, std::size_t num_clips, std::size_t k,
                    std::size_t stride, CostScheme scheme);

enum class StrategyKind { dense, random, uniform, empirical, oracle, scsampler };

std::string_view strategy_name(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);

/// Trained saliency model. Without fusion every scorer is averaged into a
/// single list; with fusion the visual and audio groups are averaged
/// separately and then combined.
struct SamplerModel {
  std::vector<SaliencyScorer> visual;
  std::vector<SaliencyScorer> audio;
  std::optional<FusionConfig> fusion;
  // Provenance, e.g. the classifier and dataset the sampler was fit with.
  std::string trained_with_classifier;
  std::string trained_on_dataset;

  std::vector<std::string> modalities() const;
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::dense;
  const SamplerModel* sampler = nullptr;
  const EmpiricalHistogram* histogram = nullptr;
};

struct EvalParams {
  std::size_t k = 10;
  std::size_t stride = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t bins = kDefaultHistogramBins;
  bool top5 = false;
};

struct VideoEvalRecord {
  std::string id;
  std::size_t num_clips = 0;
  std::size_t true_label = 0;
  std::size_t predicted = 0;
  std::vector<std::size_t> indices;
  // Sum of f_y over the selected clips.
  double true_class_score_sum = 0.0;
};

struct EvalReport {
  std::string dataset_id;
  std::string strategy;
  std::size_t k = 0;
  std::size_t stride = 1;
  std::string fusion;
  std::optional<double> alpha;
  std::optional<std::size_t> k_prime;
  std::string classifier;
  double accuracy = 0.0;
  std::optional<double> top5_accuracy;
  double gflops_per_video = 0.0;
  EmpiricalHistogram histogram;
  std::vector<VideoEvalRecord> videos;
  std::map<std::string, std::string> provenance;
};

/// Selection for one video under a strategy (exposed for checks that need
/// the raw selection rather than the report).
SelectionResult select_for_video(const ClipClassifier& f, const VideoRecord& video,
                                 std::size_t video_index, const StrategySpec& spec,
                                 const EvalParams& params);

EvalReport evaluate_strategy(const DatasetManifest& test, const ClipClassifier& f,
                             const StrategySpec& spec, const EvalParams& params,
                             const CostModel& cost);

EmpiricalHistogram location_histogram(std::span<const EvalReport> reports, std::size_t bins);

enum class SweepParameter { k, stride, alpha, k_prime };

std::string_view sweep_parameter_name(SweepParameter p);
SweepParameter parse_sweep_parameter(std::string_view name);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::k;
  std::vector<double> values;
};

/// One report per value; every other input, seeds included, is held fixed.
std::vector<EvalReport> sweep(const DatasetManifest& test, const ClipClassifier& f,
                              const StrategySpec& spec, const EvalParams& params,
                              const CostModel& cost, const SweepSpec& sweep_spec);

/// Evaluates a sampler fit with one classifier/dataset using another
/// classifier on another dataset; the report records both pairs.
EvalReport cross_protocol(const SamplerModel& sampler, const DatasetManifest& eval_dataset,
                          const ClipClassifier& eval_classifier, const EvalParams& params,
                          const CostModel& cost);

std::string report_to_jsonl(const EvalReport& report);
void write_report_jsonl(std::span<const EvalReport> reports, const std::filesystem::path& path);

inline constexpr std::string_view kCsvHeader = "strategy,K,N,accuracy,gflops_per_video";
std::string reports_to_csv(std::span<const EvalReport> reports);
void write_reports_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);

std::string selection_to_jsonl(const SelectionResult& selection);
SelectionResult parse_selection_jsonl(std::string_view line);

}  // namespace scsampler
