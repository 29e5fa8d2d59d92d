#include "scsampler/saliency.hpp"

#include <cmath>
#include <ostream>

#include "json.hpp"
#include "scsampler/checkpoint.hpp"
#include "scsampler/error.hpp"
#include "scsampler/kernels.hpp"
#include "scsampler/rng.hpp"

namespace scsampler {
namespace {

constexpr std::uint64_t kHoldoutStream = 0x401d;
constexpr std::uint64_t kPairStream = 0x9a12;
constexpr std::uint64_t kShuffleStream = 0x5eed;

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void check_rank_kind(const SaliencyScorer& s) {
  if (s.kind == ScorerKind::ac_classifier) {
    throw std::invalid_argument("ranking objectives need a linear-sigmoid or mlp-1hidden scorer");
  }
}

void check_dim(const SaliencyScorer& s, std::span<const float> phi) {
  if (phi.size() != s.dim) {
    throw DataError("scorer for '" + s.modality + "' expects dim " + std::to_string(s.dim) +
                    ", got " + std::to_string(phi.size()));
  }
}

io::ModelKind to_model_kind(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::linear_sigmoid:
      return io::ModelKind::linear_sigmoid;
    case ScorerKind::mlp_1hidden:
      return io::ModelKind::mlp_1hidden;
    case ScorerKind::ac_classifier:
      return io::ModelKind::ac_classifier;
  }
  return io::ModelKind::linear_sigmoid;
}

}  // namespace

std::string_view scorer_kind_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::linear_sigmoid:
      return "linear-sigmoid";
    case ScorerKind::mlp_1hidden:
      return "mlp-1hidden";
    case ScorerKind::ac_classifier:
      return "ac-classifier";
  }
  return "?";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "linear-sigmoid") return ScorerKind::linear_sigmoid;
  if (name == "mlp-1hidden") return ScorerKind::mlp_1hidden;
  if (name == "ac-classifier") return ScorerKind::ac_classifier;
  throw ConfigError("unknown scorer kind '" + std::string(name) + "'");
}

std::size_t SaliencyScorer::param_count(ScorerKind kind, std::size_t dim, std::size_t width) {
  switch (kind) {
    case ScorerKind::linear_sigmoid:
      return dim + 1;
    case ScorerKind::mlp_1hidden:
      return width * dim + 2 * width + 1;
    case ScorerKind::ac_classifier:
      return width * dim + width;
  }
  return 0;
}

double SaliencyScorer::score(std::span<const float> phi) const {
  switch (kind) {
    case ScorerKind::linear_sigmoid:
      return sigmoid(kernels::dot(std::span<const double>(params.data(), dim), phi) +
                     params[dim]);
    case ScorerKind::mlp_1hidden: {
      const double* w1 = params.data();
      const double* b1 = w1 + width * dim;
      const double* w2 = b1 + width;
      std::vector<double> hidden(width);
      kernels::gemv({w1, width * dim}, phi, {b1, width}, hidden);
      double a = w2[width];
      for (std::size_t k = 0; k < width; ++k) a += w2[k] * std::max(hidden[k], 0.0);
      return sigmoid(a);
    }
    case ScorerKind::ac_classifier: {
      std::vector<double> p(width);
      kernels::gemv({params.data(), width * dim}, phi, {params.data() + width * dim, width}, p);
      softmax_inplace(p);
      return p[argmax(p)];
    }
  }
  return 0.0;
}

double SaliencyScorer::score_and_accumulate(std::span<const float> phi, double weight,
                                            std::span<double> grad) const {
  switch (kind) {
    case ScorerKind::linear_sigmoid: {
      const double s = score(phi);
      const double g = weight * s * (1.0 - s);
      kernels::axpy(g, phi, grad.first(dim));
      grad[dim] += g;
      return s;
    }
    case ScorerKind::mlp_1hidden: {
      const double* w1 = params.data();
      const double* b1 = w1 + width * dim;
      const double* w2 = b1 + width;
      std::vector<double> hidden(width);
      kernels::gemv({w1, width * dim}, phi, {b1, width}, hidden);
      double a = w2[width];
      for (std::size_t k = 0; k < width; ++k) a += w2[k] * std::max(hidden[k], 0.0);
      const double s = sigmoid(a);
      const double ga = weight * s * (1.0 - s);

      double* g_w1 = grad.data();
      double* g_b1 = g_w1 + width * dim;
      double* g_w2 = g_b1 + width;
      for (std::size_t k = 0; k < width; ++k) {
        const double h = std::max(hidden[k], 0.0);
        g_w2[k] += ga * h;
        if (hidden[k] > 0.0) {
          const double gh = ga * w2[k];
          kernels::axpy(gh, phi, std::span<double>(g_w1 + k * dim, dim));
          g_b1[k] += gh;
        }
      }
      g_w2[width] += ga;
      return s;
    }
    case ScorerKind::ac_classifier: {
      std::vector<double> p(width);
      kernels::gemv({params.data(), width * dim}, phi, {params.data() + width * dim, width}, p);
      softmax_inplace(p);
      const std::size_t top = argmax(p);
      const double s = p[top];
      double* g_w = grad.data();
      double* g_b = g_w + width * dim;
      for (std::size_t k = 0; k < width; ++k) {
        const double g = weight * s * ((k == top ? 1.0 : 0.0) - p[k]);
        kernels::axpy(g, phi, std::span<double>(g_w + k * dim, dim));
        g_b[k] += g;
      }
      return s;
    }
  }
  return 0.0;
}

SaliencyScorer make_scorer(ScorerKind kind, std::string modality, std::size_t dim,
                           std::size_t width, std::uint64_t seed) {
  if (dim == 0) throw ConfigError("scorer dim must be positive");
  if (kind == ScorerKind::linear_sigmoid) width = 0;
  if (kind != ScorerKind::linear_sigmoid && width == 0) {
    throw ConfigError("scorer width must be positive for " +
                      std::string(scorer_kind_name(kind)));
  }
  SaliencyScorer s{kind, std::move(modality), dim, width,
                   std::vector<double>(SaliencyScorer::param_count(kind, dim, width), 0.0)};
  Rng rng(derive_seed(seed, 0x5c0e));
  if (kind == ScorerKind::mlp_1hidden) {
    const double a1 = 1.0 / std::sqrt(static_cast<double>(dim));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(width));
    for (std::size_t k = 0; k < width * dim; ++k) s.params[k] = rng.uniform(-a1, a1);
    double* w2 = s.params.data() + width * dim + width;
    for (std::size_t k = 0; k < width; ++k) w2[k] = rng.uniform(-a2, a2);
  } else {
    for (double& p : s.params) p = rng.uniform(-0.01, 0.01);
  }
  return s;
}

SaliencyScorer scorer_from_head(std::string modality, const SoftmaxHead& head) {
  return SaliencyScorer{ScorerKind::ac_classifier, std::move(modality), head.dim,
                        head.num_classes, head.params};
}

double score_clip(const SaliencyScorer& scorer, const VideoRecord& video, std::size_t clip) {
  const auto& fm = video.modality(scorer.modality);
  if (clip >= fm.rows()) throw std::out_of_range("clip index out of range");
  const auto phi = fm.row(clip);
  check_dim(scorer, phi);
  return scorer.score(phi);
}

double ac_saliency(const SaliencyScorer& scorer, std::span<const float> phi) {
  if (scorer.kind != ScorerKind::ac_classifier) {
    throw std::invalid_argument("ac_saliency needs an ac-classifier scorer");
  }
  check_dim(scorer, phi);
  return scorer.score(phi);
}

std::vector<PseudoPair> make_pseudo_pairs(std::string_view video_id,
                                          std::span<const double> label_scores,
                                          std::size_t count, std::uint64_t seed) {
  const std::size_t L = label_scores.size();
  std::vector<PseudoPair> pairs;
  if (L < 2) return pairs;
  pairs.reserve(count);
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = rng.index(L);
    std::size_t j = rng.index(L - 1);
    if (j >= i) ++j;
    const int z = label_scores[i] > label_scores[j] ? 1 : -1;
    pairs.push_back({std::string(video_id), i, j, z});
  }
  return pairs;
}

std::vector<PseudoPair> make_pseudo_pairs(const ClipClassifier& f, const VideoRecord& video,
                                          const TrainingConfig& cfg) {
  const auto scores = label_scores(f, video, video.label);
  return make_pseudo_pairs(video.id, scores, cfg.pairs_per_video_per_epoch,
                           derive_seed(cfg.seed, kPairStream));
}

double sal_rank_loss(double s_i, double s_j, int z, double eta) {
  return std::max(-static_cast<double>(z) * (s_i - s_j + eta), 0.0);
}

std::vector<double> sal_rank_gradient(const SaliencyScorer& scorer,
                                      std::span<const float> phi_i,
                                      std::span<const float> phi_j, int z, double eta) {
  check_rank_kind(scorer);
  check_dim(scorer, phi_i);
  check_dim(scorer, phi_j);
  std::vector<double> grad(scorer.params.size(), 0.0);
  const double arg = -static_cast<double>(z) * (scorer.score(phi_i) - scorer.score(phi_j) + eta);
  if (arg <= 0.0) return grad;
  scorer.score_and_accumulate(phi_i, -static_cast<double>(z), grad);
  scorer.score_and_accumulate(phi_j, static_cast<double>(z), grad);
  return grad;
}

std::vector<double> cross_entropy_gradient(const SaliencyScorer& scorer,
                                           std::span<const float> phi, std::size_t label) {
  if (scorer.kind != ScorerKind::ac_classifier) {
    throw std::invalid_argument("cross-entropy gradient needs an ac-classifier scorer");
  }
  check_dim(scorer, phi);
  SoftmaxHead head(scorer.width, scorer.dim);
  head.params = scorer.params;
  std::vector<double> grad(scorer.params.size(), 0.0);
  head.accumulate_cross_entropy(phi, label, 1.0, grad);
  return grad;
}

SaliencyScorer train_ac(const DatasetManifest& train, const std::string& modality,
                        const TrainingConfig& cfg, TrainingHistory* history) {
  return scorer_from_head(modality, train_softmax_head(train, modality, cfg, history));
}

double pair_ranking_accuracy(std::span<const double> saliency,
                             std::span<const double> label_scores) {
  std::size_t total = 0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < label_scores.size(); ++i) {
    for (std::size_t j = i + 1; j < label_scores.size(); ++j) {
      const double df = label_scores[i] - label_scores[j];
      if (df == 0.0) continue;
      ++total;
      if (df * (saliency[i] - saliency[j]) > 0.0) ++agree;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
}

double accumulate_ensemble_pair(std::span<const WeightedScorer> members,
                                std::span<const std::span<const float>> phi_i,
                                std::span<const std::span<const float>> phi_j, int z,
                                double eta, double scale,
                                std::vector<std::vector<double>>& grads) {
  if (phi_i.size() != members.size() || phi_j.size() != members.size() ||
      grads.size() != members.size()) {
    throw std::invalid_argument("ensemble pair: one feature row and gradient per member");
  }
  double s_i = 0.0;
  double s_j = 0.0;
  for (std::size_t m = 0; m < members.size(); ++m) {
    s_i += members[m].weight * members[m].scorer->score(phi_i[m]);
    s_j += members[m].weight * members[m].scorer->score(phi_j[m]);
  }
  const double loss = sal_rank_loss(s_i, s_j, z, eta);
  if (loss <= 0.0) return loss;
  const double g = -static_cast<double>(z) * scale;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& sc = *members[m].scorer;
    sc.score_and_accumulate(phi_i[m], g * members[m].weight, grads[m]);
    sc.score_and_accumulate(phi_j[m], -g * members[m].weight, grads[m]);
  }
  return loss;
}

void train_ranking_ensemble(const DatasetManifest& train, const ClipClassifier& f,
                            std::span<WeightedScorer> members, const TrainingConfig& cfg,
                            TrainingHistory* history) {
  cfg.check();
  if (members.empty()) throw std::invalid_argument("ranking ensemble has no members");
  for (const auto& m : members) {
    check_rank_kind(*m.scorer);
    const auto* desc = train.find_modality(m.scorer->modality);
    if (desc == nullptr || desc->dim != m.scorer->dim) {
      throw DataError("training set has no modality '" + m.scorer->modality +
                      "' of dim " + std::to_string(m.scorer->dim));
    }
    for (const auto& v : train.videos) v.modality(m.scorer->modality);
  }
  if (f.num_classes() != train.num_classes()) {
    throw DataError("classifier and training set disagree on the number of classes");
  }

  const std::size_t n = train.videos.size();
  std::vector<std::vector<double>> targets(n);
  for (std::size_t k = 0; k < n; ++k) {
    targets[k] = label_scores(f, train.videos[k], train.videos[k].label);
  }

  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  Rng split_rng(derive_seed(cfg.seed, kHoldoutStream));
  split_rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_hold = n >= 2 ? std::max<std::size_t>(1, (n + 5) / 10) : 0;
  std::vector<bool> held(n, false);
  for (std::size_t k = 0; k < n_hold; ++k) held[order[k]] = true;

  auto combined = [&](const VideoRecord& v, std::size_t clip) {
    double s = 0.0;
    for (const auto& m : members) {
      s += m.weight * m.scorer->score(v.modality(m.scorer->modality).row(clip));
    }
    return s;
  };

  auto heldout_metric = [&]() {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!held[k]) continue;
      const auto& v = train.videos[k];
      std::vector<double> s(v.num_clips);
      for (std::size_t i = 0; i < v.num_clips; ++i) s[i] = combined(v, i);
      total += pair_ranking_accuracy(s, targets[k]);
      ++count;
    }
    return count == 0 ? std::nan("") : total / static_cast<double>(count);
  };

  std::vector<std::vector<double>> best;
  for (const auto& m : members) best.push_back(m.scorer->params);
  double best_metric = -1.0;

  struct Sample {
    std::uint32_t video;
    std::uint32_t i;
    std::uint32_t j;
    int z;
  };
  std::vector<std::vector<double>> grads;
  for (const auto& m : members) grads.emplace_back(m.scorer->params.size());
  std::vector<std::span<const float>> rows_i(members.size()), rows_j(members.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<Sample> samples;
    for (std::size_t k = 0; k < n; ++k) {
      if (held[k]) continue;
      for (const auto& p : make_pseudo_pairs(train.videos[k].id, targets[k],
                                             cfg.pairs_per_video_per_epoch,
                                             derive_seed(cfg.seed, kPairStream, epoch, k))) {
        samples.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(p.i),
                           static_cast<std::uint32_t>(p.j), p.z});
      }
    }
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream, epoch));
    shuffle_rng.shuffle(std::span<Sample>(samples));

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < samples.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(samples.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& smp = samples[k];
        const auto& v = train.videos[smp.video];
        for (std::size_t m = 0; m < members.size(); ++m) {
          const auto& fm = v.modality(members[m].scorer->modality);
          rows_i[m] = fm.row(smp.i);
          rows_j[m] = fm.row(smp.j);
        }
        loss_sum += accumulate_ensemble_pair(members, rows_i, rows_j, smp.z, cfg.margin_eta,
                                             scale, grads);
      }
      if (!std::isfinite(loss_sum)) {
        throw NumericError("non-finite ranking loss at epoch " + std::to_string(epoch));
      }
      for (std::size_t m = 0; m < members.size(); ++m) {
        kernels::axpy(-cfg.learning_rate, std::span<const double>(grads[m]),
                      std::span<double>(members[m].scorer->params));
      }
    }
    for (const auto& m : members) {
      for (double p : m.scorer->params) {
        if (!std::isfinite(p)) {
          throw NumericError("non-finite scorer parameters at epoch " + std::to_string(epoch));
        }
      }
    }

    const double epoch_loss =
        samples.empty() ? 0.0 : loss_sum / static_cast<double>(samples.size());
    const double metric = heldout_metric();
    if (history != nullptr) {
      history->epoch_loss.push_back(epoch_loss);
      history->heldout_metric.push_back(metric);
    }
    if (cfg.log != nullptr) {
      nlohmann::ordered_json rec;
      rec["epoch"] = epoch;
      rec["loss"] = epoch_loss;
      if (std::isnan(metric)) {
        rec["heldout"] = nullptr;
      } else {
        rec["heldout"] = metric;
      }
      *cfg.log << rec.dump() << '\n';
    }
    // Without a held-out split the last epoch wins.
    if (std::isnan(metric) || metric > best_metric) {
      best_metric = std::isnan(metric) ? best_metric : metric;
      for (std::size_t m = 0; m < members.size(); ++m) best[m] = members[m].scorer->params;
      if (history != nullptr) history->selected_epoch = epoch;
    }
  }
  for (std::size_t m = 0; m < members.size(); ++m) members[m].scorer->params = best[m];
}

SaliencyScorer train_sal_rank(const DatasetManifest& train, const ClipClassifier& f,
                              const std::string& modality, const TrainingConfig& cfg,
                              ScorerKind kind, std::size_t hidden_width,
                              TrainingHistory* history) {
  if (kind == ScorerKind::ac_classifier) {
    throw ConfigError("sal-rank training needs a linear-sigmoid or mlp-1hidden scorer");
  }
  const auto* desc = train.find_modality(modality);
  if (desc == nullptr) {
    throw DataError("training set has no modality '" + modality + "'");
  }
  SaliencyScorer scorer = make_scorer(kind, modality, desc->dim, hidden_width, cfg.seed);
  WeightedScorer member{&scorer, 1.0};
  train_ranking_ensemble(train, f, std::span<WeightedScorer>(&member, 1), cfg, history);
  return scorer;
}

std::vector<double> score_video(std::span<const SaliencyScorer> scorers,
                                const VideoRecord& video) {
  std::vector<std::size_t> all(video.num_clips);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return score_video(scorers, video, all);
}

std::vector<double> score_video(std::span<const SaliencyScorer> scorers,
                                const VideoRecord& video, std::span<const std::size_t> clips) {
  if (scorers.empty()) throw std::invalid_argument("score_video needs at least one scorer");
  std::vector<double> out(clips.size(), 0.0);
  for (const auto& s : scorers) {
    const auto& fm = video.modality(s.modality);
    for (std::size_t k = 0; k < clips.size(); ++k) {
      if (clips[k] >= fm.rows()) throw std::out_of_range("clip index out of range");
      const auto phi = fm.row(clips[k]);
      check_dim(s, phi);
      out[k] += s.score(phi);
    }
  }
  const double count = static_cast<double>(scorers.size());
  for (double& v : out) v /= count;
  return out;
}

void save_scorer(const SaliencyScorer& scorer, const std::filesystem::path& path) {
  io::ModelFile model;
  model.kind = to_model_kind(scorer.kind);
  model.modality = scorer.modality;
  const auto d = static_cast<std::uint32_t>(scorer.dim);
  const auto w = static_cast<std::uint32_t>(scorer.width);
  const auto& p = scorer.params;
  auto slice = [&p](std::size_t from, std::size_t count) {
    return std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(from),
                               p.begin() + static_cast<std::ptrdiff_t>(from + count));
  };
  switch (scorer.kind) {
    case ScorerKind::linear_sigmoid:
      model.tensors.push_back({1, d, slice(0, d)});
      model.tensors.push_back({1, 1, slice(d, 1)});
      break;
    case ScorerKind::mlp_1hidden:
      model.tensors.push_back({w, d, slice(0, std::size_t{w} * d)});
      model.tensors.push_back({w, 1, slice(std::size_t{w} * d, w)});
      model.tensors.push_back({1, w, slice(std::size_t{w} * d + w, w)});
      model.tensors.push_back({1, 1, slice(std::size_t{w} * d + 2 * w, 1)});
      break;
    case ScorerKind::ac_classifier:
      model.tensors.push_back({w, d, slice(0, std::size_t{w} * d)});
      model.tensors.push_back({w, 1, slice(std::size_t{w} * d, w)});
      break;
  }
  io::write_model_file(path, model);
}

SaliencyScorer load_scorer(const std::filesystem::path& path) {
  auto model = io::read_model_file(path);
  SaliencyScorer s;
  s.modality = model.modality;
  auto fail = [&path]() -> SaliencyScorer {
    throw DataError(path.string() + ": malformed scorer checkpoint");
  };
  if (model.tensors.empty()) return fail();
  switch (model.kind) {
    case io::ModelKind::linear_sigmoid:
      s.kind = ScorerKind::linear_sigmoid;
      s.dim = model.tensors[0].cols;
      s.width = 0;
      if (model.tensors.size() != 2) return fail();
      break;
    case io::ModelKind::mlp_1hidden:
      s.kind = ScorerKind::mlp_1hidden;
      s.width = model.tensors[0].rows;
      s.dim = model.tensors[0].cols;
      if (model.tensors.size() != 4) return fail();
      break;
    case io::ModelKind::ac_classifier:
      s.kind = ScorerKind::ac_classifier;
      s.width = model.tensors[0].rows;
      s.dim = model.tensors[0].cols;
      if (model.tensors.size() != 2) return fail();
      break;
    case io::ModelKind::linear_classifier:
      throw DataError(path.string() + ": classifier checkpoint, not a scorer");
  }
  for (const auto& t : model.tensors) s.params.insert(s.params.end(), t.values.begin(), t.values.end());
  if (s.dim == 0 || s.params.size() != SaliencyScorer::param_count(s.kind, s.dim, s.width)) {
    return fail();
  }
  return s;
}

}  // namespace scsampler
