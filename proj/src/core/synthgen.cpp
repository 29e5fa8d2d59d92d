#include "scsampler/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "scsampler/binary_io.hpp"
#include "scsampler/error.hpp"
#include "scsampler/parallel.hpp"
#include "scsampler/rng.hpp"

namespace scsampler {
namespace {

constexpr std::uint64_t kGeometryStream = 0x6e0;
constexpr std::uint64_t kClassStream = 0xc1a55;

using Vec = std::vector<double>;

Vec random_unit(Rng& rng, std::size_t dim) {
  Vec v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

bool is_audio(const SynthModality& m) { return m.name.rfind("audio", 0) == 0; }

struct Geometry {
  // [modality][class] -> mean vector
  std::vector<std::vector<Vec>> class_means;
};

Geometry build_geometry(const SynthConfig& cfg) {
  Geometry g;
  const std::uint64_t class_seed = cfg.class_mean_seed.value_or(cfg.seed);
  for (std::size_t m = 0; m < cfg.modalities.size(); ++m) {
    const std::size_t d = cfg.modalities[m].dim;
    Rng geom(derive_seed(cfg.geometry_seed.value_or(cfg.seed), kGeometryStream, m));
    const Vec shared = random_unit(geom, d);
    std::vector<Vec> means;
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
      Rng crng(derive_seed(class_seed, kClassStream, m, c));
      const Vec own = random_unit(crng, d);
      Vec mean(d);
      double norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        mean[k] = std::sqrt(cfg.saliency_share) * shared[k] +
                  std::sqrt(1.0 - cfg.saliency_share) * own[k];
        norm += mean[k] * mean[k];
      }
      norm = std::sqrt(norm);
      for (double& x : mean) x *= cfg.class_signal_strength / (norm > 0.0 ? norm : 1.0);
      means.push_back(std::move(mean));
    }
    g.class_means.push_back(std::move(means));
  }
  return g;
}

std::size_t segment_start(const SynthConfig& cfg, Rng& rng, std::size_t num_clips,
                          std::size_t length) {
  const std::size_t range = num_clips - length + 1;
  if (cfg.position_bias == PositionBias::uniform || range < 4) return rng.index(range);
  const std::size_t quarter = range / 4;
  const double u = rng.uniform();
  if (u < 0.35) return rng.index(quarter);
  if (u < 0.90) return range - quarter + rng.index(quarter);
  return rng.index(range);
}

struct VideoSpec {
  std::string id;
  std::size_t label;
  std::size_t num_clips;
  PlantedSegment segment;
};

std::string video_id(Split split, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu", std::string(split_name(split)).c_str(), n);
  return buf;
}

void write_masks(const std::filesystem::path& path, const DatasetManifest& m,
                 const std::map<std::string, std::vector<bool>, std::less<>>& masks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& v : m.videos) {
    out << v.id << ' ';
    for (bool b : masks.at(v.id)) out << (b ? '1' : '0');
    out << '\n';
  }
}

}  // namespace

std::string_view position_bias_name(PositionBias bias) {
  return bias == PositionBias::edges ? "edges" : "uniform";
}

PositionBias parse_position_bias(std::string_view name) {
  if (name == "edges") return PositionBias::edges;
  if (name == "uniform") return PositionBias::uniform;
  throw ConfigError("saliency_position_bias: unknown value '" + std::string(name) + "'");
}

std::vector<SynthModality> SynthConfig::default_modalities() {
  return {{std::string(modality::kRgb), 16},
          {std::string(modality::kMotion), 16},
          {std::string(modality::kResidual), 16},
          {std::string(modality::kIFrame), 16},
          {std::string(modality::kAudioMel), 16}};
}

void SynthConfig::check() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (train_videos_per_class == 0 && test_videos_per_class == 0) {
    fail("videos_per_class must be positive for at least one split");
  }
  if (clips_min == 0) fail("clips_per_video must be >= 1");
  if (clips_max < clips_min) fail("clips_max must be >= clips_min");
  if (!(salient_fraction > 0.0 && salient_fraction <= 1.0)) {
    fail("salient_fraction must lie in (0, 1]");
  }
  if (salient_fraction * static_cast<double>(clips_min) < 1.0) {
    fail("salient_fraction * clips_per_video must be >= 1");
  }
  if (!(class_signal_strength > 0.0)) fail("class_signal_strength must be > 0");
  if (!(noise_sigma > 0.0)) fail("noise_sigma must be > 0");
  if (!(audio_visual_correlation >= 0.0 && audio_visual_correlation <= 1.0)) {
    fail("audio_visual_correlation must lie in [0, 1]");
  }
  if (!(saliency_share >= 0.0 && saliency_share <= 1.0)) {
    fail("saliency_share must lie in [0, 1]");
  }
  if (!(scene_sigma >= 0.0)) fail("scene_sigma must be >= 0");
  if (modalities.empty()) fail("modalities must not be empty");
  std::set<std::string> names;
  for (const auto& m : modalities) {
    if (m.name.empty() || m.dim == 0) fail("modality entries need a name and dim >= 1");
    if (!names.insert(m.name).second) fail("duplicate modality '" + m.name + "'");
  }
}

const std::vector<bool>& GeneratedDataset::saliency_mask(std::string_view video_id) const {
  auto it = masks.find(video_id);
  if (it == masks.end()) throw DataError("unknown video id '" + std::string(video_id) + "'");
  return it->second;
}

GeneratedDataset generate_dataset(const SynthConfig& cfg, const std::filesystem::path& dir,
                                  std::size_t workers) {
  cfg.check();
  std::filesystem::create_directories(dir / "features");
  const Geometry geometry = build_geometry(cfg);

  GeneratedDataset out;
  std::vector<ModalityDescriptor> descriptors;
  for (const auto& m : cfg.modalities) {
    const bool audio = is_audio(m);
    descriptors.push_back({m.name, m.dim, audio ? 2u : 1u, audio});
  }

  for (Split split : {Split::train, Split::test}) {
    const std::size_t per_class =
        split == Split::train ? cfg.train_videos_per_class : cfg.test_videos_per_class;
    const std::size_t count = per_class * cfg.num_classes;
    const std::uint64_t split_tag = split == Split::train ? 1 : 2;

    std::vector<VideoSpec> specs(count);
    std::vector<std::map<std::string, std::string, std::less<>>> paths(count);

    parallel_for(count, workers, [&](std::size_t n) {
      Rng rng(derive_seed(cfg.seed, split_tag, n));
      VideoSpec& spec = specs[n];
      spec.id = video_id(split, n);
      spec.label = n % cfg.num_classes;
      spec.num_clips = cfg.clips_min + rng.index(cfg.clips_max - cfg.clips_min + 1);
      const std::size_t L = spec.num_clips;
      const auto length = std::min<std::size_t>(
          L, static_cast<std::size_t>(std::ceil(cfg.salient_fraction * static_cast<double>(L) - 1e-9)));
      spec.segment = {segment_start(cfg, rng, L, length), length};
      auto salient = [&spec](std::size_t i) {
        return i >= spec.segment.start && i < spec.segment.start + spec.segment.length;
      };

      for (std::size_t m = 0; m < cfg.modalities.size(); ++m) {
        const auto& mod = cfg.modalities[m];
        const std::size_t d = mod.dim;
        Rng frng(derive_seed(cfg.seed, split_tag, n, 0xfea7, m));
        Vec scene(d);
        for (double& x : scene) x = cfg.scene_sigma * frng.normal();
        const Vec& mean = geometry.class_means[m][spec.label];
        auto centre = [&](std::size_t i) -> const Vec& { return salient(i) ? mean : scene; };

        std::vector<float> values(L * d);
        if (is_audio(mod)) {
          const double r = cfg.audio_visual_correlation;
          for (std::size_t i = 0; i < L; ++i) {
            const std::size_t last = std::min(L, i + 2);
            for (std::size_t k = 0; k < d; ++k) {
              double signal = 0.0;
              for (std::size_t w = i; w < last; ++w) signal += centre(w)[k];
              signal /= static_cast<double>(last - i);
              values[i * d + k] =
                  static_cast<float>(r * signal + (1.0 - r) * cfg.noise_sigma * frng.normal());
            }
          }
        } else {
          for (std::size_t i = 0; i < L; ++i) {
            const Vec& c = centre(i);
            for (std::size_t k = 0; k < d; ++k) {
              values[i * d + k] = static_cast<float>(c[k] + cfg.noise_sigma * frng.normal());
            }
          }
        }
        const std::string rel = "features/" + spec.id + "." + mod.name + ".scft";
        io::write_matrix_file(dir / rel, io::kFeatureMagic, L, d, values);
        paths[n].emplace(mod.name, rel);
      }
    });

    DatasetManifest manifest;
    manifest.dataset_id = cfg.dataset_id;
    manifest.split = split;
    manifest.label_space = LabelSpace::numbered(cfg.num_classes);
    manifest.modalities = descriptors;
    for (std::size_t n = 0; n < count; ++n) {
      VideoRecord v;
      v.id = specs[n].id;
      v.label = specs[n].label;
      v.num_clips = specs[n].num_clips;
      v.feature_paths = paths[n];
      manifest.videos.push_back(std::move(v));

      std::vector<bool> mask(specs[n].num_clips, false);
      for (std::size_t i = 0; i < specs[n].segment.length; ++i) {
        mask[specs[n].segment.start + i] = true;
      }
      out.masks.emplace(specs[n].id, std::move(mask));
      out.segments.emplace(specs[n].id, specs[n].segment);
    }
    const auto manifest_path =
        dir / (split == Split::train ? kTrainManifest : kTestManifest);
    write_manifest(manifest, manifest_path);
    write_masks(dir / (split == Split::train ? kTrainMasks : kTestMasks), manifest, out.masks);
    (split == Split::train ? out.train : out.test) = load_manifest(manifest_path);
  }
  return out;
}

std::map<std::string, std::vector<bool>, std::less<>> read_masks(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, std::vector<bool>, std::less<>> out;
  std::string id, bits;
  while (in >> id >> bits) {
    std::vector<bool> mask;
    for (char c : bits) {
      if (c != '0' && c != '1') throw DataError(path.string() + ": bad mask for '" + id + "'");
      mask.push_back(c == '1');
    }
    out.emplace(id, std::move(mask));
  }
  return out;
}

}  // namespace scsampler
