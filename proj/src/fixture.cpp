#include "inpaint_gan/fixture.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/seeding.hpp"

namespace inpaint_gan {

namespace fs = std::filesystem;

std::map<std::string, std::string> read_splits(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split table " + path.string());
  std::string line;
  if (!std::getline(in, line) || (line != "volume_id,split" && line != "volume_id,split\r")) {
    throw FormatError("split table header must be volume_id,split");
  }
  std::map<std::string, std::string> out;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("split table row " + std::to_string(number) + " has no comma");
    auto split = line.substr(comma + 1);
    if (split != "train" && split != "val" && split != "test") {
      throw FormatError("split table row " + std::to_string(number) + ": split must be train, val or test");
    }
    out[line.substr(0, comma)] = split;
  }
  return out;
}

void write_splits(const std::map<std::string, std::string>& splits, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write split table " + path.string());
  out << "volume_id,split\n";
  for (const auto& [id, split] : splits) out << id << ',' << split << '\n';
  if (!out) throw IoError("failed writing split table " + path.string());
}

std::vector<ManifestRow> extract_patch_dataset(const std::vector<NoduleAnnotation>& annotations,
                                               const fs::path& volumes_dir,
                                               const std::map<std::string, std::string>& splits,
                                               const PipelineConfig& config, const fs::path& out_dir) {
  validate(config);
  if (annotations.empty()) throw ValidationError("no annotations to extract");
  for (const auto& a : annotations) {
    if (!fs::exists(volumes_dir / (a.source_volume_id + ".vol"))) {
      throw ValidationError("annotation references missing volume " + a.source_volume_id);
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string());

  std::vector<ManifestRow> rows;
  std::string loaded_id;
  Volume volume;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    if (a.source_volume_id != loaded_id) {
      volume = load_volume(volumes_dir / (a.source_volume_id + ".vol"));
      loaded_id = a.source_volume_id;
    }
    const auto patch = normalize_hu(extract_patch(volume, a.center_mm, config), config.hu_window);
    char name[64];
    std::snprintf(name, sizeof(name), "patch_%05zu.vol", i);
    save_volume(Volume{patch, config.target_spacing, {0.0, 0.0, 0.0}}, out_dir / name);

    std::string split;
    if (auto it = splits.find(a.source_volume_id); it != splits.end()) {
      split = it->second;
    } else {
      const auto bucket = derive_seed(config.seed, "split-" + a.source_volume_id) % 10;
      split = bucket < 8 ? "train" : (bucket == 8 ? "val" : "test");
    }
    rows.push_back({name, to_domain_label(consensus_malignancy(a.scores)), a.diameter_mm, split, false});
  }
  write_manifest(rows, out_dir / "manifest.csv");
  return rows;
}

PipelineConfig fixture_pipeline_config(const FixtureConfig& config) {
  PipelineConfig p;
  p.target_spacing = config.phantom.spacing;
  p.patch_shape = config.phantom.shape;
  p.hu_window = config.phantom.hu_window;
  return p;
}

namespace {

// Four ratings whose >= 4 consensus agrees with the intended class.
std::vector<int> consensus_scores(DomainLabel label, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> low(1, 3), high(4, 5), n_high_benign(0, 2), n_high_malignant(3, 4);
  const int n_high = label == DomainLabel::malignant ? n_high_malignant(rng) : n_high_benign(rng);
  std::vector<int> scores;
  for (int r = 0; r < 4; ++r) scores.push_back(r < n_high ? high(rng) : low(rng));
  std::shuffle(scores.begin(), scores.end(), rng);
  return scores;
}

}  // namespace

FixturePaths make_phantom_fixture(const fs::path& out_dir, std::uint64_t seed, const FixtureConfig& config) {
  if (config.n_train < 1 || config.n_val < 1 || config.n_test < 1) throw ValidationError("fixture splits must be non-empty");
  if (config.tiles_x < 1 || config.tiles_y < 1) throw ValidationError("fixture tiling must be positive");
  FixturePaths paths{out_dir, out_dir / "volumes", out_dir / "annotations.csv", out_dir / "splits.csv",
                     out_dir / "patches"};
  std::error_code ec;
  fs::create_directories(paths.volumes, ec);
  if (ec) throw IoError("cannot create fixture directory " + paths.volumes.string());

  const auto& ph = config.phantom;
  const auto tile = ph.shape;
  const Shape3 volume_shape{tile.x * config.tiles_x, tile.y * config.tiles_y, tile.z};
  const Vec3 origin{-100.0, -50.0, 20.0};
  const Vec3 centre = patch_center(tile);
  const int per_volume = config.tiles_x * config.tiles_y;

  std::vector<NoduleAnnotation> annotations;
  std::map<std::string, std::string> splits;
  int volume_index = 0;
  const std::pair<const char*, int> parts[] = {{"train", config.n_train}, {"val", config.n_val}, {"test", config.n_test}};
  for (const auto& [split, count] : parts) {
    const auto split_seed = derive_seed(seed, std::string("fixture-") + split);
    const auto set = phantom_dataset(count, config.benign_fraction, split_seed, ph);
    for (int first = 0; first < count; first += per_volume, ++volume_index) {
      char id[32];
      std::snprintf(id, sizeof(id), "vol_%03d", volume_index);
      Volume volume{Array3f(volume_shape, static_cast<float>(ph.background_hu)), ph.spacing, origin};
      for (int t = 0; t < per_volume && first + t < count; ++t) {
        const auto i = static_cast<std::size_t>(first + t);
        const auto& sample = set.samples[i];
        const auto hu = phantom_hu_patch(sample.label, set.blob_diameters_mm[i],
                                         derive_seed(split_seed, "phantom-texture", i), ph);
        const std::int64_t ox = tile.x * (t % config.tiles_x), oy = tile.y * (t / config.tiles_x);
        for (std::int64_t k = 0; k < tile.z; ++k)
          for (std::int64_t j = 0; j < tile.y; ++j)
            for (std::int64_t x = 0; x < tile.x; ++x) volume.voxels(ox + x, oy + j, k) = hu(x, j, k);

        std::mt19937_64 rng(derive_seed(split_seed, "fixture-scores", i));
        annotations.push_back({id,
                               {origin.x + (static_cast<double>(ox) + centre.x) * ph.spacing.x,
                                origin.y + (static_cast<double>(oy) + centre.y) * ph.spacing.y,
                                origin.z + centre.z * ph.spacing.z},
                               sample.diameter_mm,
                               consensus_scores(sample.label, rng)});
      }
      save_volume(volume, paths.volumes / (std::string(id) + ".vol"));
      splits[id] = split;
    }
  }
  write_annotations(annotations, paths.annotations);
  write_splits(splits, paths.splits);
  // Extract through the public path so the fixture's patches are exactly what extract-patches yields.
  extract_patch_dataset(parse_annotations(paths.annotations), paths.volumes, splits, fixture_pipeline_config(config),
                        paths.patches);
  return paths;
}

}  // namespace inpaint_gan
