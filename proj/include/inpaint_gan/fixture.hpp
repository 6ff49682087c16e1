#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "inpaint_gan/dataset.hpp"
#include "inpaint_gan/patch_pipeline.hpp"
#include "inpaint_gan/volume_io.hpp"

namespace inpaint_gan {

/// Cuts one normalised patch per annotation out of `<volumes_dir>/<volume_id>.vol` and writes them with
/// a manifest under `out_dir`. Labels come from the rating consensus, the mask diameter from the
/// annotation. `splits` maps volume ids to train/val/test; unlisted volumes are assigned by a seeded
/// hash of their id (8:1:1).
std::vector<ManifestRow> extract_patch_dataset(const std::vector<NoduleAnnotation>& annotations,
                                               const std::filesystem::path& volumes_dir,
                                               const std::map<std::string, std::string>& splits,
                                               const PipelineConfig& config, const std::filesystem::path& out_dir);

/// `volume_id,split` table.
std::map<std::string, std::string> read_splits(const std::filesystem::path& path);
void write_splits(const std::map<std::string, std::string>& splits, const std::filesystem::path& path);

struct FixtureConfig {
  int n_train = 240;
  int n_val = 30;
  int n_test = 30;
  double benign_fraction = 0.8;
  /// Nodules are tiled into volumes of this many patches along x and y.
  int tiles_x = 5;
  int tiles_y = 2;
  PhantomConfig phantom;
};

struct FixturePaths {
  std::filesystem::path root;
  std::filesystem::path volumes;      ///< `<id>.vol` CT-like volumes in HU
  std::filesystem::path annotations;  ///< annotations.csv
  std::filesystem::path splits;       ///< splits.csv
  std::filesystem::path patches;      ///< extracted patch dataset with manifest.csv
};

/// Pipeline settings that reproduce the fixture's own patches from its volumes.
PipelineConfig fixture_pipeline_config(const FixtureConfig& config = {});

/// Writes a complete phantom dataset: volumes, annotations, split table and the extracted patches.
/// Each split holds its own class mix at `benign_fraction`; output bytes depend only on (seed, config).
FixturePaths make_phantom_fixture(const std::filesystem::path& out_dir, std::uint64_t seed,
                                  const FixtureConfig& config = {});

}  // namespace inpaint_gan
