#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "inpaint_gan/patch_pipeline.hpp"

namespace inpaint_gan {

/// One row of `manifest.csv`: `patch_file,label,diameter_mm,split[,synthetic]`.
struct ManifestRow {
  std::string patch_file;
  DomainLabel label = DomainLabel::benign;
  double diameter_mm = 0.0;
  std::string split;  ///< train, val or test
  bool synthetic = false;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(std::span<const ManifestRow> rows, const std::filesystem::path& path);

struct PatchDataset {
  std::vector<PatchSample> train;
  std::vector<PatchSample> val;
  std::vector<PatchSample> test;

  std::vector<PatchSample>& split(const std::string& name);
  const std::vector<PatchSample>& split(const std::string& name) const;
};

/// Loads `<dir>/manifest.csv` and every referenced patch. Masks are rebuilt from each row's diameter
/// at the patch's own spacing; mask noise is keyed by (`noise_seed`, patch file).
PatchDataset load_patch_dataset(const std::filesystem::path& dir, std::uint64_t noise_seed = 0);

/// Writes each sample's raw patch as `<dir>/<prefix>NNNNN.vol` and a manifest listing them.
void write_patch_dataset(const std::filesystem::path& dir, std::span<const PatchSample> samples,
                         std::span<const std::string> splits, const Vec3& spacing, const std::string& prefix = "patch_");

}  // namespace inpaint_gan
