#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "inpaint_gan/array3.hpp"

namespace inpaint_gan {

/// A CT volume: voxel intensities (HU) with physical spacing and origin in mm.
struct Volume {
  Array3f voxels;
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  friend bool operator==(const Volume&, const Volume&) = default;
};

/// Throws ValidationError unless the volume is non-empty, finite and has strictly positive spacing.
void validate_volume(const Volume& volume);

/// Reads a `.vol` container: one JSON header line followed by little-endian f32 voxels, x fastest.
Volume load_volume(const std::filesystem::path& path);

/// Writes a `.vol` container. Output is byte-deterministic for a given volume.
void save_volume(const Volume& volume, const std::filesystem::path& path);

/// One annotated nodule. `center_mm` is in world coordinates.
struct NoduleAnnotation {
  std::string source_volume_id;
  Vec3 center_mm;
  double diameter_mm = 0.0;
  std::vector<int> scores;

  friend bool operator==(const NoduleAnnotation&, const NoduleAnnotation&) = default;
};

/// Parses the annotation table `volume_id,cx_mm,cy_mm,cz_mm,diameter_mm,scores`.
/// All bad rows are collected and reported together in one ValidationError, each with its line number.
std::vector<NoduleAnnotation> parse_annotations(const std::filesystem::path& path);

void write_annotations(std::span<const NoduleAnnotation> annotations, const std::filesystem::path& path);

enum class Malignancy { benign, malignant };

/// Malignant iff strictly more than half of the ratings are >= 4. Ties are benign.
Malignancy consensus_malignancy(std::span<const int> scores);

}  // namespace inpaint_gan
