#pragma once

#include <cstdint>
#include <vector>

#include "inpaint_gan/array3.hpp"
#include "inpaint_gan/volume_io.hpp"

namespace inpaint_gan {

/// Domain class codes used by the critics' auxiliary heads. Generators are only ever asked for
/// benign or malignant.
enum class DomainLabel : int { fake = 0, benign = 1, malignant = 2 };

DomainLabel to_domain_label(Malignancy m);
const char* to_string(DomainLabel label);
DomainLabel parse_domain_label(const std::string& text);  // "benign", "malignant", "1" or "2"

struct HuWindow {
  double low = -1000.0;
  double high = 400.0;
};

/// Noise drawn i.i.d. uniform on [low, high] inside the in-painting mask.
struct NoiseParams {
  float low = -1.0f;
  float high = 1.0f;
};

struct PipelineConfig {
  Vec3 target_spacing{1.0, 1.0, 2.0};
  Shape3 patch_shape{64, 64, 32};
  HuWindow hu_window;
  NoiseParams noise;
  std::uint64_t seed = 0;
};

void validate(const PipelineConfig& config);

/// A training example: `raw` is the real patch in [-1, 1], `masked` equals `raw` outside `mask`
/// and holds noise inside it.
struct PatchSample {
  Array3f raw;
  Array3f masked;
  Array3f mask;
  DomainLabel label = DomainLabel::benign;
  double diameter_mm = 0.0;
  bool synthetic = false;
};

/// Throws ValidationError when any PatchSample invariant fails.
void validate(const PatchSample& sample);

/// Resamples a nodule-centred patch at `config.target_spacing` by trilinear interpolation.
/// Sample points falling outside the source grid take `config.hu_window.low`.
Array3f extract_patch(const Volume& volume, const Vec3& center_mm, const PipelineConfig& config);

/// Affine window map low -> -1, high -> +1, clipped to [-1, 1].
Array3f normalize_hu(const Array3f& patch, const HuWindow& window);
float normalize_hu(float value, const HuWindow& window);

/// The continuous patch centre in voxel coordinates, ((X-1)/2, (Y-1)/2, (Z-1)/2).
Vec3 patch_center(const Shape3& shape);

/// 1 where the physical distance to the patch centre is <= diameter/2, else 0.
Array3f make_spherical_mask(double diameter_mm, const Vec3& spacing, const Shape3& shape);

Array3f apply_noise_mask(const Array3f& raw, const Array3f& mask, std::uint64_t seed, const NoiseParams& noise = {});

/// Constant label channel: benign -> 0, malignant -> 1.
Array3f make_label_map(DomainLabel label, const Shape3& shape);
float label_map_value(DomainLabel label);

/// Builds a complete sample from a real patch: spherical mask at `diameter_mm`, noise keyed by `seed`.
PatchSample make_sample(Array3f raw, DomainLabel label, double diameter_mm, const Vec3& spacing, std::uint64_t seed,
                        const NoiseParams& noise = {});

struct PhantomConfig {
  Shape3 shape{32, 32, 16};
  Vec3 spacing{1.0, 1.0, 2.0};
  HuWindow hu_window;
  /// Mask (annotated) diameters are drawn uniformly from this range for both classes.
  double mask_diameter_min_mm = 10.0;
  double mask_diameter_max_mm = 14.0;
  /// Blob diameter as a fraction of the mask diameter, per class.
  double benign_fraction_min = 0.40;
  double benign_fraction_max = 0.70;
  double malignant_fraction_min = 0.65;
  double malignant_fraction_max = 0.95;
  double background_hu = -800.0;
  double nodule_hu = 40.0;
  double noise_sigma_hu = 15.0;
};

struct PhantomSet {
  std::vector<PatchSample> samples;
  /// Generating diameter of each sample's blob (the mask diameter is `samples[i].diameter_mm`).
  std::vector<double> blob_diameters_mm;
};

/// Synthetic nodule patches. `benign_fraction` of the `n` samples (rounded) are benign: small blobs
/// with a sharp boundary; the rest are malignant: larger blobs with a lobulated, blurred boundary.
/// Sample order is a seeded shuffle of the two classes.
PhantomSet phantom_dataset(int n, double benign_fraction, std::uint64_t seed, const PhantomConfig& config = {});

/// The HU field of one phantom nodule patch, before normalisation. Used for fixture volumes.
Array3f phantom_hu_patch(DomainLabel label, double blob_diameter_mm, std::uint64_t seed, const PhantomConfig& config);

}  // namespace inpaint_gan
