#include "inpaint_gan/patch_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/seeding.hpp"

namespace inpaint_gan {

DomainLabel to_domain_label(Malignancy m) {
  return m == Malignancy::malignant ? DomainLabel::malignant : DomainLabel::benign;
}

const char* to_string(DomainLabel label) {
  switch (label) {
    case DomainLabel::fake:
      return "fake";
    case DomainLabel::benign:
      return "benign";
    case DomainLabel::malignant:
      return "malignant";
  }
  return "?";
}

DomainLabel parse_domain_label(const std::string& text) {
  if (text == "benign" || text == "1") return DomainLabel::benign;
  if (text == "malignant" || text == "2") return DomainLabel::malignant;
  throw ValidationError("unknown class label '" + text + "' (expected benign or malignant)");
}

void validate(const PipelineConfig& config) {
  if (!config.patch_shape.positive()) throw ValidationError("patch_shape must be positive");
  if (!(config.target_spacing.x > 0 && config.target_spacing.y > 0 && config.target_spacing.z > 0)) {
    throw ValidationError("target_spacing must be positive");
  }
  if (!(config.hu_window.low < config.hu_window.high)) throw ValidationError("hu_window.low must be < hu_window.high");
  if (!(config.noise.low < config.noise.high)) throw ValidationError("noise range must satisfy low < high");
}

void validate(const PatchSample& s) {
  const auto shape = s.raw.shape();
  if (!shape.positive()) throw ValidationError("sample has an empty raw patch");
  if (!(s.masked.shape() == shape) || !(s.mask.shape() == shape)) {
    throw ValidationError("raw, masked and mask must share one shape");
  }
  if (s.label != DomainLabel::benign && s.label != DomainLabel::malignant) {
    throw ValidationError("sample label must be benign or malignant");
  }
  for (std::size_t i = 0; i < s.raw.size(); ++i) {
    const float r = s.raw.storage()[i];
    const float m = s.mask.storage()[i];
    if (!(r >= -1.0f && r <= 1.0f)) throw ValidationError("raw values must lie in [-1, 1]");
    if (m != 0.0f && m != 1.0f) throw ValidationError("mask values must be 0 or 1");
    if (m == 0.0f && s.masked.storage()[i] != r) throw ValidationError("masked differs from raw outside the mask");
    if (!std::isfinite(s.masked.storage()[i])) throw ValidationError("masked patch has non-finite values");
  }
}

Vec3 patch_center(const Shape3& shape) {
  return {(static_cast<double>(shape.x) - 1.0) / 2.0, (static_cast<double>(shape.y) - 1.0) / 2.0,
          (static_cast<double>(shape.z) - 1.0) / 2.0};
}

Array3f extract_patch(const Volume& volume, const Vec3& center_mm, const PipelineConfig& config) {
  validate(config);
  validate_volume(volume);
  const auto dims = volume.voxels.shape();
  const Vec3 c{(center_mm.x - volume.origin.x) / volume.spacing.x, (center_mm.y - volume.origin.y) / volume.spacing.y,
               (center_mm.z - volume.origin.z) / volume.spacing.z};
  auto inside = [](double v, std::int64_t n) { return v >= 0.0 && v <= static_cast<double>(n - 1); };
  if (!inside(c.x, dims.x) || !inside(c.y, dims.y) || !inside(c.z, dims.z)) {
    throw ValidationError("patch center lies outside the volume");
  }

  const Vec3 ratio{config.target_spacing.x / volume.spacing.x, config.target_spacing.y / volume.spacing.y,
                   config.target_spacing.z / volume.spacing.z};
  const auto shape = config.patch_shape;
  const auto pad = static_cast<float>(config.hu_window.low);

  // Per-axis source coordinate -> (lower index, upper index, weight of upper), or nullopt when outside.
  struct Tap {
    std::int64_t lo = 0, hi = 0;
    double t = 0.0;
    bool valid = false;
  };
  auto taps = [&](std::int64_t n, double center, double r, std::int64_t extent) {
    std::vector<Tap> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const double src = center + (static_cast<double>(i) - (static_cast<double>(n) - 1.0) / 2.0) * r;
      Tap tap;
      if (inside(src, extent)) {
        tap.valid = true;
        tap.lo = static_cast<std::int64_t>(std::floor(src));
        tap.t = src - static_cast<double>(tap.lo);
        tap.hi = std::min(tap.lo + 1, extent - 1);
        if (tap.hi == tap.lo) tap.t = 0.0;
      }
      out[static_cast<std::size_t>(i)] = tap;
    }
    return out;
  };
  const auto tx = taps(shape.x, c.x, ratio.x, dims.x);
  const auto ty = taps(shape.y, c.y, ratio.y, dims.y);
  const auto tz = taps(shape.z, c.z, ratio.z, dims.z);

  const auto& v = volume.voxels;
  auto lerp = [](double a, double b, double t) { return t == 0.0 ? a : a * (1.0 - t) + b * t; };
  Array3f out(shape, pad);
  for (std::int64_t k = 0; k < shape.z; ++k) {
    const auto& zk = tz[static_cast<std::size_t>(k)];
    if (!zk.valid) continue;
    for (std::int64_t j = 0; j < shape.y; ++j) {
      const auto& yj = ty[static_cast<std::size_t>(j)];
      if (!yj.valid) continue;
      for (std::int64_t i = 0; i < shape.x; ++i) {
        const auto& xi = tx[static_cast<std::size_t>(i)];
        if (!xi.valid) continue;
        auto row = [&](std::int64_t y, std::int64_t z) { return lerp(v(xi.lo, y, z), v(xi.hi, y, z), xi.t); };
        auto plane = [&](std::int64_t z) { return lerp(row(yj.lo, z), row(yj.hi, z), yj.t); };
        out(i, j, k) = static_cast<float>(lerp(plane(zk.lo), plane(zk.hi), zk.t));
      }
    }
  }
  return out;
}

float normalize_hu(float value, const HuWindow& window) {
  if (!(window.low < window.high)) throw ValidationError("degenerate HU window");
  const double mapped = -1.0 + 2.0 * (static_cast<double>(value) - window.low) / (window.high - window.low);
  return static_cast<float>(std::clamp(mapped, -1.0, 1.0));
}

Array3f normalize_hu(const Array3f& patch, const HuWindow& window) {
  if (!(window.low < window.high)) throw ValidationError("degenerate HU window");
  Array3f out(patch.shape());
  std::transform(patch.storage().begin(), patch.storage().end(), out.storage().begin(),
                 [&](float v) { return normalize_hu(v, window); });
  return out;
}

Array3f make_spherical_mask(double diameter_mm, const Vec3& spacing, const Shape3& shape) {
  if (!(diameter_mm >= 0.0)) throw ValidationError("mask diameter must be >= 0");
  if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0)) throw ValidationError("mask spacing must be positive");
  if (!shape.positive()) throw ValidationError("mask shape must be positive");
  const Vec3 c = patch_center(shape);
  const double r2 = diameter_mm * diameter_mm / 4.0;
  Array3f mask(shape);
  for (std::int64_t k = 0; k < shape.z; ++k) {
    const double dz = (static_cast<double>(k) - c.z) * spacing.z;
    for (std::int64_t j = 0; j < shape.y; ++j) {
      const double dy = (static_cast<double>(j) - c.y) * spacing.y;
      for (std::int64_t i = 0; i < shape.x; ++i) {
        const double dx = (static_cast<double>(i) - c.x) * spacing.x;
        if (dx * dx + dy * dy + dz * dz <= r2) mask(i, j, k) = 1.0f;
      }
    }
  }
  return mask;
}

Array3f apply_noise_mask(const Array3f& raw, const Array3f& mask, std::uint64_t seed, const NoiseParams& noise) {
  if (!(raw.shape() == mask.shape())) {
    throw ValidationError("apply_noise_mask: raw " + to_string(raw.shape()) + " and mask " + to_string(mask.shape()) +
                          " differ in shape");
  }
  if (!(noise.low < noise.high)) throw ValidationError("noise range must satisfy low < high");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uniform(noise.low, noise.high);
  Array3f out = raw;
  auto& values = out.storage();
  const auto& m = mask.storage();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (m[i] != 0.0f) values[i] = uniform(rng);
  }
  return out;
}

float label_map_value(DomainLabel label) {
  switch (label) {
    case DomainLabel::benign:
      return 0.0f;
    case DomainLabel::malignant:
      return 1.0f;
    default:
      throw ValidationError("label map requires a benign or malignant target");
  }
}

Array3f make_label_map(DomainLabel label, const Shape3& shape) { return Array3f(shape, label_map_value(label)); }

PatchSample make_sample(Array3f raw, DomainLabel label, double diameter_mm, const Vec3& spacing, std::uint64_t seed,
                        const NoiseParams& noise) {
  PatchSample s;
  s.mask = make_spherical_mask(diameter_mm, spacing, raw.shape());
  s.masked = apply_noise_mask(raw, s.mask, seed, noise);
  s.raw = std::move(raw);
  s.label = label;
  s.diameter_mm = diameter_mm;
  return s;
}

Array3f phantom_hu_patch(DomainLabel label, double blob_diameter_mm, std::uint64_t seed, const PhantomConfig& config) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  const auto shape = config.shape;
  const Vec3 c = patch_center(shape);
  const Vec3 sp = config.spacing;

  // Smooth background texture.
  const double f1 = 0.5 + unit(rng), f2 = 0.5 + unit(rng), f3 = 0.5 + unit(rng);
  const double p1 = two_pi * unit(rng), p2 = two_pi * unit(rng), p3 = two_pi * unit(rng);

  // Lobulation of malignant boundaries: a few low-order angular modes.
  struct Mode {
    int m_az, m_el;
    double phase_az, phase_el, amp;
  };
  std::vector<Mode> modes;
  const bool malignant = label == DomainLabel::malignant;
  if (malignant) {
    for (int m = 0; m < 4; ++m) {
      modes.push_back({2 + static_cast<int>(unit(rng) * 4), 1 + static_cast<int>(unit(rng) * 3), two_pi * unit(rng),
                       two_pi * unit(rng), 0.06 + 0.06 * unit(rng)});
    }
  }
  const double edge_mm = malignant ? 1.0 : 0.3;
  const double radius = blob_diameter_mm / 2.0;

  Array3f hu(shape);
  for (std::int64_t k = 0; k < shape.z; ++k) {
    for (std::int64_t j = 0; j < shape.y; ++j) {
      for (std::int64_t i = 0; i < shape.x; ++i) {
        const double bg =
            config.background_hu +
            40.0 * std::sin(two_pi * f1 * static_cast<double>(i) / static_cast<double>(shape.x) + p1) *
                std::sin(two_pi * f2 * static_cast<double>(j) / static_cast<double>(shape.y) + p2) +
            30.0 * std::cos(two_pi * f3 * static_cast<double>(k) / static_cast<double>(shape.z) + p3);
        const double dx = (static_cast<double>(i) - c.x) * sp.x;
        const double dy = (static_cast<double>(j) - c.y) * sp.y;
        const double dz = (static_cast<double>(k) - c.z) * sp.z;
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        double local_radius = radius;
        if (malignant && r > 0.0) {
          const double az = std::atan2(dy, dx);
          const double el = std::acos(std::clamp(dz / r, -1.0, 1.0));
          double lobes = 0.0;
          for (const auto& m : modes) lobes += m.amp * std::cos(m.m_az * az + m.phase_az) * std::sin(m.m_el * el + m.phase_el);
          local_radius *= 1.0 + lobes;
        }
        const double inside = 1.0 / (1.0 + std::exp(-(local_radius - r) / edge_mm));
        hu(i, j, k) = static_cast<float>(bg + (config.nodule_hu - bg) * inside + config.noise_sigma_hu * gauss(rng));
      }
    }
  }
  return hu;
}

PhantomSet phantom_dataset(int n, double benign_fraction, std::uint64_t seed, const PhantomConfig& config) {
  if (n < 1) throw ValidationError("phantom_dataset needs n >= 1");
  if (!(benign_fraction > 0.0 && benign_fraction < 1.0)) throw ValidationError("class ratio must lie in (0, 1)");
  if (!config.shape.positive()) throw ValidationError("phantom shape must be positive");

  const int n_benign = static_cast<int>(std::lround(benign_fraction * n));
  std::vector<DomainLabel> labels(static_cast<std::size_t>(n), DomainLabel::malignant);
  std::fill_n(labels.begin(), n_benign, DomainLabel::benign);
  std::mt19937_64 order_rng(derive_seed(seed, "phantom-order"));
  std::shuffle(labels.begin(), labels.end(), order_rng);

  PhantomSet set;
  set.samples.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::mt19937_64 rng(derive_seed(seed, "phantom-geometry", i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double mask_d =
        config.mask_diameter_min_mm + (config.mask_diameter_max_mm - config.mask_diameter_min_mm) * unit(rng);
    const bool malignant = labels[i] == DomainLabel::malignant;
    const double lo = malignant ? config.malignant_fraction_min : config.benign_fraction_min;
    const double hi = malignant ? config.malignant_fraction_max : config.benign_fraction_max;
    const double blob_d = mask_d * (lo + (hi - lo) * unit(rng));

    auto raw = normalize_hu(phantom_hu_patch(labels[i], blob_d, derive_seed(seed, "phantom-texture", i), config),
                            config.hu_window);
    set.samples.push_back(
        make_sample(std::move(raw), labels[i], mask_d, config.spacing, derive_seed(seed, "phantom-noise", i)));
    set.blob_diameters_mm.push_back(blob_d);
  }
  return set;
}

}  // namespace inpaint_gan
