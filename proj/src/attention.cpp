#include "inpaint_gan/attention.hpp"

#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

namespace F = torch::nn::functional;

AttentionResult contextual_attention(const torch::Tensor& features, const torch::Tensor& mask, std::int64_t patch_size,
                                     double softmax_scale) {
  if (features.dim() != 5) throw ValidationError("contextual_attention expects [N, C, D, H, W] features");
  const auto n = features.size(0), c = features.size(1);
  const auto d = features.size(2), h = features.size(3), w = features.size(4);
  if (mask.dim() != 5 || mask.size(0) != n || mask.size(1) != 1 || mask.size(2) != d || mask.size(3) != h ||
      mask.size(4) != w) {
    throw ValidationError("attention mask must be [N, 1, D, H, W] matching the features");
  }
  if (patch_size < 1) throw ValidationError("attention patch size must be >= 1");
  if (patch_size > d || patch_size > h || patch_size > w) {
    throw ValidationError("attention patch size " + std::to_string(patch_size) + " exceeds the feature grid");
  }
  const auto locations = d * h * w;
  auto foreground = (mask.reshape({n, locations}) > 0.5);
  auto background = foreground.logical_not();
  if ((background.sum(1) == 0).any().item<bool>()) {
    throw ValidationError("contextual_attention needs at least one background location per sample");
  }

  const auto lo = (patch_size - 1) / 2;
  const auto hi = patch_size - 1 - lo;
  auto padded = F::pad(features, F::PadFuncOptions({lo, hi, lo, hi, lo, hi}));
  // [N, C, D, H, W, k, k, k] -> [N, L, C*k^3]
  auto patches = padded.unfold(2, patch_size, 1).unfold(3, patch_size, 1).unfold(4, patch_size, 1);
  patches = patches.permute({0, 2, 3, 4, 1, 5, 6, 7}).reshape({n, locations, -1});
  auto unit = patches / patches.norm(2, -1, true).clamp_min(1e-8);
  auto similarity = torch::bmm(unit, unit.transpose(1, 2));

  auto logits = (similarity * softmax_scale).masked_fill(foreground.unsqueeze(1), -std::numeric_limits<double>::infinity());
  auto weights = torch::softmax(logits, -1) * foreground.unsqueeze(2).to(features.scalar_type());

  auto flat = features.reshape({n, c, locations}).transpose(1, 2);
  auto attended = torch::bmm(weights, flat);
  auto out = torch::where(foreground.unsqueeze(2), attended, flat);
  return {out.transpose(1, 2).reshape({n, c, d, h, w}), weights};
}

}  // namespace inpaint_gan
