#pragma once

#include <torch/torch.h>

namespace inpaint_gan {

struct AttentionResult {
  /// Same shape as the input features.
  torch::Tensor output;
  /// [N, L, L] with L = D*H*W. Row f holds the weights a foreground location f assigns to every
  /// location; foreground columns are zero. Rows of background locations are zero.
  torch::Tensor weights;
};

/// Contextual attention over a feature grid.
///
/// `features` is [N, C, D, H, W]; `mask` is [N, 1, D, H, W] with 1 marking the foreground (hole).
/// Each location p owns the feature patch of `patch_size`^3 voxels starting `(patch_size - 1) / 2`
/// before p, zero padded at the border. For every foreground location f the cosine similarity
/// s(f, b) to each background patch b is scaled by `softmax_scale` and soft-maxed over b; the output
/// at f is the weighted sum of the background feature vectors. Background locations pass through.
///
/// Throws ValidationError when a sample has no background location or the patch exceeds the grid.
AttentionResult contextual_attention(const torch::Tensor& features, const torch::Tensor& mask, std::int64_t patch_size,
                                     double softmax_scale);

}  // namespace inpaint_gan
