#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "inpaint_gan/array3.hpp"

namespace inpaint_gan {

enum class CriticKind { local, global };

struct CriticConfig {
  int base_channels = 32;
  int depth = 3;
  CriticKind kind = CriticKind::global;
  int local_crop_margin = 2;
  /// Expected input grid: the patch shape for the global critic, the resampled crop shape for the local one.
  Shape3 input_shape{64, 64, 32};
};

void validate(const CriticConfig& config);

struct CriticOutput {
  /// [N] unbounded Wasserstein scores.
  torch::Tensor wscore;
  /// [N, 3] logits over {fake, benign, malignant}.
  torch::Tensor class_logits;
};

/// Strided 3D convolution trunk with two linear heads on the spatially pooled features. No
/// normalisation layers, so per-sample input gradients stay independent across the batch.
class CriticImpl : public torch::nn::Module {
 public:
  explicit CriticImpl(const CriticConfig& config);

  const CriticConfig& config() const { return config_; }

  /// `input` and `label_map` are [N, 1, Z, Y, X] on the configured input grid.
  CriticOutput forward(const torch::Tensor& input, const torch::Tensor& label_map);

  torch::nn::Linear& score_head() { return score_head_; }
  torch::nn::Linear& class_head() { return class_head_; }

 private:
  CriticConfig config_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Linear score_head_{nullptr};
  torch::nn::Linear class_head_{nullptr};
};
TORCH_MODULE(Critic);

Critic make_critic(const CriticConfig& config, std::uint64_t seed);

/// Inclusive voxel bounds, ordered (x, y, z).
struct Box {
  std::array<std::int64_t, 3> lo{};
  std::array<std::int64_t, 3> hi{};

  Shape3 extent() const { return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}; }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Bounding box of the nonzero mask voxels grown by `margin` and clipped to the grid.
/// Throws ValidationError for an empty mask.
Box mask_bounding_box(const Array3f& mask, int margin);

/// One box per sample of a [N, 1, Z, Y, X] mask.
std::vector<Box> mask_bounding_boxes(const torch::Tensor& mask, int margin);

/// Crops each sample to its box and resamples (trilinear, corner-aligned) to `shape`. Differentiable.
torch::Tensor crop_boxes(const torch::Tensor& patches, const std::vector<Box>& boxes, const Shape3& shape);

/// crop_boxes(patch, mask_bounding_boxes(mask, margin), shape).
torch::Tensor crop_local(const torch::Tensor& patch, const torch::Tensor& mask, int margin, const Shape3& shape);

}  // namespace inpaint_gan
