#include "inpaint_gan/critics.hpp"

#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/tensor_bridge.hpp"

namespace inpaint_gan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

void validate(const CriticConfig& config) {
  if (config.base_channels < 1) throw ValidationError("critic base_channels must be >= 1");
  if (config.depth < 1) throw ValidationError("critic depth must be >= 1");
  if (config.local_crop_margin < 0) throw ValidationError("local_crop_margin must be >= 0");
  if (!config.input_shape.positive()) throw ValidationError("critic input_shape must be positive");
}

CriticImpl::CriticImpl(const CriticConfig& config) : config_(config) {
  validate(config);
  const int base = config.base_channels;
  trunk_ = nn::Sequential(nn::Conv3d(nn::Conv3dOptions(2, base, 3).padding(1)), nn::ELU());
  int channels = base;
  for (int level = 0; level < config.depth; ++level) {
    const int next = base << std::min(level + 1, 3);
    trunk_->push_back(nn::Conv3d(nn::Conv3dOptions(channels, next, 3).stride(2).padding(1)));
    trunk_->push_back(nn::ELU());
    channels = next;
  }
  register_module("trunk", trunk_);
  score_head_ = register_module("score_head", nn::Linear(channels, 1));
  class_head_ = register_module("class_head", nn::Linear(channels, 3));
}

CriticOutput CriticImpl::forward(const torch::Tensor& input, const torch::Tensor& label_map) {
  const auto& s = config_.input_shape;
  if (input.dim() != 5 || input.size(1) != 1 || input.size(2) != s.z || input.size(3) != s.y || input.size(4) != s.x) {
    throw ValidationError("critic input must be [N, 1, " + std::to_string(s.z) + ", " + std::to_string(s.y) + ", " +
                          std::to_string(s.x) + "]");
  }
  if (label_map.sizes() != input.sizes()) throw ValidationError("critic label map must match the input shape");
  auto features = trunk_->forward(torch::cat({input, label_map}, 1)).mean({2, 3, 4});
  return {score_head_(features).squeeze(1), class_head_(features)};
}

Critic make_critic(const CriticConfig& config, std::uint64_t seed) {
  torch::manual_seed(seed);
  return Critic(config);
}

Box mask_bounding_box(const Array3f& mask, int margin) {
  if (margin < 0) throw ValidationError("crop margin must be >= 0");
  const auto s = mask.shape();
  Box box{{s.x, s.y, s.z}, {-1, -1, -1}};
  for (std::int64_t k = 0; k < s.z; ++k) {
    for (std::int64_t j = 0; j < s.y; ++j) {
      for (std::int64_t i = 0; i < s.x; ++i) {
        if (mask(i, j, k) == 0.0f) continue;
        const std::array<std::int64_t, 3> p{i, j, k};
        for (int a = 0; a < 3; ++a) {
          box.lo[a] = std::min(box.lo[a], p[a]);
          box.hi[a] = std::max(box.hi[a], p[a]);
        }
      }
    }
  }
  if (box.hi[0] < 0) throw ValidationError("local crop needs a non-empty mask");
  const std::array<std::int64_t, 3> extent{s.x, s.y, s.z};
  for (int a = 0; a < 3; ++a) {
    box.lo[a] = std::max<std::int64_t>(0, box.lo[a] - margin);
    box.hi[a] = std::min<std::int64_t>(extent[a] - 1, box.hi[a] + margin);
  }
  return box;
}

std::vector<Box> mask_bounding_boxes(const torch::Tensor& mask, int margin) {
  if (mask.dim() != 5 || mask.size(1) != 1) throw ValidationError("mask must be [N, 1, Z, Y, X]");
  std::vector<Box> boxes;
  for (std::int64_t n = 0; n < mask.size(0); ++n) boxes.push_back(mask_bounding_box(from_tensor(mask[n]), margin));
  return boxes;
}

torch::Tensor crop_boxes(const torch::Tensor& patches, const std::vector<Box>& boxes, const Shape3& shape) {
  if (patches.dim() != 5 || static_cast<std::size_t>(patches.size(0)) != boxes.size()) {
    throw ValidationError("crop_boxes needs one box per sample");
  }
  std::vector<torch::Tensor> crops;
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    const auto& b = boxes[n];
    using torch::indexing::Slice;
    auto crop = patches.index({static_cast<std::int64_t>(n), Slice(), Slice(b.lo[2], b.hi[2] + 1),
                               Slice(b.lo[1], b.hi[1] + 1), Slice(b.lo[0], b.hi[0] + 1)})
                    .unsqueeze(0);
    const auto e = b.extent();
    if (!(e == shape)) {
      crop = F::interpolate(crop, F::InterpolateFuncOptions()
                                      .size(std::vector<std::int64_t>{shape.z, shape.y, shape.x})
                                      .mode(torch::kTrilinear)
                                      .align_corners(true));
    }
    crops.push_back(crop);
  }
  return torch::cat(crops, 0);
}

torch::Tensor crop_local(const torch::Tensor& patch, const torch::Tensor& mask, int margin, const Shape3& shape) {
  return crop_boxes(patch, mask_bounding_boxes(mask, margin), shape);
}

}  // namespace inpaint_gan
