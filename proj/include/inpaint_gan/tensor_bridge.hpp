#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "inpaint_gan/array3.hpp"
#include "inpaint_gan/patch_pipeline.hpp"

namespace inpaint_gan {

/// Copies into a float tensor of shape [Z, Y, X] (x stays the fastest-varying index).
torch::Tensor to_tensor(const Array3f& array);

/// Inverse of to_tensor. Leading singleton dimensions are accepted.
Array3f from_tensor(const torch::Tensor& tensor);

/// Network-ready view of a list of samples. Spatial tensors are [N, 1, Z, Y, X];
/// `labels` holds DomainLabel codes as int64.
struct PatchBatch {
  torch::Tensor raw;
  torch::Tensor masked;
  torch::Tensor mask;
  torch::Tensor label_map;
  torch::Tensor labels;

  std::int64_t size() const { return raw.size(0); }
};

PatchBatch make_batch(std::span<const PatchSample* const> samples);
PatchBatch make_batch(std::span<const PatchSample> samples);

/// Constant label channels [N, 1, Z, Y, X] for the given DomainLabel codes.
torch::Tensor label_maps_like(const torch::Tensor& labels, const torch::Tensor& like);

}  // namespace inpaint_gan
