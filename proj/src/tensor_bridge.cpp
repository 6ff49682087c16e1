#include "inpaint_gan/tensor_bridge.hpp"

#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

torch::Tensor to_tensor(const Array3f& array) {
  const auto& s = array.shape();
  auto t = torch::empty({s.z, s.y, s.x}, torch::kFloat32);
  std::copy(array.storage().begin(), array.storage().end(), t.data_ptr<float>());
  return t;
}

Array3f from_tensor(const torch::Tensor& tensor) {
  auto t = tensor.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  while (t.dim() > 3 && t.size(0) == 1) t = t.squeeze(0);
  if (t.dim() != 3) throw ValidationError("expected a 3D tensor, got " + std::to_string(t.dim()) + " dims");
  const Shape3 shape{t.size(2), t.size(1), t.size(0)};
  const float* p = t.data_ptr<float>();
  return Array3f(shape, std::vector<float>(p, p + shape.count()));
}

PatchBatch make_batch(std::span<const PatchSample* const> samples) {
  if (samples.empty()) throw ValidationError("cannot batch an empty sample list");
  const auto shape = samples.front()->raw.shape();
  std::vector<torch::Tensor> raw, masked, mask;
  std::vector<std::int64_t> labels;
  for (const auto* s : samples) {
    if (!(s->raw.shape() == shape)) throw ValidationError("all samples in a batch must share one patch shape");
    raw.push_back(to_tensor(s->raw));
    masked.push_back(to_tensor(s->masked));
    mask.push_back(to_tensor(s->mask));
    labels.push_back(static_cast<std::int64_t>(s->label));
  }
  PatchBatch b;
  b.raw = torch::stack(raw).unsqueeze(1);
  b.masked = torch::stack(masked).unsqueeze(1);
  b.mask = torch::stack(mask).unsqueeze(1);
  b.labels = torch::tensor(labels, torch::kInt64);
  b.label_map = label_maps_like(b.labels, b.raw);
  return b;
}

PatchBatch make_batch(std::span<const PatchSample> samples) {
  std::vector<const PatchSample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return make_batch(std::span<const PatchSample* const>(ptrs));
}

torch::Tensor label_maps_like(const torch::Tensor& labels, const torch::Tensor& like) {
  if ((labels < 1).any().item<bool>() || (labels > 2).any().item<bool>()) {
    throw ValidationError("label maps need benign (1) or malignant (2) targets");
  }
  // benign -> 0, malignant -> 1
  auto values = (labels - 1).to(like.scalar_type()).view({-1, 1, 1, 1, 1});
  return values.expand({like.size(0), 1, like.size(2), like.size(3), like.size(4)}).contiguous();
}

}  // namespace inpaint_gan
