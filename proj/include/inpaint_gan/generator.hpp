#pragma once

#include <cstdint>
#include <functional>

#include <torch/torch.h>

namespace inpaint_gan {

struct GeneratorConfig {
  int base_channels = 32;
  /// Number of stride-2 encoder levels.
  int depth = 3;
  int attention_patch_size = 3;
  double attention_softmax_scale = 10.0;
  bool use_attention = true;
};

void validate(const GeneratorConfig& config);

/// Encoder (strided convolutions) -> dilated bottleneck -> decoder (trilinear upsampling + convolution,
/// with encoder skips). The optional attention branch runs contextual attention at the bottleneck.
/// Output is tanh-bounded to [-1, 1].
class HourglassImpl : public torch::nn::Module {
 public:
  HourglassImpl(int in_channels, const GeneratorConfig& config, bool attention_branch);

  /// `mask` ([N, 1, Z, Y, X]) is required when the attention branch exists.
  torch::Tensor forward(const torch::Tensor& input, const torch::Tensor& mask = {});

 private:
  torch::Tensor attend(const torch::Tensor& features, const torch::Tensor& mask);

  GeneratorConfig config_;
  bool attention_branch_;
  torch::nn::Sequential stem_{nullptr};
  torch::nn::ModuleList down_{nullptr};
  torch::nn::Sequential bottleneck_{nullptr};
  torch::nn::Conv3d attention_in_{nullptr};
  torch::nn::Conv3d attention_out_{nullptr};
  torch::nn::Conv3d merge_{nullptr};
  torch::nn::ModuleList up_{nullptr};
  torch::nn::Conv3d head_{nullptr};
};
TORCH_MODULE(Hourglass);

struct GeneratorOutput {
  torch::Tensor coarse;
  torch::Tensor refined;
  /// `refined` inside the mask, the masked input's context outside it.
  torch::Tensor composite;
};

/// The stacked in-painter: a coarse hourglass fed (masked, label map) and a refinement hourglass fed
/// (coarse, masked, mask, label map). Parameter names are prefixed `coarse.` and `refine.`.
class InpaintGeneratorImpl : public torch::nn::Module {
 public:
  explicit InpaintGeneratorImpl(const GeneratorConfig& config);

  const GeneratorConfig& config() const { return config_; }

  torch::Tensor coarse_forward(const torch::Tensor& masked, const torch::Tensor& label_map);
  torch::Tensor refine_forward(const torch::Tensor& coarse, const torch::Tensor& masked, const torch::Tensor& mask,
                               const torch::Tensor& label_map);
  GeneratorOutput generate(const torch::Tensor& masked, const torch::Tensor& mask, const torch::Tensor& label_map);

  /// Called with the inputs and outputs of every `generate`; for instrumentation. Not serialised.
  using Observer = std::function<void(const torch::Tensor& masked, const torch::Tensor& mask, const GeneratorOutput&)>;
  void set_observer(Observer observer) { observer_ = std::move(observer); }

 private:
  GeneratorConfig config_;
  Observer observer_;
  Hourglass coarse_{nullptr};
  Hourglass refine_{nullptr};
};
TORCH_MODULE(InpaintGenerator);

/// Builds a generator whose initial parameters depend only on `seed`.
InpaintGenerator make_generator(const GeneratorConfig& config, std::uint64_t seed);

/// Shape/initialisation-checked entry points. Inputs are [N, 1, Z, Y, X].
torch::Tensor coarse_forward(const InpaintGenerator& generator, const torch::Tensor& masked,
                             const torch::Tensor& label_map);
torch::Tensor refine_forward(const InpaintGenerator& generator, const torch::Tensor& coarse,
                             const torch::Tensor& masked, const torch::Tensor& mask, const torch::Tensor& label_map);
GeneratorOutput generate(const InpaintGenerator& generator, const torch::Tensor& masked, const torch::Tensor& mask,
                         const torch::Tensor& label_map);

/// mask * refined + (1 - mask) * context, exact outside the mask.
torch::Tensor composite(const torch::Tensor& refined, const torch::Tensor& context, const torch::Tensor& mask);

}  // namespace inpaint_gan
