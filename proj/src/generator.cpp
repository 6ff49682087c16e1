#include "inpaint_gan/generator.hpp"

#include "inpaint_gan/attention.hpp"
#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

nn::Conv3d conv(int in, int out, int kernel = 3, int stride = 1, int dilation = 1) {
  return nn::Conv3d(nn::Conv3dOptions(in, out, kernel).stride(stride).padding(dilation * (kernel / 2)).dilation(dilation));
}

int level_channels(int base, int level) { return base << std::min(level, 2); }

void check_patch(const torch::Tensor& t, const char* what) {
  if (t.dim() != 5 || t.size(1) != 1) {
    throw ValidationError(std::string(what) + " must be a single-channel [N, 1, Z, Y, X] tensor");
  }
}

void check_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  check_patch(b, what);
  if (a.sizes() != b.sizes()) throw ValidationError(std::string(what) + " shape does not match the masked patch");
}

}  // namespace

void validate(const GeneratorConfig& config) {
  if (config.base_channels < 1) throw ValidationError("generator base_channels must be >= 1");
  if (config.depth < 1) throw ValidationError("generator depth must be >= 1");
  if (config.attention_patch_size < 1) throw ValidationError("attention_patch_size must be >= 1");
  if (!(config.attention_softmax_scale > 0)) throw ValidationError("attention_softmax_scale must be > 0");
}

HourglassImpl::HourglassImpl(int in_channels, const GeneratorConfig& config, bool attention_branch)
    : config_(config), attention_branch_(attention_branch) {
  validate(config);
  const int base = config.base_channels;
  stem_ = register_module("stem", nn::Sequential(conv(in_channels, base), nn::ELU()));

  down_ = register_module("down", nn::ModuleList());
  for (int level = 0; level < config.depth; ++level) {
    const int cin = level_channels(base, level), cout = level_channels(base, level + 1);
    down_->push_back(nn::Sequential(conv(cin, cout, 3, 2), nn::ELU(), conv(cout, cout), nn::ELU()));
  }

  const int width = level_channels(base, config.depth);
  bottleneck_ = register_module(
      "bottleneck", nn::Sequential(conv(width, width, 3, 1, 2), nn::ELU(), conv(width, width, 3, 1, 4), nn::ELU()));
  if (attention_branch_) {
    attention_in_ = register_module("attention_in", conv(width, width));
    attention_out_ = register_module("attention_out", conv(width, width));
    merge_ = register_module("merge", conv(2 * width, width, 1));
  }

  up_ = register_module("up", nn::ModuleList());
  for (int level = config.depth; level > 0; --level) {
    const int cin = level_channels(base, level), skip = level_channels(base, level - 1);
    up_->push_back(nn::Sequential(conv(cin + skip, skip), nn::ELU()));
  }
  head_ = register_module("head", conv(base, 1));
}

torch::Tensor HourglassImpl::attend(const torch::Tensor& features, const torch::Tensor& mask) {
  const auto grid = features.sizes().slice(2);
  auto small = F::adaptive_avg_pool3d(mask, F::AdaptiveAvgPool3dFuncOptions(grid)) > 0.5;
  auto x = F::elu(attention_in_(features));

  // Samples whose hole swallows the whole bottleneck have no context to borrow from; they skip attention.
  const auto n = features.size(0);
  auto has_background = (small.reshape({n, -1}).logical_not().sum(1) > 0);
  auto attended = x;
  if (has_background.all().item<bool>()) {
    attended = contextual_attention(x, small.to(x.scalar_type()), config_.attention_patch_size,
                                    config_.attention_softmax_scale)
                   .output;
  } else if (has_background.any().item<bool>()) {
    auto idx = has_background.nonzero().squeeze(1);
    auto part = contextual_attention(x.index_select(0, idx), small.index_select(0, idx).to(x.scalar_type()),
                                     config_.attention_patch_size, config_.attention_softmax_scale)
                    .output;
    attended = x.index_copy(0, idx, part);
  }
  return F::elu(attention_out_(attended));
}

torch::Tensor HourglassImpl::forward(const torch::Tensor& input, const torch::Tensor& mask) {
  std::vector<torch::Tensor> skips;
  auto x = stem_->forward(input);
  for (auto& level : *down_) {
    skips.push_back(x);
    x = level->as<nn::Sequential>()->forward(x);
  }
  auto y = bottleneck_->forward(x);
  if (attention_branch_) {
    if (!mask.defined()) throw ValidationError("the attention branch needs the in-painting mask");
    y = merge_(torch::cat({y, attend(x, mask)}, 1));
  }
  for (auto& level : *up_) {
    auto skip = skips.back();
    skips.pop_back();
    std::vector<std::int64_t> size(skip.sizes().begin() + 2, skip.sizes().end());
    y = F::interpolate(y, F::InterpolateFuncOptions().size(size).mode(torch::kTrilinear).align_corners(false));
    y = level->as<nn::Sequential>()->forward(torch::cat({y, skip}, 1));
  }
  return torch::tanh(head_(y));
}

InpaintGeneratorImpl::InpaintGeneratorImpl(const GeneratorConfig& config) : config_(config) {
  validate(config);
  coarse_ = register_module("coarse", Hourglass(2, config, false));
  refine_ = register_module("refine", Hourglass(4, config, config.use_attention));
}

torch::Tensor InpaintGeneratorImpl::coarse_forward(const torch::Tensor& masked, const torch::Tensor& label_map) {
  check_patch(masked, "masked patch");
  check_same(masked, label_map, "label map");
  return coarse_->forward(torch::cat({masked, label_map}, 1));
}

torch::Tensor InpaintGeneratorImpl::refine_forward(const torch::Tensor& coarse, const torch::Tensor& masked,
                                                   const torch::Tensor& mask, const torch::Tensor& label_map) {
  check_patch(masked, "masked patch");
  check_same(masked, coarse, "coarse patch");
  check_same(masked, mask, "mask");
  check_same(masked, label_map, "label map");
  return refine_->forward(torch::cat({coarse, masked, mask, label_map}, 1), mask);
}

GeneratorOutput InpaintGeneratorImpl::generate(const torch::Tensor& masked, const torch::Tensor& mask,
                                               const torch::Tensor& label_map) {
  GeneratorOutput out;
  out.coarse = coarse_forward(masked, label_map);
  out.refined = refine_forward(out.coarse, masked, mask, label_map);
  out.composite = composite(out.refined, masked, mask);
  if (observer_) observer_(masked, mask, out);
  return out;
}

InpaintGenerator make_generator(const GeneratorConfig& config, std::uint64_t seed) {
  torch::manual_seed(seed);
  return InpaintGenerator(config);
}

torch::Tensor coarse_forward(const InpaintGenerator& generator, const torch::Tensor& masked,
                             const torch::Tensor& label_map) {
  if (!generator) throw ValidationError("generator parameters are not initialised");
  return generator.ptr()->coarse_forward(masked, label_map);
}

torch::Tensor refine_forward(const InpaintGenerator& generator, const torch::Tensor& coarse,
                             const torch::Tensor& masked, const torch::Tensor& mask, const torch::Tensor& label_map) {
  if (!generator) throw ValidationError("generator parameters are not initialised");
  return generator.ptr()->refine_forward(coarse, masked, mask, label_map);
}

GeneratorOutput generate(const InpaintGenerator& generator, const torch::Tensor& masked, const torch::Tensor& mask,
                         const torch::Tensor& label_map) {
  if (!generator) throw ValidationError("generator parameters are not initialised");
  return generator.ptr()->generate(masked, mask, label_map);
}

torch::Tensor composite(const torch::Tensor& refined, const torch::Tensor& context, const torch::Tensor& mask) {
  return torch::where(mask > 0.5, refined, context);
}

}  // namespace inpaint_gan
