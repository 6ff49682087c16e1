#include "inpaint_gan/losses.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

void validate(const LossWeights& w) {
  if (w.lambda1 < 0 || w.lambda_gp < 0 || w.lambda_cls_D < 0 || w.lambda_cls_G < 0 || w.lambda_recon < 0) {
    throw ValidationError("loss weights must be >= 0");
  }
}

nlohmann::json to_json(const LossReport& r) {
  return {{"l_masked", r.l_masked},   {"l_global", r.l_global},       {"l_recon", r.l_recon},
          {"l_adv_local", r.l_adv_local}, {"l_adv_global", r.l_adv_global}, {"gp_local", r.gp_local},
          {"gp_global", r.gp_global}, {"l_cls_D", r.l_cls_D},         {"l_cls_G", r.l_cls_G},
          {"l_D_total", r.l_D_total}, {"l_G_total", r.l_G_total}};
}

std::string first_non_finite(const LossReport& r) {
  const std::pair<const char*, double> fields[] = {
      {"l_masked", r.l_masked},   {"l_global", r.l_global},         {"l_recon", r.l_recon},
      {"l_adv_local", r.l_adv_local}, {"l_adv_global", r.l_adv_global}, {"gp_local", r.gp_local},
      {"gp_global", r.gp_global}, {"l_cls_D", r.l_cls_D},           {"l_cls_G", r.l_cls_G},
      {"l_D_total", r.l_D_total}, {"l_G_total", r.l_G_total}};
  for (const auto& [name, value] : fields) {
    if (!std::isfinite(value)) return name;
  }
  return {};
}

ReconLoss recon_loss(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& mask, double lambda1) {
  if (pred.sizes() != target.sizes() || pred.sizes() != mask.sizes()) {
    throw ValidationError("recon_loss: pred, target and mask must share one shape");
  }
  if (pred.dim() < 1) throw ValidationError("recon_loss needs a batch dimension");
  const auto n = pred.size(0);
  auto diff = (pred - target).abs().reshape({n, -1});
  auto m = mask.reshape({n, -1}).to(diff.scalar_type());
  auto masked = ((diff * m).sum(1) / m.sum(1).clamp_min(1.0)).mean();
  auto global = diff.mean(1).mean();
  return {masked, global, masked + lambda1 * global};
}

torch::Tensor gradient_penalty(const ScoreFunction& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               double lambda_gp, std::uint64_t seed, bool create_graph) {
  if (real.sizes() != fake.sizes()) throw ValidationError("gradient_penalty: real and fake batches differ in shape");
  if (real.dim() < 1 || real.size(0) == 0) throw ValidationError("gradient_penalty needs a non-empty batch");
  // The penalty is itself a gradient, so it needs autograd even inside a no-grad scope.
  torch::AutoGradMode enable_grad(true);
  auto gen = at::detail::createCPUGenerator(seed);
  std::vector<std::int64_t> eps_shape(static_cast<std::size_t>(real.dim()), 1);
  eps_shape[0] = real.size(0);
  auto eps = torch::rand(eps_shape, gen, real.options().requires_grad(false));
  // Interpolates stay attached to real and fake so the penalty is differentiable in its inputs too.
  auto x_hat = eps * real + (1.0 - eps) * fake;
  if (!x_hat.requires_grad()) x_hat.requires_grad_(true);
  auto scores = critic(x_hat);
  torch::Tensor grads;
  // A score that does not depend on its input has zero gradient.
  if (scores.requires_grad()) {
    grads = torch::autograd::grad({scores.sum()}, {x_hat}, {}, /*retain_graph=*/create_graph,
                                  /*create_graph=*/create_graph, /*allow_unused=*/true)[0];
  }
  if (!grads.defined()) grads = torch::zeros_like(x_hat);
  auto norms = grads.reshape({real.size(0), -1}).norm(2, 1);
  return lambda_gp * (norms - 1.0).pow(2).mean();
}

torch::Tensor wgan_adv(const torch::Tensor& real_scores, const torch::Tensor& fake_scores, const torch::Tensor& gp) {
  if (real_scores.numel() == 0 || fake_scores.numel() == 0) throw ValidationError("wgan_adv needs non-empty batches");
  return real_scores.mean() - fake_scores.mean() - gp;
}

double wgan_adv(std::span<const double> real_scores, std::span<const double> fake_scores, double gp) {
  if (real_scores.empty() || fake_scores.empty()) throw ValidationError("wgan_adv needs non-empty batches");
  const double real = std::accumulate(real_scores.begin(), real_scores.end(), 0.0) / static_cast<double>(real_scores.size());
  const double fake = std::accumulate(fake_scores.begin(), fake_scores.end(), 0.0) / static_cast<double>(fake_scores.size());
  return real - fake - gp;
}

torch::Tensor aux_class_loss(const torch::Tensor& logits, const torch::Tensor& targets) {
  if (logits.dim() != 2 || logits.size(1) != 3) throw ValidationError("aux_class_loss expects [N, 3] logits");
  if (targets.dim() != 1 || targets.size(0) != logits.size(0)) {
    throw ValidationError("aux_class_loss expects one target per row");
  }
  if (targets.numel() == 0) throw ValidationError("aux_class_loss needs a non-empty batch");
  if ((targets < 0).any().item<bool>() || (targets > 2).any().item<bool>()) {
    throw ValidationError("aux_class_loss targets must lie in {0, 1, 2}");
  }
  return torch::nn::functional::cross_entropy(logits, targets.to(torch::kInt64));
}

}  // namespace inpaint_gan
