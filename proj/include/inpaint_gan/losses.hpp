#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

namespace inpaint_gan {

struct LossWeights {
  double lambda1 = 1.0;        ///< global L1 weight inside the reconstruction loss
  double lambda_gp = 10.0;     ///< gradient penalty
  double lambda_cls_D = 1.0;   ///< auxiliary class loss, critic side
  double lambda_cls_G = 1.0;   ///< auxiliary class loss, generator side
  double lambda_recon = 10.0;  ///< reconstruction loss in the generator objective
};

void validate(const LossWeights& weights);

/// Per-step scalar losses. Terms that are inactive in the current training phase stay 0.
struct LossReport {
  double l_masked = 0.0;
  double l_global = 0.0;
  double l_recon = 0.0;
  double l_adv_local = 0.0;
  double l_adv_global = 0.0;
  double gp_local = 0.0;
  double gp_global = 0.0;
  double l_cls_D = 0.0;
  double l_cls_G = 0.0;
  double l_D_total = 0.0;
  double l_G_total = 0.0;

  friend bool operator==(const LossReport&, const LossReport&) = default;
};

nlohmann::json to_json(const LossReport& report);

/// Name of the first non-finite field in declaration order, or empty when all are finite.
std::string first_non_finite(const LossReport& report);

struct ReconLoss {
  torch::Tensor l_masked;
  torch::Tensor l_global;
  torch::Tensor l_recon;
};

/// Normalised L1: the masked term divides by the mask voxel count (at least 1), the global term by the
/// voxel count. Inputs are [N, ...]; per-sample values are averaged over the batch.
ReconLoss recon_loss(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& mask, double lambda1);

using ScoreFunction = std::function<torch::Tensor(const torch::Tensor&)>;

/// lambda_gp * mean_n (||grad critic(x_hat_n)||_2 - 1)^2 with x_hat = eps * real + (1 - eps) * fake,
/// eps ~ U[0, 1] per sample drawn from a generator seeded with `seed`. With `create_graph` the result is
/// differentiable with respect to the critic parameters.
torch::Tensor gradient_penalty(const ScoreFunction& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               double lambda_gp, std::uint64_t seed, bool create_graph = true);

/// mean(real) - mean(fake) - gp.
torch::Tensor wgan_adv(const torch::Tensor& real_scores, const torch::Tensor& fake_scores, const torch::Tensor& gp);
double wgan_adv(std::span<const double> real_scores, std::span<const double> fake_scores, double gp);

/// Mean negative log-softmax probability of the target domain class (0 fake, 1 benign, 2 malignant).
torch::Tensor aux_class_loss(const torch::Tensor& logits, const torch::Tensor& targets);

/// Quantity the critics minimise: -l_adv + lambda_cls_D * l_cls_D.
template <typename T>
T critic_objective(const T& l_adv, const T& l_cls_D, const LossWeights& w) {
  return -l_adv + w.lambda_cls_D * l_cls_D;
}

/// Quantity the generator minimises: -adv + lambda_cls_G * l_cls_G + lambda_recon * l_recon, where `adv`
/// is the generator-dependent part of the adversarial value (the critics' mean score on generated patches).
template <typename T>
T generator_objective(const T& adv, const T& l_cls_G, const T& l_recon, const LossWeights& w) {
  return -adv + w.lambda_cls_G * l_cls_G + w.lambda_recon * l_recon;
}

}  // namespace inpaint_gan
