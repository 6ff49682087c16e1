#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "inpaint_gan/critics.hpp"
#include "inpaint_gan/generator.hpp"
#include "inpaint_gan/losses.hpp"
#include "inpaint_gan/patch_pipeline.hpp"
#include "inpaint_gan/tensor_bridge.hpp"

namespace inpaint_gan {

/// Training phases by step index:
///   [0, recon_only_steps)               generator on L_recon only, critics frozen
///   [recon_only_steps, adv_start_step)  critics warm up, generator still on L_recon only
///   [adv_start_step, cls_start_step)    adversarial terms active for the generator
///   [cls_start_step, ...)               auxiliary class terms active on both sides
struct PhaseBoundaries {
  long recon_only_steps = 2000;
  long adv_start_step = 2000;
  long cls_start_step = 6000;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
};

struct GanConfig {
  LossWeights weights;
  int critic_steps_per_gen_step = 5;
  PhaseBoundaries phases;
  int batch_size = 8;
  long total_steps = 10000;
  AdamConfig optimizer_g;
  AdamConfig optimizer_d;
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  int critic_base_channels = 32;
  int critic_depth = 3;
  int local_crop_margin = 2;
  Shape3 local_shape{32, 32, 16};
  /// Voxel spacing of the training patches; used when re-masking at synthesis time.
  Vec3 spacing{1.0, 1.0, 2.0};
  long checkpoint_every = 1000;
  /// When > 0, the class terms also switch on once the running mean of l_recon drops below this value.
  double cls_trigger_recon = 0.0;
};

void validate(const GanConfig& config);
nlohmann::json to_json(const GanConfig& config);
/// Every field is optional; unknown keys throw ValidationError.
GanConfig gan_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

struct RunningAverages {
  double l_recon = 0.0;
  double l_D_total = 0.0;
  double l_G_total = 0.0;
  long count = 0;
};

struct TrainState {
  GanConfig config;
  Shape3 patch_shape;
  long step = 0;
  long critic_updates = 0;
  long generator_updates = 0;
  bool cls_triggered = false;
  RunningAverages averages;
  InpaintGenerator generator{nullptr};
  Critic local_critic{nullptr};
  Critic global_critic{nullptr};
  std::unique_ptr<torch::optim::Adam> optimizer_g;
  std::unique_ptr<torch::optim::Adam> optimizer_d;

  bool adversarial_active() const { return step >= config.phases.adv_start_step; }
  bool critics_active() const { return step >= config.phases.recon_only_steps; }
  bool class_active() const { return step >= config.phases.cls_start_step || cls_triggered; }
};

/// Fresh networks and optimisers; every initial parameter depends only on `config.seed`.
TrainState init_train_state(const GanConfig& config, const Shape3& patch_shape);

/// Differentiable critic-side terms for one critic update. `fake` holds generated composites;
/// `iter_seed` keys the gradient-penalty interpolation.
struct CriticTerms {
  torch::Tensor gp_local, gp_global, adv_local, adv_global, l_cls, total;
};
CriticTerms critic_terms(TrainState& state, const PatchBatch& batch, const torch::Tensor& fake, bool class_on,
                         std::uint64_t iter_seed);

/// Differentiable generator-side terms. Reconstruction covers both the coarse and the refined output.
struct GeneratorTerms {
  GeneratorOutput output;
  torch::Tensor l_masked, l_global, l_recon, adv, l_cls, total;
};
GeneratorTerms generator_terms(TrainState& state, const PatchBatch& batch, bool adversarial_on, bool class_on);

/// One optimisation step at `state.step` (then increments it). Critics take
/// `critic_steps_per_gen_step` updates first when active, followed by one generator update.
/// Throws NonFiniteLossError naming the first non-finite loss term; parameters are left untouched then.
LossReport train_step(TrainState& state, std::span<const PatchSample* const> batch);

/// Writes the full state: networks in the parameter checkpoint layout plus optimiser moments and counters.
void save_train_state(const TrainState& state, const std::filesystem::path& dir);
TrainState load_train_state(const std::filesystem::path& dir);

/// Indices of the batch consumed at `step`: a seeded per-epoch permutation of the dataset read sequentially.
std::vector<std::size_t> batch_indices(std::size_t dataset_size, int batch_size, std::uint64_t seed, long step);

struct TrainOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  std::function<void(long step, const LossReport&)> on_step;
};

/// Runs steps up to `config.total_steps`, appending one JSON line per step to `<out>/train_log.jsonl` and
/// writing checkpoints to `<out>/checkpoints/step_NNNNNNN` every `checkpoint_every` steps, at phase
/// boundaries and at the end.
TrainState train(std::span<const PatchSample> dataset, const GanConfig& config, const TrainOptions& options);

/// Re-masks `n` source patches (drawn with replacement) with fresh noise at their annotated diameter and
/// in-paints them for `target`. Results are flagged synthetic and labelled `target`.
std::vector<PatchSample> synthesize_dataset(TrainState& state, std::span<const PatchSample> source, DomainLabel target,
                                            int n, std::uint64_t seed);

/// In-paints each (context, mask) pair for `target`, with noise keyed by `seed`. Returns composites.
std::vector<Array3f> inpaint(TrainState& state, std::span<const PatchSample> contexts, DomainLabel target,
                             std::uint64_t seed);

}  // namespace inpaint_gan
