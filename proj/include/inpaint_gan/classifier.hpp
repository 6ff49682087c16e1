#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

#include "inpaint_gan/dataset.hpp"
#include "inpaint_gan/metrics.hpp"

namespace inpaint_gan {

enum class LossMode { unweighted, class_weighted };
enum class Regime { raw, raw_weighted, raw_synthesis };

const char* to_string(Regime regime);
const char* regime_title(Regime regime);  ///< section title for the metrics table
Regime parse_regime(const std::string& text);

/// Residual layout. `desk` is the small test default; the others follow the 3D ResNet/ResNeXt families.
struct ArchitectureSpec {
  std::string name;
  bool bottleneck = false;
  std::vector<int> blocks;
  int base_channels = 64;
  int cardinality = 1;
  /// 7^3 stem with (1, 2, 2) stride plus max pooling, as in the video networks; otherwise a 3^3 stride-2 stem.
  bool video_stem = true;
};

/// "desk", "resnet50", "resnet101", "resnet152" or "resnext101".
ArchitectureSpec architecture_preset(const std::string& name, int desk_base_channels = 16);

struct AugmentationConfig {
  bool enabled = true;
  double max_shift_voxels = 2.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
};

struct ClassifierConfig {
  std::string architecture = "desk";
  int desk_base_channels = 16;
  std::optional<std::string> pretrained_weights_path;
  LossMode loss_mode = LossMode::unweighted;
  int epochs = 10;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  AugmentationConfig augmentation;
};

void validate(const ClassifierConfig& config);
nlohmann::json to_json(const ClassifierConfig& config);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

class ResNet3dImpl : public torch::nn::Module {
 public:
  explicit ResNet3dImpl(const ArchitectureSpec& spec);
  /// [N, 1, Z, Y, X] -> [N, 2] logits (benign, malignant).
  torch::Tensor forward(const torch::Tensor& x);
  const ArchitectureSpec& spec() const { return spec_; }

 private:
  ArchitectureSpec spec_;
  torch::nn::Sequential stem_{nullptr};
  torch::nn::Sequential stages_{nullptr};
  torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(ResNet3d);

/// Seeded construction. When `pretrained_weights_path` is set the checkpoint is loaded: 3-channel stem
/// kernels are summed over input channels to fit the single-channel input, `fc.*` stays freshly
/// initialised, and any other missing or mismatched tensor throws FormatError naming it.
ResNet3d build_classifier(const ClassifierConfig& config);
void load_pretrained(ResNet3d& model, const std::filesystem::path& dir);

/// Mean over the batch of weight[label] * -log softmax(logits)[label]. `labels` are 0 benign, 1 malignant.
torch::Tensor weighted_ce(const torch::Tensor& logits, const torch::Tensor& labels, std::array<double, 2> weights);

/// Inverse class frequency normalised to mean 1.
std::array<double, 2> inverse_frequency_weights(std::int64_t n_benign, std::int64_t n_malignant);

/// Random crop (shift) and isotropic scaling, trilinear with border padding. Shape preserving.
torch::Tensor augment_batch(const torch::Tensor& batch, const AugmentationConfig& config, std::uint64_t seed);

/// Binary targets for classifier training: benign -> 0, malignant -> 1.
std::vector<int> binary_labels(std::span<const PatchSample> samples);

/// Softmax probability of the malignant class for each sample (inference mode).
std::vector<double> predict_malignant(ResNet3d& model, std::span<const PatchSample> samples, int batch_size = 32);

MetricsReport evaluate(ResNet3d& model, std::span<const PatchSample> samples, double threshold = 0.5);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_auc;
  /// 1-indexed epoch whose weights were kept; 0 when no epoch ran.
  std::size_t best_epoch = 0;
};

struct TrainedClassifier {
  ResNet3d model{nullptr};
  TrainHistory history;
};

/// Trains for `config.epochs` with on-the-fly augmentation and keeps the weights of the epoch with the
/// highest validation AUC (earliest on ties). Throws NonFiniteLossError on divergence.
TrainedClassifier train_classifier(std::span<const PatchSample> train, std::span<const PatchSample> val,
                                   const ClassifierConfig& config);

void save_classifier(ResNet3d& model, const ClassifierConfig& config, const std::filesystem::path& dir);
ResNet3d load_classifier(const std::filesystem::path& dir, ClassifierConfig* config_out = nullptr);

struct ExperimentResult {
  Regime regime = Regime::raw;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> per_seed;
  std::vector<TrainHistory> histories;
  MetricsReport mean;
  MetricsReport spread;
};

nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult experiment_from_json(const nlohmann::json& j);

/// raw: real patches, unweighted loss. raw_weighted: real patches, inverse-frequency weights.
/// raw_synthesis: real plus `synthetic` training patches, unweighted. Each seed trains one model on
/// `data.train`, selects on `data.val` and reports on `data.test`. Optional `save_dir` receives
/// `seed_<s>/` checkpoints.
ExperimentResult run_experiment(const PatchDataset& data, Regime regime, const ClassifierConfig& config,
                                std::span<const std::uint64_t> seeds, std::span<const PatchSample> synthetic = {},
                                const std::optional<std::filesystem::path>& save_dir = std::nullopt);

}  // namespace inpaint_gan
