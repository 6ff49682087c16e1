#include "inpaint_gan/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "inpaint_gan/checkpoint.hpp"
#include "inpaint_gan/config_json.hpp"
#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/seeding.hpp"
#include "inpaint_gan/tensor_bridge.hpp"

namespace inpaint_gan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;
using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// Names and configuration

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::raw:
      return "raw";
    case Regime::raw_weighted:
      return "raw-weighted";
    case Regime::raw_synthesis:
      return "raw-synthesis";
  }
  return "?";
}

const char* regime_title(Regime regime) {
  switch (regime) {
    case Regime::raw:
      return "Raw";
    case Regime::raw_weighted:
      return "Raw + Weighted Loss";
    case Regime::raw_synthesis:
      return "Raw + Synthesis";
  }
  return "?";
}

Regime parse_regime(const std::string& text) {
  if (text == "raw") return Regime::raw;
  if (text == "raw-weighted" || text == "raw_weighted") return Regime::raw_weighted;
  if (text == "raw-synthesis" || text == "raw_synthesis") return Regime::raw_synthesis;
  throw ValidationError("unknown regime '" + text + "' (expected raw, raw-weighted or raw-synthesis)");
}

ArchitectureSpec architecture_preset(const std::string& name, int desk_base_channels) {
  if (name == "desk") return {"desk", false, {1, 1}, desk_base_channels, 1, false};
  if (name == "resnet50") return {"resnet50", true, {3, 4, 6, 3}, 64, 1, true};
  if (name == "resnet101") return {"resnet101", true, {3, 4, 23, 3}, 64, 1, true};
  if (name == "resnet152") return {"resnet152", true, {3, 8, 36, 3}, 64, 1, true};
  if (name == "resnext101") return {"resnext101", true, {3, 4, 23, 3}, 128, 32, true};
  throw ValidationError("unknown classifier architecture '" + name + "'");
}

void validate(const ClassifierConfig& c) {
  const auto spec = architecture_preset(c.architecture, c.desk_base_channels);
  for (int b : spec.blocks) {
    if (b < 1) throw ValidationError("block counts must be >= 1");
  }
  if (c.desk_base_channels < 1) throw ValidationError("desk_base_channels must be >= 1");
  if (c.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (c.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(c.learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
  if (c.weight_decay < 0) throw ValidationError("weight_decay must be >= 0");
  const auto& a = c.augmentation;
  if (a.max_shift_voxels < 0 || !(a.scale_min > 0) || a.scale_min > a.scale_max) {
    throw ValidationError("augmentation needs max_shift >= 0 and 0 < scale_min <= scale_max");
  }
}

json to_json(const ClassifierConfig& c) {
  json j = {{"architecture", c.architecture},
            {"desk_base_channels", c.desk_base_channels},
            {"loss_mode", c.loss_mode == LossMode::class_weighted ? "class_weighted" : "unweighted"},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"weight_decay", c.weight_decay},
            {"seed", c.seed},
            {"seeds", c.seeds},
            {"augmentation",
             {{"enabled", c.augmentation.enabled},
              {"max_shift_voxels", c.augmentation.max_shift_voxels},
              {"scale_min", c.augmentation.scale_min},
              {"scale_max", c.augmentation.scale_max}}}};
  if (c.pretrained_weights_path) j["pretrained_weights_path"] = *c.pretrained_weights_path;
  return j;
}

ClassifierConfig classifier_config_from_json(const json& j) {
  ClassifierConfig c;
  ConfigReader r(j, "classifier_config");
  r.read("architecture", c.architecture);
  r.read("desk_base_channels", c.desk_base_channels);
  std::string pretrained;
  r.read("pretrained_weights_path", pretrained);
  if (!pretrained.empty()) c.pretrained_weights_path = pretrained;
  std::string loss_mode = "unweighted";
  r.read("loss_mode", loss_mode);
  if (loss_mode == "unweighted") {
    c.loss_mode = LossMode::unweighted;
  } else if (loss_mode == "class_weighted") {
    c.loss_mode = LossMode::class_weighted;
  } else {
    throw ValidationError("classifier_config.loss_mode must be unweighted or class_weighted");
  }
  r.read("epochs", c.epochs);
  r.read("batch_size", c.batch_size);
  r.read("learning_rate", c.learning_rate);
  r.read("weight_decay", c.weight_decay);
  r.read("seed", c.seed);
  r.read("seeds", c.seeds);
  auto a = r.child("augmentation");
  a.read("enabled", c.augmentation.enabled);
  a.read("max_shift_voxels", c.augmentation.max_shift_voxels);
  a.read("scale_min", c.augmentation.scale_min);
  a.read("scale_max", c.augmentation.scale_max);
  a.finish();
  r.finish();
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------------------------
// Network

namespace {

nn::Conv3d conv3(int in, int out, int stride = 1, int groups = 1) {
  return nn::Conv3d(nn::Conv3dOptions(in, out, 3).stride(stride).padding(1).groups(groups).bias(false));
}

nn::Conv3d conv1(int in, int out, int stride = 1) {
  return nn::Conv3d(nn::Conv3dOptions(in, out, 1).stride(stride).bias(false));
}

class BasicBlockImpl : public nn::Module {
 public:
  BasicBlockImpl(int in, int out, int stride) {
    conv1_ = register_module("conv1", conv3(in, out, stride));
    bn1_ = register_module("bn1", nn::BatchNorm3d(out));
    conv2_ = register_module("conv2", conv3(out, out));
    bn2_ = register_module("bn2", nn::BatchNorm3d(out));
    if (stride != 1 || in != out) {
      shortcut_ = register_module("shortcut", nn::Sequential(conv1(in, out, stride), nn::BatchNorm3d(out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1_(conv1_(x)));
    y = bn2_(conv2_(y));
    return torch::relu(y + (shortcut_ ? shortcut_->forward(x) : x));
  }

 private:
  nn::Conv3d conv1_{nullptr}, conv2_{nullptr};
  nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr};
  nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(BasicBlock);

class BottleneckImpl : public nn::Module {
 public:
  BottleneckImpl(int in, int mid, int out, int stride, int cardinality) {
    conv1_ = register_module("conv1", conv1(in, mid));
    bn1_ = register_module("bn1", nn::BatchNorm3d(mid));
    conv2_ = register_module("conv2", conv3(mid, mid, stride, cardinality));
    bn2_ = register_module("bn2", nn::BatchNorm3d(mid));
    conv3_ = register_module("conv3", conv1(mid, out));
    bn3_ = register_module("bn3", nn::BatchNorm3d(out));
    if (stride != 1 || in != out) {
      shortcut_ = register_module("shortcut", nn::Sequential(conv1(in, out, stride), nn::BatchNorm3d(out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1_(conv1_(x)));
    y = torch::relu(bn2_(conv2_(y)));
    y = bn3_(conv3_(y));
    return torch::relu(y + (shortcut_ ? shortcut_->forward(x) : x));
  }

 private:
  nn::Conv3d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
  nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr}, bn3_{nullptr};
  nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(Bottleneck);

}  // namespace

ResNet3dImpl::ResNet3dImpl(const ArchitectureSpec& spec) : spec_(spec) {
  const int base = spec.base_channels;
  const int stem_out = spec.video_stem ? 64 : base;
  if (spec.video_stem) {
    stem_ = nn::Sequential(
        nn::Conv3d(nn::Conv3dOptions(1, stem_out, 7).stride({1, 2, 2}).padding(3).bias(false)), nn::BatchNorm3d(stem_out),
        nn::ReLU(), nn::MaxPool3d(nn::MaxPool3dOptions(3).stride(2).padding(1)));
  } else {
    stem_ = nn::Sequential(conv3(1, stem_out, 2), nn::BatchNorm3d(stem_out), nn::ReLU());
  }
  register_module("stem", stem_);

  stages_ = nn::Sequential();
  int channels = stem_out;
  for (std::size_t s = 0; s < spec.blocks.size(); ++s) {
    const int planes = base << s;
    const int stride = s == 0 ? 1 : 2;
    for (int b = 0; b < spec.blocks[s]; ++b) {
      const int block_stride = b == 0 ? stride : 1;
      if (spec.bottleneck) {
        const int expansion = spec.cardinality > 1 ? 2 : 4;
        const int mid = spec.cardinality > 1 ? spec.cardinality * (planes / 32) : planes;
        stages_->push_back(Bottleneck(channels, mid, planes * expansion, block_stride, spec.cardinality));
        channels = planes * expansion;
      } else {
        stages_->push_back(BasicBlock(channels, planes, block_stride));
        channels = planes;
      }
    }
  }
  register_module("stages", stages_);
  fc_ = register_module("fc", nn::Linear(channels, 2));
}

torch::Tensor ResNet3dImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 5 || x.size(1) != 1) throw ValidationError("classifier input must be [N, 1, Z, Y, X]");
  auto y = stages_->forward(stem_->forward(x));
  return fc_(y.mean({2, 3, 4}));
}

void load_pretrained(ResNet3d& model, const std::filesystem::path& dir) {
  const auto tensors = read_checkpoint_tensors(dir);
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& name, torch::Tensor& target) {
    if (name.rfind("fc.", 0) == 0) return;
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("pretrained weights have no tensor for layer '" + name + "'");
    auto source = it->second;
    if (name == "stem.0.weight" && source.dim() == 5 && source.size(1) == 3 && target.size(1) == 1) {
      source = source.sum(1, true);
    }
    if (source.sizes() != target.sizes()) throw FormatError("shape mismatch for layer '" + name + "'");
    target.copy_(source.to(target.scalar_type()));
  };
  for (auto& item : model->named_parameters()) assign(item.key(), item.value());
  for (auto& item : model->named_buffers()) {
    if (item.value().dtype() == torch::kInt64) continue;  // BatchNorm step counters
    assign(item.key(), item.value());
  }
}

ResNet3d build_classifier(const ClassifierConfig& config) {
  validate(config);
  torch::manual_seed(derive_seed(config.seed, "classifier-init"));
  ResNet3d model(architecture_preset(config.architecture, config.desk_base_channels));
  if (config.pretrained_weights_path) load_pretrained(model, *config.pretrained_weights_path);
  return model;
}

// ---------------------------------------------------------------------------------------------
// Losses and augmentation

torch::Tensor weighted_ce(const torch::Tensor& logits, const torch::Tensor& labels, std::array<double, 2> weights) {
  if (logits.dim() != 2 || logits.size(1) != 2) throw ValidationError("weighted_ce expects [N, 2] logits");
  if (labels.dim() != 1 || labels.size(0) != logits.size(0) || labels.numel() == 0) {
    throw ValidationError("weighted_ce expects one label per row");
  }
  if ((labels < 0).any().item<bool>() || (labels > 1).any().item<bool>()) {
    throw ValidationError("weighted_ce labels must be 0 or 1");
  }
  if (!(weights[0] > 0 && weights[1] > 0)) throw ValidationError("class weights must be > 0");
  auto idx = labels.to(torch::kInt64);
  auto nll = -torch::log_softmax(logits, 1).gather(1, idx.unsqueeze(1)).squeeze(1);
  auto w = torch::tensor({weights[0], weights[1]}, logits.options()).index_select(0, idx);
  return (w * nll).mean();
}

std::array<double, 2> inverse_frequency_weights(std::int64_t n_benign, std::int64_t n_malignant) {
  if (n_benign < 1 || n_malignant < 1) throw ValidationError("inverse-frequency weights need both classes present");
  const double a = 1.0 / static_cast<double>(n_benign), b = 1.0 / static_cast<double>(n_malignant);
  return {2.0 * a / (a + b), 2.0 * b / (a + b)};
}

torch::Tensor augment_batch(const torch::Tensor& batch, const AugmentationConfig& config, std::uint64_t seed) {
  if (batch.dim() != 5) throw ValidationError("augment_batch expects [N, C, Z, Y, X]");
  const auto n = batch.size(0);
  auto gen = at::detail::createCPUGenerator(seed);
  auto u = torch::rand({n, 4}, gen, batch.options());
  auto scale = config.scale_min + (config.scale_max - config.scale_min) * u.select(1, 0);
  auto theta = torch::zeros({n, 3, 4}, batch.options());
  // affine_grid rows are (x, y, z); translations are in normalised [-1, 1] units.
  const double extents[3] = {static_cast<double>(batch.size(4)), static_cast<double>(batch.size(3)),
                             static_cast<double>(batch.size(2))};
  for (int a = 0; a < 3; ++a) {
    theta.select(1, a).select(1, a).copy_(1.0 / scale);
    auto shift = (u.select(1, a + 1) * 2.0 - 1.0) * config.max_shift_voxels * 2.0 / extents[a];
    theta.select(1, a).select(1, 3).copy_(shift);
  }
  auto grid = F::affine_grid(theta, batch.sizes(), false);
  return F::grid_sample(batch, grid,
                        F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kBorder).align_corners(false));
}

std::vector<int> binary_labels(std::span<const PatchSample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.label != DomainLabel::benign && s.label != DomainLabel::malignant) {
      throw ValidationError("classifier samples must be benign or malignant");
    }
    out.push_back(s.label == DomainLabel::malignant ? 1 : 0);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Inference

namespace {

torch::Tensor stack_raw(std::span<const PatchSample> samples, std::size_t begin, std::size_t end) {
  std::vector<torch::Tensor> parts;
  for (std::size_t i = begin; i < end; ++i) parts.push_back(to_tensor(samples[i].raw));
  return torch::stack(parts).unsqueeze(1);
}

std::vector<torch::Tensor> snapshot(ResNet3d& model) {
  std::vector<torch::Tensor> out;
  for (auto& t : model->parameters()) out.push_back(t.detach().clone());
  for (auto& t : model->buffers()) out.push_back(t.detach().clone());
  return out;
}

void restore(ResNet3d& model, const std::vector<torch::Tensor>& saved) {
  torch::NoGradGuard no_grad;
  std::size_t i = 0;
  for (auto& t : model->parameters()) t.copy_(saved[i++]);
  for (auto& t : model->buffers()) t.copy_(saved[i++]);
}

}  // namespace

std::vector<double> predict_malignant(ResNet3d& model, std::span<const PatchSample> samples, int batch_size) {
  if (!model) throw ValidationError("classifier is not initialised");
  const bool was_training = model->is_training();
  model->eval();
  torch::NoGradGuard no_grad;
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    auto probs = torch::softmax(model->forward(stack_raw(samples, start, end)), 1).select(1, 1).to(torch::kDouble);
    for (std::int64_t i = 0; i < probs.size(0); ++i) out.push_back(probs[i].item<double>());
  }
  model->train(was_training);
  return out;
}

MetricsReport evaluate(ResNet3d& model, std::span<const PatchSample> samples, double threshold) {
  if (samples.empty()) throw ValidationError("cannot evaluate an empty split");
  const auto scores = predict_malignant(model, samples);
  const auto labels = binary_labels(samples);
  return metrics_from_scores(scores, labels, threshold);
}

// ---------------------------------------------------------------------------------------------
// Training

TrainedClassifier train_classifier(std::span<const PatchSample> train, std::span<const PatchSample> val,
                                   const ClassifierConfig& config) {
  validate(config);
  if (train.empty() || val.empty()) throw ValidationError("classifier training needs non-empty train and val splits");
  TrainedClassifier result;
  result.model = build_classifier(config);
  auto& model = result.model;
  if (config.epochs == 0) return result;

  const auto labels = binary_labels(train);
  std::array<double, 2> weights{1.0, 1.0};
  if (config.loss_mode == LossMode::class_weighted) {
    const auto n_malignant = std::count(labels.begin(), labels.end(), 1);
    weights = inverse_frequency_weights(static_cast<std::int64_t>(labels.size()) - n_malignant, n_malignant);
  }

  torch::optim::Adam optimizer(model->parameters(),
                               torch::optim::AdamOptions(config.learning_rate).weight_decay(config.weight_decay));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<torch::Tensor> best;
  double best_auc = -1.0;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    model->train();
    std::mt19937_64 rng(derive_seed(config.seed, "classifier-order", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const auto end = std::min(order.size(), start + bs);
      if (end - start < 2 && order.size() >= 2) continue;  // BatchNorm needs more than one sample
      std::vector<torch::Tensor> xs;
      std::vector<std::int64_t> ys;
      for (std::size_t i = start; i < end; ++i) {
        xs.push_back(to_tensor(train[order[i]].raw));
        ys.push_back(labels[order[i]]);
      }
      auto x = torch::stack(xs).unsqueeze(1);
      if (config.augmentation.enabled) {
        x = augment_batch(x, config.augmentation,
                          derive_seed(config.seed, "classifier-augment",
                                      static_cast<std::uint64_t>(epoch) * 1000003ULL + batches));
      }
      auto loss = weighted_ce(model->forward(x), torch::tensor(ys, torch::kInt64), weights);
      if (!std::isfinite(loss.item<double>())) throw NonFiniteLossError("classifier_ce", epoch);
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += loss.item<double>();
      ++batches;
    }
    const auto scores = predict_malignant(model, val);
    const auto val_labels = binary_labels(val);
    const double val_auc = auc(scores, val_labels);
    result.history.train_loss.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);
    result.history.val_auc.push_back(val_auc);
    if (val_auc > best_auc) {
      best_auc = val_auc;
      best = snapshot(model);
      result.history.best_epoch = static_cast<std::size_t>(epoch) + 1;
    }
  }
  restore(model, best);
  model->eval();
  return result;
}

void save_classifier(ResNet3d& model, const ClassifierConfig& config, const std::filesystem::path& dir) {
  save_parameters(*model, dir, to_json(config));
}

ResNet3d load_classifier(const std::filesystem::path& dir, ClassifierConfig* config_out) {
  auto config = classifier_config_from_json(read_checkpoint_config(dir));
  config.pretrained_weights_path.reset();
  auto model = build_classifier(config);
  load_parameters(*model, dir);
  model->eval();
  if (config_out) *config_out = config;
  return model;
}

// ---------------------------------------------------------------------------------------------
// Experiments

json to_json(const ExperimentResult& r) {
  json per_seed = json::array();
  for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
    json entry = {{"seed", r.seeds[i]}, {"metrics", to_json(r.per_seed[i])}};
    if (i < r.histories.size()) {
      entry["val_auc"] = r.histories[i].val_auc;
      entry["train_loss"] = r.histories[i].train_loss;
      entry["best_epoch"] = r.histories[i].best_epoch;
    }
    per_seed.push_back(entry);
  }
  return {{"regime", to_string(r.regime)}, {"per_seed", per_seed}, {"mean", to_json(r.mean)}, {"spread", to_json(r.spread)}};
}

ExperimentResult experiment_from_json(const json& j) {
  try {
    ExperimentResult r;
    r.regime = parse_regime(j.at("regime").get<std::string>());
    for (const auto& entry : j.at("per_seed")) {
      r.seeds.push_back(entry.at("seed").get<std::uint64_t>());
      r.per_seed.push_back(metrics_from_json(entry.at("metrics")));
      TrainHistory h;
      if (entry.contains("val_auc")) h.val_auc = entry.at("val_auc").get<std::vector<double>>();
      if (entry.contains("train_loss")) h.train_loss = entry.at("train_loss").get<std::vector<double>>();
      if (entry.contains("best_epoch")) h.best_epoch = entry.at("best_epoch").get<std::size_t>();
      r.histories.push_back(std::move(h));
    }
    r.mean = metrics_from_json(j.at("mean"));
    r.spread = metrics_from_json(j.at("spread"));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed experiment report: ") + e.what());
  }
}

ExperimentResult run_experiment(const PatchDataset& data, Regime regime, const ClassifierConfig& config,
                                std::span<const std::uint64_t> seeds, std::span<const PatchSample> synthetic,
                                const std::optional<std::filesystem::path>& save_dir) {
  if (seeds.empty()) throw ValidationError("run_experiment needs at least one seed");
  if (regime == Regime::raw_synthesis && synthetic.empty()) {
    throw ValidationError("the raw-synthesis regime needs synthetic training patches");
  }
  std::vector<PatchSample> train(data.train.begin(), data.train.end());
  if (regime == Regime::raw_synthesis) train.insert(train.end(), synthetic.begin(), synthetic.end());

  ExperimentResult result;
  result.regime = regime;
  for (auto seed : seeds) {
    ClassifierConfig c = config;
    c.seed = seed;
    c.loss_mode = regime == Regime::raw_weighted ? LossMode::class_weighted : LossMode::unweighted;
    auto trained = train_classifier(train, data.val, c);
    result.seeds.push_back(seed);
    result.per_seed.push_back(evaluate(trained.model, data.test));
    result.histories.push_back(trained.history);
    if (save_dir) save_classifier(trained.model, c, *save_dir / ("seed_" + std::to_string(seed)));
  }
  result.mean = mean_report(result.per_seed);
  result.spread = spread_report(result.per_seed);
  return result;
}

}  // namespace inpaint_gan
