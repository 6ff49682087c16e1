#include "inpaint_gan/gan_trainer.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "inpaint_gan/checkpoint.hpp"
#include "inpaint_gan/config_json.hpp"
#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/seeding.hpp"
#include "inpaint_gan/tensor_bridge.hpp"

namespace inpaint_gan {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// Configuration

void validate(const GanConfig& c) {
  validate(c.weights);
  validate(c.generator);
  if (c.critic_steps_per_gen_step < 1) throw ValidationError("critic_steps_per_gen_step must be >= 1");
  const auto& p = c.phases;
  if (!(0 <= p.recon_only_steps && p.recon_only_steps <= p.adv_start_step && p.adv_start_step <= p.cls_start_step)) {
    throw ValidationError("phase boundaries must satisfy 0 <= recon_only_steps <= adv_start_step <= cls_start_step");
  }
  if (c.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (c.total_steps < 0) throw ValidationError("total_steps must be >= 0");
  if (c.checkpoint_every < 1) throw ValidationError("checkpoint_every must be >= 1");
  if (c.critic_base_channels < 1 || c.critic_depth < 1) throw ValidationError("critic width and depth must be >= 1");
  if (c.local_crop_margin < 0) throw ValidationError("local_crop_margin must be >= 0");
  if (!c.local_shape.positive()) throw ValidationError("local_shape must be positive");
  for (const auto* o : {&c.optimizer_g, &c.optimizer_d}) {
    if (!(o->lr > 0) || o->beta1 < 0 || o->beta1 >= 1 || o->beta2 < 0 || o->beta2 >= 1) {
      throw ValidationError("optimizer settings need lr > 0 and moments in [0, 1)");
    }
  }
}

json to_json(const GeneratorConfig& g) {
  return {{"base_channels", g.base_channels},
          {"depth", g.depth},
          {"attention_patch_size", g.attention_patch_size},
          {"attention_softmax_scale", g.attention_softmax_scale},
          {"use_attention", g.use_attention}};
}

namespace {

void read_generator(ConfigReader r, GeneratorConfig& g) {
  r.read("base_channels", g.base_channels);
  r.read("depth", g.depth);
  r.read("attention_patch_size", g.attention_patch_size);
  r.read("attention_softmax_scale", g.attention_softmax_scale);
  r.read("use_attention", g.use_attention);
  r.finish();
}

void read_adam(ConfigReader r, AdamConfig& a) {
  r.read("lr", a.lr);
  r.read("beta1", a.beta1);
  r.read("beta2", a.beta2);
  r.finish();
}

json adam_json(const AdamConfig& a) { return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}}; }

}  // namespace

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig g;
  read_generator(ConfigReader(j, "generator"), g);
  return g;
}

json to_json(const GanConfig& c) {
  return {{"weights",
           {{"lambda1", c.weights.lambda1},
            {"lambda_gp", c.weights.lambda_gp},
            {"lambda_cls_D", c.weights.lambda_cls_D},
            {"lambda_cls_G", c.weights.lambda_cls_G},
            {"lambda_recon", c.weights.lambda_recon}}},
          {"critic_steps_per_gen_step", c.critic_steps_per_gen_step},
          {"phases",
           {{"recon_only_steps", c.phases.recon_only_steps},
            {"adv_start_step", c.phases.adv_start_step},
            {"cls_start_step", c.phases.cls_start_step}}},
          {"batch_size", c.batch_size},
          {"total_steps", c.total_steps},
          {"optimizer_g", adam_json(c.optimizer_g)},
          {"optimizer_d", adam_json(c.optimizer_d)},
          {"seed", c.seed},
          {"generator", to_json(c.generator)},
          {"critic_base_channels", c.critic_base_channels},
          {"critic_depth", c.critic_depth},
          {"local_crop_margin", c.local_crop_margin},
          {"local_shape", shape_json(c.local_shape)},
          {"spacing", vec_json(c.spacing)},
          {"checkpoint_every", c.checkpoint_every},
          {"cls_trigger_recon", c.cls_trigger_recon}};
}

GanConfig gan_config_from_json(const json& j) {
  GanConfig c;
  ConfigReader r(j, "gan_config");
  {
    auto w = r.child("weights");
    w.read("lambda1", c.weights.lambda1);
    w.read("lambda_gp", c.weights.lambda_gp);
    w.read("lambda_cls_D", c.weights.lambda_cls_D);
    w.read("lambda_cls_G", c.weights.lambda_cls_G);
    w.read("lambda_recon", c.weights.lambda_recon);
    w.finish();
  }
  r.read("critic_steps_per_gen_step", c.critic_steps_per_gen_step);
  {
    auto p = r.child("phases");
    p.read("recon_only_steps", c.phases.recon_only_steps);
    p.read("adv_start_step", c.phases.adv_start_step);
    p.read("cls_start_step", c.phases.cls_start_step);
    p.finish();
  }
  r.read("batch_size", c.batch_size);
  r.read("total_steps", c.total_steps);
  read_adam(r.child("optimizer_g"), c.optimizer_g);
  read_adam(r.child("optimizer_d"), c.optimizer_d);
  r.read("seed", c.seed);
  read_generator(r.child("generator"), c.generator);
  r.read("critic_base_channels", c.critic_base_channels);
  r.read("critic_depth", c.critic_depth);
  r.read("local_crop_margin", c.local_crop_margin);
  r.read("local_shape", c.local_shape);
  r.read("spacing", c.spacing);
  r.read("checkpoint_every", c.checkpoint_every);
  r.read("cls_trigger_recon", c.cls_trigger_recon);
  r.finish();
  return c;
}

// ---------------------------------------------------------------------------------------------
// State

namespace {

CriticConfig critic_config(const GanConfig& c, CriticKind kind, const Shape3& patch_shape) {
  CriticConfig cc;
  cc.base_channels = c.critic_base_channels;
  cc.depth = c.critic_depth;
  cc.kind = kind;
  cc.local_crop_margin = c.local_crop_margin;
  cc.input_shape = kind == CriticKind::local ? c.local_shape : patch_shape;
  return cc;
}

std::unique_ptr<torch::optim::Adam> make_adam(std::vector<torch::Tensor> params, const AdamConfig& a) {
  return std::make_unique<torch::optim::Adam>(
      std::move(params), torch::optim::AdamOptions(a.lr).betas({a.beta1, a.beta2}));
}

std::vector<torch::Tensor> concat(std::vector<torch::Tensor> a, const std::vector<torch::Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

double scalar(const torch::Tensor& t) { return t.item<double>(); }

void ensure_finite(const char* name, const torch::Tensor& t, long step) {
  if (!torch::isfinite(t).all().item<bool>()) throw NonFiniteLossError(name, step);
}

}  // namespace

TrainState init_train_state(const GanConfig& config, const Shape3& patch_shape) {
  validate(config);
  if (!patch_shape.positive()) throw ValidationError("patch shape must be positive");
  TrainState s;
  s.config = config;
  s.patch_shape = patch_shape;
  s.generator = make_generator(config.generator, derive_seed(config.seed, "init-generator"));
  s.local_critic = make_critic(critic_config(config, CriticKind::local, patch_shape), derive_seed(config.seed, "init-local"));
  s.global_critic =
      make_critic(critic_config(config, CriticKind::global, patch_shape), derive_seed(config.seed, "init-global"));
  s.optimizer_g = make_adam(s.generator->parameters(), config.optimizer_g);
  s.optimizer_d = make_adam(concat(s.local_critic->parameters(), s.global_critic->parameters()), config.optimizer_d);
  return s;
}

// ---------------------------------------------------------------------------------------------
// One step

CriticTerms critic_terms(TrainState& state, const PatchBatch& b, const torch::Tensor& fake, bool class_on,
                         std::uint64_t iter_seed) {
  const auto& cfg = state.config;
  const auto& w = cfg.weights;
  const auto boxes = mask_bounding_boxes(b.mask, cfg.local_crop_margin);
  const auto real_local = crop_boxes(b.raw, boxes, cfg.local_shape);
  const auto fake_local = crop_boxes(fake, boxes, cfg.local_shape);
  const auto lm_local = label_maps_like(b.labels, real_local);
  auto& local = state.local_critic;
  auto& global = state.global_critic;
  auto real_l = local->forward(real_local, lm_local);
  auto fake_l = local->forward(fake_local, lm_local);
  auto real_g = global->forward(b.raw, b.label_map);
  auto fake_g = global->forward(fake, b.label_map);

  CriticTerms t;
  t.gp_local = gradient_penalty([&](const torch::Tensor& x) { return local->forward(x, lm_local).wscore; }, real_local,
                                fake_local, w.lambda_gp, derive_seed(cfg.seed, "gp-local", iter_seed));
  t.gp_global = gradient_penalty([&](const torch::Tensor& x) { return global->forward(x, b.label_map).wscore; }, b.raw,
                                 fake, w.lambda_gp, derive_seed(cfg.seed, "gp-global", iter_seed));
  t.adv_local = wgan_adv(real_l.wscore, fake_l.wscore, t.gp_local);
  t.adv_global = wgan_adv(real_g.wscore, fake_g.wscore, t.gp_global);
  const auto l_adv = 0.5 * (t.adv_local + t.adv_global);
  t.l_cls = torch::zeros({}, l_adv.options());
  if (class_on) {
    const auto targets = torch::cat({b.labels, torch::zeros_like(b.labels)});
    t.l_cls = 0.5 * (aux_class_loss(torch::cat({real_l.class_logits, fake_l.class_logits}), targets) +
                     aux_class_loss(torch::cat({real_g.class_logits, fake_g.class_logits}), targets));
  }
  t.total = critic_objective(l_adv, t.l_cls, w);
  return t;
}

GeneratorTerms generator_terms(TrainState& state, const PatchBatch& b, bool adversarial_on, bool class_on) {
  const auto& cfg = state.config;
  const auto& w = cfg.weights;
  GeneratorTerms t;
  t.output = state.generator->generate(b.masked, b.mask, b.label_map);
  const auto coarse = recon_loss(t.output.coarse, b.raw, b.mask, w.lambda1);
  const auto refined = recon_loss(t.output.refined, b.raw, b.mask, w.lambda1);
  t.l_masked = coarse.l_masked + refined.l_masked;
  t.l_global = coarse.l_global + refined.l_global;
  t.l_recon = t.l_masked + w.lambda1 * t.l_global;
  t.adv = torch::zeros({}, t.l_recon.options());
  t.l_cls = torch::zeros({}, t.l_recon.options());
  if (adversarial_on) {
    const auto boxes = mask_bounding_boxes(b.mask, cfg.local_crop_margin);
    const auto fake_local = crop_boxes(t.output.composite, boxes, cfg.local_shape);
    const auto lm_local = label_maps_like(b.labels, fake_local);
    auto local_out = state.local_critic->forward(fake_local, lm_local);
    auto global_out = state.global_critic->forward(t.output.composite, b.label_map);
    t.adv = 0.5 * (local_out.wscore.mean() + global_out.wscore.mean());
    if (class_on) {
      t.l_cls = 0.5 * (aux_class_loss(local_out.class_logits, b.labels) + aux_class_loss(global_out.class_logits, b.labels));
    }
  }
  t.total = generator_objective(t.adv, t.l_cls, t.l_recon, w);
  return t;
}

LossReport train_step(TrainState& state, std::span<const PatchSample* const> batch) {
  if (!state.generator || !state.optimizer_g) throw ValidationError("train_step needs an initialised state");
  if (batch.empty()) throw ValidationError("train_step needs a non-empty batch");
  const auto& cfg = state.config;
  const auto& w = cfg.weights;
  const long step = state.step;

  PatchBatch b = make_batch(batch);
  if (!(batch.front()->raw.shape() == state.patch_shape)) {
    throw ValidationError("batch patch shape " + to_string(batch.front()->raw.shape()) + " differs from the model's " +
                          to_string(state.patch_shape));
  }
  if ((b.labels < 1).any().item<bool>()) throw ValidationError("training samples must be benign or malignant");

  // Fresh noise inside every mask: the noise is the generator's latent input.
  {
    auto gen = at::detail::createCPUGenerator(derive_seed(cfg.seed, "train-noise", static_cast<std::uint64_t>(step)));
    auto noise = torch::rand(b.raw.sizes(), gen) * 2.0 - 1.0;
    b.masked = torch::where(b.mask > 0.5, noise, b.raw);
  }

  const bool critics_on = state.critics_active();
  const bool adversarial_on = state.adversarial_active();
  const bool class_on = state.class_active();

  LossReport report;
  if (critics_on) {
    torch::Tensor fake;
    {
      torch::NoGradGuard no_grad;
      fake = state.generator->generate(b.masked, b.mask, b.label_map).composite;
    }
    for (int it = 0; it < cfg.critic_steps_per_gen_step; ++it) {
      const auto iter_seed = static_cast<std::uint64_t>(step) * 1024 + static_cast<std::uint64_t>(it);
      const auto t = critic_terms(state, b, fake, class_on, iter_seed);
      ensure_finite("gp_local", t.gp_local, step);
      ensure_finite("gp_global", t.gp_global, step);
      ensure_finite("l_adv_local", t.adv_local, step);
      ensure_finite("l_adv_global", t.adv_global, step);
      ensure_finite("l_cls_D", t.l_cls, step);
      ensure_finite("l_D_total", t.total, step);

      state.optimizer_d->zero_grad();
      t.total.backward();
      state.optimizer_d->step();
      ++state.critic_updates;

      report.gp_local = scalar(t.gp_local);
      report.gp_global = scalar(t.gp_global);
      report.l_adv_local = scalar(t.adv_local);
      report.l_adv_global = scalar(t.adv_global);
      report.l_cls_D = class_on ? scalar(t.l_cls) : 0.0;
      report.l_D_total = scalar(t.total);
    }
  }

  const auto g = generator_terms(state, b, adversarial_on, class_on);
  ensure_finite("l_masked", g.l_masked, step);
  ensure_finite("l_global", g.l_global, step);
  ensure_finite("l_recon", g.l_recon, step);
  ensure_finite("l_cls_G", g.l_cls, step);
  ensure_finite("l_G_total", g.total, step);
  const auto& l_masked = g.l_masked;
  const auto& l_global = g.l_global;
  const auto& l_cls_g = g.l_cls;
  const auto& l_g = g.total;

  state.optimizer_g->zero_grad();
  l_g.backward();
  state.optimizer_g->step();
  ++state.generator_updates;

  report.l_masked = scalar(l_masked);
  report.l_global = scalar(l_global);
  report.l_recon = report.l_masked + w.lambda1 * report.l_global;
  report.l_cls_G = class_on && adversarial_on ? scalar(l_cls_g) : 0.0;
  report.l_G_total = scalar(l_g);

  auto& avg = state.averages;
  const double alpha = avg.count == 0 ? 1.0 : 0.02;
  avg.l_recon += alpha * (report.l_recon - avg.l_recon);
  avg.l_D_total += alpha * (report.l_D_total - avg.l_D_total);
  avg.l_G_total += alpha * (report.l_G_total - avg.l_G_total);
  ++avg.count;
  if (cfg.cls_trigger_recon > 0 && adversarial_on && avg.l_recon < cfg.cls_trigger_recon) state.cls_triggered = true;

  ++state.step;
  return report;
}

// ---------------------------------------------------------------------------------------------
// Persistence

void save_train_state(const TrainState& s, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string());
  save_parameters(*s.generator, dir / "generator", to_json(s.config.generator));
  save_parameters(*s.local_critic, dir / "local_critic", {{"kind", "local"}, {"input_shape", shape_json(s.config.local_shape)}});
  save_parameters(*s.global_critic, dir / "global_critic", {{"kind", "global"}, {"input_shape", shape_json(s.patch_shape)}});
  torch::save(*s.optimizer_g, (dir / "optimizer_g.pt").string());
  torch::save(*s.optimizer_d, (dir / "optimizer_d.pt").string());
  json state = {{"step", s.step},
                {"critic_updates", s.critic_updates},
                {"generator_updates", s.generator_updates},
                {"cls_triggered", s.cls_triggered},
                {"patch_shape", shape_json(s.patch_shape)},
                {"averages",
                 {{"l_recon", s.averages.l_recon},
                  {"l_D_total", s.averages.l_D_total},
                  {"l_G_total", s.averages.l_G_total},
                  {"count", s.averages.count}}},
                {"rng", {{"root_seed", s.config.seed}, {"scheme", "derive_seed(root, label, step)"}}},
                {"config", to_json(s.config)}};
  std::ofstream out(dir / "state.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "state.json").string());
  out << state.dump(2) << '\n';
}

TrainState load_train_state(const fs::path& dir) {
  std::ifstream in(dir / "state.json");
  if (!in) throw IoError("no training state at " + dir.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed state.json: " + std::string(e.what()));
  }
  try {
    const auto shape = j.at("patch_shape").get<std::vector<std::int64_t>>();
    TrainState s = init_train_state(gan_config_from_json(j.at("config")), Shape3{shape.at(0), shape.at(1), shape.at(2)});
    s.step = j.at("step").get<long>();
    s.critic_updates = j.at("critic_updates").get<long>();
    s.generator_updates = j.at("generator_updates").get<long>();
    s.cls_triggered = j.at("cls_triggered").get<bool>();
    const auto& a = j.at("averages");
    s.averages = {a.at("l_recon").get<double>(), a.at("l_D_total").get<double>(), a.at("l_G_total").get<double>(),
                  a.at("count").get<long>()};
    load_parameters(*s.generator, dir / "generator");
    load_parameters(*s.local_critic, dir / "local_critic");
    load_parameters(*s.global_critic, dir / "global_critic");
    torch::load(*s.optimizer_g, (dir / "optimizer_g.pt").string());
    torch::load(*s.optimizer_d, (dir / "optimizer_d.pt").string());
    return s;
  } catch (const json::exception& e) {
    throw FormatError("incomplete state.json in " + dir.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------------------------
// Loop

std::vector<std::size_t> batch_indices(std::size_t dataset_size, int batch_size, std::uint64_t seed, long step) {
  if (dataset_size == 0) throw ValidationError("empty dataset");
  std::vector<std::size_t> out;
  std::vector<std::size_t> perm;
  long cached_epoch = -1;
  for (int i = 0; i < batch_size; ++i) {
    const auto stream = static_cast<std::size_t>(step) * static_cast<std::size_t>(batch_size) + static_cast<std::size_t>(i);
    const auto epoch = static_cast<long>(stream / dataset_size);
    if (epoch != cached_epoch) {
      perm.resize(dataset_size);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(seed, "data-order", static_cast<std::uint64_t>(epoch)));
      std::shuffle(perm.begin(), perm.end(), rng);
      cached_epoch = epoch;
    }
    out.push_back(perm[stream % dataset_size]);
  }
  return out;
}

namespace {

fs::path checkpoint_dir(const fs::path& out, long step) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%07ld", step);
  return out / "checkpoints" / name;
}

bool is_boundary(const GanConfig& c, long step) {
  return step == c.phases.recon_only_steps || step == c.phases.adv_start_step || step == c.phases.cls_start_step;
}

}  // namespace

TrainState train(std::span<const PatchSample> dataset, const GanConfig& config, const TrainOptions& options) {
  validate(config);
  if (dataset.empty()) throw ValidationError("GAN training needs a non-empty dataset");
  const auto shape = dataset.front().raw.shape();
  for (const auto& s : dataset) {
    if (!(s.raw.shape() == shape)) throw ValidationError("all training patches must share one shape");
  }

  TrainState state = options.resume_from ? load_train_state(*options.resume_from) : init_train_state(config, shape);
  if (options.resume_from) {
    if (!(state.patch_shape == shape)) throw ValidationError("resumed checkpoint was trained on a different patch shape");
    state.config.total_steps = config.total_steps;
    validate(state.config);
  }
  const auto& cfg = state.config;

  std::error_code ec;
  fs::create_directories(options.out_dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create output directory " + options.out_dir.string());
  std::ofstream log(options.out_dir / "train_log.jsonl", std::ios::app);
  if (!log) throw IoError("cannot open training log in " + options.out_dir.string());

  const auto start = std::chrono::steady_clock::now();
  if (state.step >= cfg.total_steps) save_train_state(state, checkpoint_dir(options.out_dir, state.step));

  while (state.step < cfg.total_steps) {
    const auto idx = batch_indices(dataset.size(), cfg.batch_size, cfg.seed, state.step);
    std::vector<const PatchSample*> batch;
    for (auto i : idx) batch.push_back(&dataset[i]);
    LossReport report;
    try {
      report = train_step(state, batch);
    } catch (const NonFiniteLossError& e) {
      log << json{{"step", e.step()}, {"error", e.what()}, {"term", e.term()}}.dump() << '\n';
      log.flush();
      throw;
    }
    auto line = to_json(report);
    line["step"] = state.step - 1;
    line["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << line.dump() << '\n';
    if (options.on_step) options.on_step(state.step - 1, report);
    if (state.step % cfg.checkpoint_every == 0 || is_boundary(cfg, state.step) || state.step == cfg.total_steps) {
      log.flush();
      save_train_state(state, checkpoint_dir(options.out_dir, state.step));
    }
  }
  return state;
}

// ---------------------------------------------------------------------------------------------
// Synthesis

std::vector<Array3f> inpaint(TrainState& state, std::span<const PatchSample> contexts, DomainLabel target,
                             std::uint64_t seed) {
  if (target != DomainLabel::benign && target != DomainLabel::malignant) {
    throw ValidationError("synthesis target must be benign or malignant");
  }
  torch::NoGradGuard no_grad;
  std::vector<Array3f> out;
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, state.config.batch_size));
  for (std::size_t start = 0; start < contexts.size(); start += chunk) {
    std::vector<PatchSample> part;
    for (std::size_t i = start; i < std::min(contexts.size(), start + chunk); ++i) {
      PatchSample s = contexts[i];
      s.masked = apply_noise_mask(s.raw, s.mask, derive_seed(seed, "inpaint-noise", i));
      s.label = target;
      part.push_back(std::move(s));
    }
    auto b = make_batch(part);
    auto composite = state.generator->generate(b.masked, b.mask, b.label_map).composite;
    for (std::int64_t n = 0; n < composite.size(0); ++n) out.push_back(from_tensor(composite[n]));
  }
  return out;
}

std::vector<PatchSample> synthesize_dataset(TrainState& state, std::span<const PatchSample> source, DomainLabel target,
                                            int n, std::uint64_t seed) {
  if (n < 0) throw ValidationError("synthesis count must be >= 0");
  if (n == 0) return {};
  if (source.empty()) throw ValidationError("synthesis needs at least one source patch");
  if (state.step == 0) std::cerr << "warning: synthesizing from an untrained generator\n";

  std::mt19937_64 pick(derive_seed(seed, "synth-pick"));
  std::uniform_int_distribution<std::size_t> any(0, source.size() - 1);
  std::vector<PatchSample> contexts;
  contexts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& src = source[any(pick)];
    PatchSample s;
    s.raw = src.raw;
    s.mask = make_spherical_mask(src.diameter_mm, state.config.spacing, src.raw.shape());
    s.diameter_mm = src.diameter_mm;
    contexts.push_back(std::move(s));
  }
  const auto noise_seed = derive_seed(seed, "synth-noise");
  auto composites = inpaint(state, contexts, target, noise_seed);
  std::vector<PatchSample> out;
  out.reserve(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    PatchSample s;
    s.masked = apply_noise_mask(contexts[i].raw, contexts[i].mask, derive_seed(noise_seed, "inpaint-noise", i));
    s.raw = std::move(composites[i]);
    s.mask = std::move(contexts[i].mask);
    s.label = target;
    s.diameter_mm = contexts[i].diameter_mm;
    s.synthetic = true;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace inpaint_gan
