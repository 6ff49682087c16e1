#include "criteria.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "attention_oracle.hpp"
#include "inpaint_gan/attention.hpp"
#include "inpaint_gan/classifier.hpp"
#include "inpaint_gan/gan_trainer.hpp"
#include "inpaint_gan/losses.hpp"
#include "inpaint_gan/metrics.hpp"
#include "inpaint_gan/patch_pipeline.hpp"
#include "inpaint_gan/seeding.hpp"
#include "inpaint_gan/tensor_bridge.hpp"
#include "loss_oracles.hpp"
#include "mask_oracle.hpp"
#include "metric_oracles.hpp"

namespace acceptance {

using namespace inpaint_gan;
using test_support::as_doubles;
namespace fs = std::filesystem;

std::string fmt(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  return buf;
}

std::string sci(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", value);
  return buf;
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<const PatchSample*> pointers(const std::vector<PatchSample>& samples) {
  std::vector<const PatchSample*> out;
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

PhantomConfig phantom_shape(const Shape3& shape, double mask_min_mm, double mask_max_mm) {
  PhantomConfig pc;
  pc.shape = shape;
  pc.mask_diameter_min_mm = mask_min_mm;
  pc.mask_diameter_max_mm = mask_max_mm;
  return pc;
}

/// Networks small enough to run hundreds of steps on 16 x 16 x 8 patches within seconds.
GanConfig tiny_gan(long total, long recon_only, long adv_start, long cls_start) {
  GanConfig c;
  c.generator.base_channels = 4;
  c.generator.depth = 1;
  c.critic_base_channels = 4;
  c.critic_depth = 2;
  c.critic_steps_per_gen_step = 1;
  c.local_shape = {8, 8, 4};
  c.batch_size = 4;
  c.total_steps = total;
  c.phases = {recon_only, adv_start, cls_start};
  c.seed = 11;
  return c;
}

std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool unchanged(torch::nn::Module& m, const std::vector<torch::Tensor>& before) {
  const auto now = m.parameters();
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (!torch::equal(now[i], before[i])) return false;
  }
  return true;
}

double max_field_diff(const LossReport& a, const LossReport& b) {
  const double pa[] = {a.l_masked, a.l_global, a.l_recon, a.gp_local, a.gp_global, a.l_adv_local,
                       a.l_adv_global, a.l_cls_D, a.l_cls_G, a.l_D_total, a.l_G_total};
  const double pb[] = {b.l_masked, b.l_global, b.l_recon, b.gp_local, b.gp_global, b.l_adv_local,
                       b.l_adv_global, b.l_cls_D, b.l_cls_G, b.l_D_total, b.l_G_total};
  double m = 0.0;
  for (std::size_t i = 0; i < std::size(pa); ++i) m = std::max(m, std::abs(pa[i] - pb[i]));
  return m;
}

}  // namespace

// 1 -------------------------------------------------------------------------------------------

Outcome loss_oracles(const Context&) {
  Stopwatch watch;
  torch::manual_seed(101);
  // Double precision so the 1e-6 tolerance measures the formulas, not float32 rounding.
  const auto f64 = torch::TensorOptions().dtype(torch::kDouble);
  double recon_err = 0.0, wgan_err = 0.0, aux_err = 0.0, gp_err = 0.0, analytic_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::int64_t n = 1 + t % 4;
    const std::vector<std::int64_t> shape{n, 1, 2 + t % 3, 3 + t % 4, 4};
    auto pred = torch::rand(shape, f64) * 2 - 1;
    auto target = torch::rand(shape, f64) * 2 - 1;
    auto mask = (torch::rand(shape, f64) < 0.3).to(torch::kDouble);
    const double lambda1 = 0.02 * t;
    const auto got = recon_loss(pred, target, mask, lambda1);
    const auto ref = test_support::recon_reference(pred, target, mask, lambda1);
    recon_err = std::max({recon_err, std::abs(got.l_masked.item<double>() - ref.masked),
                          std::abs(got.l_global.item<double>() - ref.global),
                          std::abs(got.l_recon.item<double>() - ref.recon)});
  }
  for (int t = 0; t < 100; ++t) {
    const std::int64_t n = 1 + t % 8;
    auto real = torch::randn({n}, f64) * 3, fake = torch::randn({n}, f64) * 3;
    const double gp = torch::rand({1}).item<double>();
    const double ref = test_support::wgan_reference(as_doubles(real), as_doubles(fake), gp);
    const auto r = as_doubles(real), f = as_doubles(fake);
    wgan_err = std::max({wgan_err, std::abs(wgan_adv(real, fake, torch::tensor(gp, f64)).item<double>() - ref),
                         std::abs(wgan_adv(r, f, gp) - ref)});
  }
  for (int t = 0; t < 100; ++t) {
    const std::int64_t n = 1 + t % 8;
    auto logits = torch::randn({n, 3}, f64) * 4;
    auto targets = torch::randint(0, 3, {n}, torch::kInt64);
    aux_err = std::max(aux_err, std::abs(aux_class_loss(logits, targets).item<double>() -
                                         test_support::aux_reference(logits, targets)));
  }
  const double lambda = 10.0;
  for (int t = 0; t < 100; ++t) {
    const std::int64_t n = 1 + t % 5;
    auto real = torch::rand({n, 1, 2, 3, 3}, f64) * 2 - 1, fake = torch::rand({n, 1, 2, 3, 3}, f64) * 2 - 1;
    auto w = torch::randn({1, 1, 2, 3, 3}, f64);
    auto critic = [&](const torch::Tensor& x) { return (w * torch::tanh(x)).sum({1, 2, 3, 4}); };
    const auto seed = static_cast<std::uint64_t>(t);
    const double got = gradient_penalty(critic, real, fake, lambda, seed).item<double>();
    const double ref = test_support::gp_tanh_reference(w, real, fake, test_support::gp_eps(n, seed, torch::kDouble), lambda);
    gp_err = std::max(gp_err, std::abs(got - ref));
  }
  {
    auto real = torch::rand({6, 1, 3, 3, 3}, f64), fake = torch::rand({6, 1, 3, 3, 3}, f64);
    auto u = torch::randn({1, 1, 3, 3, 3}, f64);
    u = u / u.norm();
    auto unit = [&](const torch::Tensor& x) { return (x * u).sum({1, 2, 3, 4}); };
    auto triple = [&](const torch::Tensor& x) { return (x * (3.0 * u)).sum({1, 2, 3, 4}); };
    auto constant = [&](const torch::Tensor& x) { return torch::full({x.size(0)}, 0.3, f64); };
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      analytic_err = std::max({analytic_err, std::abs(gradient_penalty(unit, real, fake, lambda, seed).item<double>()),
                               std::abs(gradient_penalty(constant, real, fake, lambda, seed).item<double>() - lambda),
                               std::abs(gradient_penalty(triple, real, fake, lambda, seed).item<double>() - 4 * lambda)});
    }
  }
  const double seconds = watch.seconds();
  const bool pass = std::max({recon_err, wgan_err, aux_err, gp_err, analytic_err}) <= 1e-6 && seconds < 30.0;
  return {pass, "max |err| recon " + sci(recon_err) + ", wgan " + sci(wgan_err) + ", aux " + sci(aux_err) + ", gp " +
                    sci(gp_err) + ", analytic gp " + sci(analytic_err) + " (tol 1e-6, 100 cases each in double precision, < 30 s)"};
}

// 2 -------------------------------------------------------------------------------------------

Outcome attention_oracle(const Context&) {
  std::mt19937_64 rng(202);
  torch::manual_seed(202);
  double out_err = 0.0, weight_err = 0.0, row_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::int64_t c = 1 + static_cast<std::int64_t>(rng() % 3);
    const std::int64_t d = 1 + static_cast<std::int64_t>(rng() % 4), h = 1 + static_cast<std::int64_t>(rng() % 4),
                       w = 1 + static_cast<std::int64_t>(rng() % 4);
    const std::int64_t kmax = std::min<std::int64_t>({3, d, h, w});
    const auto k = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(kmax));
    const double scale = std::uniform_real_distribution<double>(1.0, 20.0)(rng);
    auto features = torch::randn({1, c, d, h, w});
    auto mask = (torch::rand({1, 1, d, h, w}) < 0.4).to(torch::kFloat);
    const std::int64_t l = d * h * w;
    const auto bg = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(l));
    mask.view({-1})[bg] = 0.0f;
    if (l > 1) mask.view({-1})[(bg + 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(l - 1))) % l] = 1.0f;

    const auto got = contextual_attention(features, mask, k, scale);
    const auto ref = test_support::attention_reference(features[0], mask[0][0], static_cast<int>(k), scale);
    out_err = std::max(out_err, max_abs_diff(as_doubles(got.output), ref.output));
    weight_err = std::max(weight_err, max_abs_diff(as_doubles(got.weights), ref.weights));
    const auto sums = as_doubles(got.weights[0].sum(1));
    const auto m = as_doubles(mask);
    for (std::int64_t f = 0; f < l; ++f) {
      if (m[f] > 0.5) row_err = std::max(row_err, std::abs(sums[f] - 1.0));
    }
  }
  const bool pass = out_err <= 1e-5 && weight_err <= 1e-5 && row_err <= 1e-6;
  return {pass, "200 cases: max |err| output " + sci(out_err) + ", weights " + sci(weight_err) + " (tol 1e-5); max |row sum - 1| " +
                    sci(row_err) + " (tol 1e-6)"};
}

// 3 -------------------------------------------------------------------------------------------

namespace {

struct Probe {
  double analytic;
  double numeric;
};

double relative_error(const Probe& p) {
  return std::abs(p.analytic - p.numeric) / std::max({std::abs(p.analytic), std::abs(p.numeric), 1e-6});
}

/// Central difference of `f` with respect to element `index` of `target`, which is restored afterwards.
template <typename F>
double central_difference(torch::Tensor target, std::int64_t index, double h, F&& f) {
  torch::NoGradGuard no_grad;
  auto flat = target.view({-1});
  const double original = flat[index].item<double>();
  flat[index] = original + h;
  const double up = f();
  flat[index] = original - h;
  const double down = f();
  flat[index] = original;
  return (up - down) / (2 * h);
}

}  // namespace

Outcome gradient_checks(const Context&) {
  Stopwatch watch;
  GanConfig config;
  config.generator.base_channels = 2;
  config.generator.depth = 1;
  config.critic_base_channels = 2;
  config.critic_depth = 1;
  config.local_shape = {4, 4, 2};
  config.phases = {0, 0, 0};
  config.seed = 33;
  const Shape3 patch{8, 8, 6};
  const auto samples = phantom_dataset(2, 0.5, 303, phantom_shape(patch, 3.0, 5.0)).samples;
  auto state = init_train_state(config, patch);
  state.generator->to(torch::kDouble);
  state.local_critic->to(torch::kDouble);
  state.global_critic->to(torch::kDouble);

  PatchBatch batch = make_batch(std::span<const PatchSample>(samples));
  batch.raw = batch.raw.to(torch::kDouble);
  batch.masked = batch.masked.to(torch::kDouble);
  batch.mask = batch.mask.to(torch::kDouble);
  batch.label_map = batch.label_map.to(torch::kDouble);
  torch::Tensor fake;
  {
    torch::NoGradGuard no_grad;
    fake = state.generator->generate(batch.masked, batch.mask, batch.label_map).composite.clone();
  }
  const std::uint64_t gp_seed = 5;
  auto g_loss = [&] { return generator_terms(state, batch, true, true).total; };
  auto d_loss = [&] { return critic_terms(state, batch, fake, true, gp_seed).total; };

  std::mt19937_64 rng(404);
  const double h = 1e-6;
  std::vector<Probe> probes;
  auto pick = [&](const torch::Tensor& t) {
    return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(t.numel()));
  };
  auto param_probes = [&](torch::nn::Module& module, auto&& loss, int count) {
    auto params = module.parameters();
    for (int i = 0; i < count; ++i) {
      auto p = params[rng() % params.size()];
      const auto index = pick(p);
      state.generator->zero_grad();
      state.local_critic->zero_grad();
      state.global_critic->zero_grad();
      loss().backward();
      const double analytic = p.grad().view({-1})[index].item<double>();
      probes.push_back({analytic, central_difference(p.data(), index, h, [&] { return torch::Tensor(loss()).item<double>(); })});
    }
  };
  auto input_probes = [&](torch::Tensor& input, auto&& loss, int count) {
    for (int i = 0; i < count; ++i) {
      const auto index = pick(input);
      input.requires_grad_(true);
      const torch::Tensor grad = torch::autograd::grad({torch::Tensor(loss())}, {input})[0];
      input = input.detach();
      probes.push_back({grad.view({-1})[index].item<double>(),
                        central_difference(input, index, h, [&] { return torch::Tensor(loss()).item<double>(); })});
    }
  };

  param_probes(*state.generator, g_loss, 5);
  input_probes(batch.masked, g_loss, 5);
  // The critic objective spans both critics; probe their parameters alternately.
  param_probes(*state.local_critic, d_loss, 3);
  param_probes(*state.global_critic, d_loss, 2);
  input_probes(batch.raw, d_loss, 3);
  input_probes(fake, d_loss, 2);

  double worst = 0.0;
  for (const auto& p : probes) worst = std::max(worst, relative_error(p));
  const double seconds = watch.seconds();
  const bool pass = worst <= 1e-3 && seconds < 120.0 && probes.size() == 20;
  return {pass, std::to_string(probes.size()) + " probes (generator params/input, critic params/inputs): max rel err " +
                    sci(worst) + " (tol 1e-3, h " + sci(h) + ", double precision, < 120 s)"};
}

// 4 -------------------------------------------------------------------------------------------

Outcome mask_geometry(const Context&) {
  std::mt19937_64 rng(505);
  auto uni = [&](long long lo, long long hi) {
    return lo + static_cast<long long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  int matched = 0;
  long long largest_miss = 0;
  for (int t = 0; t < 50; ++t) {
    // Spacing a/4 mm and diameter b/4 mm keep every product exactly representable.
    std::array<long long, 3> a = {uni(2, 12), uni(2, 12), uni(2, 12)};
    if (t == 0) a = {4, 4, 8};
    if (t % 5 == 1) a = {4, 4, 8};
    const long long b = uni(0, 120);
    const Shape3 shape{uni(4, 40), uni(4, 40), uni(4, 24)};
    const auto mask = make_spherical_mask(static_cast<double>(b) / 4.0,
                                          {a[0] / 4.0, a[1] / 4.0, a[2] / 4.0}, shape);
    const auto count = static_cast<long long>(std::count(mask.values().begin(), mask.values().end(), 1.0f));
    const auto ones_or_zeros = std::all_of(mask.values().begin(), mask.values().end(),
                                           [](float v) { return v == 0.0f || v == 1.0f; });
    const auto expected = test_support::scan_count(b, a, shape);
    if (count == expected && ones_or_zeros) {
      ++matched;
    } else {
      largest_miss = std::max(largest_miss, std::abs(count - expected));
    }
  }
  return {matched == 50, std::to_string(matched) + "/50 triples match the exhaustive scan exactly (11 at spacing 1x1x2 mm)" +
                             (matched == 50 ? "" : ", largest miss " + std::to_string(largest_miss) + " voxels")};
}

// 5 -------------------------------------------------------------------------------------------

namespace {

/// l_recon per step on the same batch, stopping after `max_steps` or once it falls below `stop_below`.
std::vector<double> overfit_run(const std::vector<PatchSample>& samples, const GanConfig& config, const Shape3& patch,
                                long max_steps, double stop_below) {
  auto state = init_train_state(config, patch);
  const auto batch = pointers(samples);
  std::vector<double> curve;
  while (static_cast<long>(curve.size()) < max_steps) {
    curve.push_back(train_step(state, batch).l_recon);
    if (curve.back() < stop_below) break;
  }
  return curve;
}

}  // namespace

Outcome overfit_convergence(const Context&) {
  Stopwatch watch;
  const PhantomConfig pc;
  const auto samples = phantom_dataset(4, 0.5, 505, pc).samples;
  GanConfig config;
  config.generator.base_channels = 8;
  config.generator.depth = 2;
  config.critic_base_channels = 4;
  config.critic_depth = 2;
  config.local_shape = {8, 8, 4};
  config.batch_size = 4;
  config.total_steps = 200;
  config.phases = {200, 200, 200};
  config.optimizer_g.lr = 1e-3;
  config.seed = 5;
  const double initial = overfit_run(samples, config, pc.shape, 1, 0.0).front();
  const auto first = overfit_run(samples, config, pc.shape, 200, 0.25 * initial);
  // Determinism: an independent run over the same steps must reproduce every loss bit for bit.
  const auto second = overfit_run(samples, config, pc.shape, static_cast<long>(first.size()), 0.0);
  const bool reached = first.back() < 0.25 * initial;
  const bool deterministic = first == second && first.front() == initial;
  const double seconds = watch.seconds();
  const bool pass = reached && deterministic && seconds < 180.0;
  return {pass, "phase-1 l_recon " + fmt(initial, 4) + " -> " + fmt(first.back(), 4) + "; below 25% " +
                    (reached ? "after " + std::to_string(first.size()) + " steps" : std::string("not reached")) +
                    " (limit 200); rerun " + (deterministic ? "bit-identical" : "DIFFERS") + "; " + fmt(seconds, 1) +
                    " s (< 180 s)"};
}

// 6 -------------------------------------------------------------------------------------------

Outcome compositing_and_gating(const Context&) {
  const Shape3 patch{16, 16, 8};
  const auto samples = phantom_dataset(16, 0.5, 606, phantom_shape(patch, 6.0, 8.0)).samples;
  const auto config = tiny_gan(500, 100, 200, 300);
  auto state = init_train_state(config, patch);

  long generate_calls = 0, composite_violations = 0;
  state.generator->set_observer([&](const torch::Tensor& masked, const torch::Tensor& mask, const GeneratorOutput& out) {
    ++generate_calls;
    const auto outside = mask < 0.5;
    if (!torch::equal(out.composite.masked_select(outside), masked.masked_select(outside))) ++composite_violations;
  });

  const auto local_before = snapshot(*state.local_critic);
  const auto global_before = snapshot(*state.global_critic);
  const auto generator_before = snapshot(*state.generator);
  bool critics_frozen = true, generator_moved = false, cls_zero_early = true, cls_active_late = false;
  long critic_updates_phase1 = 0;
  for (long step = 0; step < config.total_steps; ++step) {
    const auto indices = batch_indices(samples.size(), config.batch_size, config.seed, step);
    std::vector<const PatchSample*> batch;
    for (auto i : indices) batch.push_back(&samples[i]);
    const auto report = train_step(state, batch);
    if (step < config.phases.recon_only_steps) {
      critics_frozen = critics_frozen && unchanged(*state.local_critic, local_before) &&
                       unchanged(*state.global_critic, global_before);
      critic_updates_phase1 = state.critic_updates;
      if (step == 0) generator_moved = !unchanged(*state.generator, generator_before);
    }
    if (step < config.phases.cls_start_step) {
      cls_zero_early = cls_zero_early && report.l_cls_D == 0.0 && report.l_cls_G == 0.0;
    } else {
      cls_active_late = cls_active_late || (report.l_cls_D > 0.0 && report.l_cls_G > 0.0);
    }
  }
  const bool pass = composite_violations == 0 && generate_calls >= 500 && critics_frozen && critic_updates_phase1 == 0 &&
                    generator_moved && cls_zero_early && cls_active_late;
  return {pass, std::to_string(generate_calls) + " generate calls, " + std::to_string(composite_violations) +
                    " with composite != context outside the mask; critics " +
                    (critics_frozen ? "bit-identical" : "CHANGED") + " through phase 1 (generator " +
                    (generator_moved ? "updated" : "NOT updated") + "); L_cls " + (cls_zero_early ? "exactly 0" : "NONZERO") +
                    " before step 300, " + (cls_active_late ? "active" : "INACTIVE") + " after"};
}

// 9 -------------------------------------------------------------------------------------------

Outcome metric_correctness(const Context&) {
  std::mt19937_64 rng(909);
  int exact = 0;
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng() % 60);
    const int levels = 1 + static_cast<int>(rng() % 12);  // few levels force ties
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) / levels;
      labels[i] = static_cast<int>(rng() % 2);
    }
    labels[0] = 1;
    labels[1] = 0;
    exact += auc(scores, labels) == test_support::pairwise_auc(scores, labels);
  }
  std::vector<double> constant(157, 0.0);
  std::vector<int> truth(157, 0);
  std::fill(truth.begin(), truth.begin() + 24, 1);
  const auto m = metrics_from_scores(constant, truth);
  const bool table_ok = m.acc == 133.0 / 157.0 && std::abs(m.acc - 0.847) < 5e-4 && m.sen == 0.0 && m.spe == 1.0 &&
                        m.tp + m.tn + m.fp + m.fn == 157 && m.auc == 0.5;
  return {exact == 500 && table_ok, std::to_string(exact) + "/500 AUCs equal the pairwise Mann-Whitney count exactly; " +
                                        "constant benign on 133/24: acc " + fmt(m.acc, 4) + ", sen " + fmt(m.sen, 1) +
                                        ", spe " + fmt(m.spe, 1)};
}

// 10 ------------------------------------------------------------------------------------------

Outcome bookkeeping(const Context&) {
  const Shape3 patch{16, 16, 8};
  const auto pc = phantom_shape(patch, 6.0, 8.0);
  auto state = init_train_state(tiny_gan(1, 1, 1, 1), patch);
  // 233 real malignant training patches, as in the source split.
  std::vector<PatchSample> train;
  std::vector<PatchSample> malignant;
  for (std::uint64_t seed = 0; malignant.size() < 233; ++seed) {
    for (auto& s : phantom_dataset(50, 0.5, 1000 + seed, pc).samples) {
      if (s.label == DomainLabel::malignant && malignant.size() < 233) malignant.push_back(s);
    }
  }
  for (auto& s : phantom_dataset(80, 0.5, 1010, pc).samples) {
    if (s.label == DomainLabel::benign) train.push_back(s);
  }
  train.insert(train.end(), malignant.begin(), malignant.end());

  const auto synthetic = synthesize_dataset(state, malignant, DomainLabel::malignant, 463, 10);
  std::size_t valid = 0;
  for (const auto& s : synthetic) {
    validate(s);
    valid += s.synthetic && s.label == DomainLabel::malignant;
  }
  train.insert(train.end(), synthetic.begin(), synthetic.end());
  const auto malignant_total = std::count_if(train.begin(), train.end(), [](const PatchSample& s) {
    return s.label == DomainLabel::malignant;
  });
  const auto benign_total = std::count_if(train.begin(), train.end(), [](const PatchSample& s) {
    return s.label == DomainLabel::benign;
  });
  const bool pass = synthetic.size() == 463 && valid == 463 && malignant_total == 696 && benign_total == 40;
  return {pass, "233 real + " + std::to_string(synthetic.size()) + " synthetic (" + std::to_string(valid) +
                    " flagged malignant/synthetic) = " + std::to_string(malignant_total) +
                    " malignant training patches (expected 696); benign untouched: " + std::to_string(benign_total)};
}

// 11 ------------------------------------------------------------------------------------------

Outcome reproducibility(const Context& context) {
  const Shape3 patch{16, 16, 8};
  const auto samples = phantom_dataset(12, 0.5, 1111, phantom_shape(patch, 6.0, 8.0)).samples;
  auto config = tiny_gan(14, 3, 5, 8);
  config.checkpoint_every = 6;
  const auto root = context.work / "reproducibility";
  fs::remove_all(root);

  std::vector<LossReport> full(config.total_steps), again(config.total_steps), resumed;
  TrainOptions a;
  a.out_dir = root / "a";
  a.on_step = [&](long step, const LossReport& r) { full[step] = r; };
  train(samples, config, a);
  TrainOptions b;
  b.out_dir = root / "b";
  b.on_step = [&](long step, const LossReport& r) { again[step] = r; };
  train(samples, config, b);
  TrainOptions c;
  c.out_dir = root / "c";
  c.resume_from = root / "a" / "checkpoints" / "step_0000006";
  c.on_step = [&](long, const LossReport& r) { resumed.push_back(r); };
  train(samples, config, c);

  double resume_diff = 0.0;
  for (std::size_t i = 0; i < resumed.size(); ++i) resume_diff = std::max(resume_diff, max_field_diff(resumed[i], full[6 + i]));
  const bool runs_equal = full == again;

  PatchDataset data;
  data.train = phantom_dataset(24, 0.75, 1112).samples;
  data.val = phantom_dataset(8, 0.5, 1113).samples;
  data.test = phantom_dataset(8, 0.5, 1114).samples;
  ClassifierConfig cls;
  cls.desk_base_channels = 4;
  cls.epochs = 2;
  cls.batch_size = 8;
  const std::vector<std::uint64_t> seeds = {0, 1};
  const auto r1 = to_json(run_experiment(data, Regime::raw_weighted, cls, seeds)).dump();
  const auto r2 = to_json(run_experiment(data, Regime::raw_weighted, cls, seeds)).dump();

  const bool pass = resumed.size() == 8 && resume_diff <= 1e-6 && runs_equal && r1 == r2;
  return {pass, "resume at step 6 of 14: " + std::to_string(resumed.size()) + " steps, max LossReport diff " +
                    sci(resume_diff) + " (tol 1e-6); repeated GAN run " + (runs_equal ? "identical" : "DIFFERS") +
                    "; repeated classifier experiment report " + (r1 == r2 ? "identical" : "DIFFERS")};
}

}  // namespace acceptance
