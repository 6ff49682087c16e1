#include "inpaint_gan/cli.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <span>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "inpaint_gan/classifier.hpp"
#include "inpaint_gan/config_json.hpp"
#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/fixture.hpp"
#include "inpaint_gan/gan_trainer.hpp"
#include "inpaint_gan/seeding.hpp"

namespace inpaint_gan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_text_file(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  ConfigReader r(j, "pipeline_config");
  r.read("target_spacing", c.target_spacing);
  r.read("patch_shape", c.patch_shape);
  auto w = r.child("hu_window");
  w.read("low", c.hu_window.low);
  w.read("high", c.hu_window.high);
  w.finish();
  auto n = r.child("noise");
  n.read("low", c.noise.low);
  n.read("high", c.noise.high);
  n.finish();
  r.read("seed", c.seed);
  r.finish();
  validate(c);
  return c;
}

json to_json(const PipelineConfig& c) {
  return {{"target_spacing", vec_json(c.target_spacing)},
          {"patch_shape", shape_json(c.patch_shape)},
          {"hu_window", {{"low", c.hu_window.low}, {"high", c.hu_window.high}}},
          {"noise", {{"low", c.noise.low}, {"high", c.noise.high}}},
          {"seed", c.seed}};
}

bool is_within(const fs::path& inner, const fs::path& outer) {
  const auto a = fs::weakly_canonical(inner), b = fs::weakly_canonical(outer);
  auto ai = a.begin();
  for (auto bi = b.begin(); bi != b.end(); ++bi, ++ai) {
    if (bi->empty()) continue;
    if (ai == a.end() || *ai != *bi) return false;
  }
  return true;
}

// Outputs must never land inside an input.
void require_separate(const fs::path& out, std::initializer_list<fs::path> inputs) {
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    if (is_within(out, in) || is_within(in, out)) {
      throw ValidationError("--out " + out.string() + " overlaps input " + in.string());
    }
  }
}

void require_dir(const fs::path& p, const char* flag) {
  if (!fs::is_directory(p)) throw ValidationError(std::string(flag) + " " + p.string() + " is not a directory");
}

void require_file(const fs::path& p, const char* flag) {
  if (!fs::is_regular_file(p)) throw ValidationError(std::string(flag) + " " + p.string() + " is not a file");
}

struct Options {
  // shared
  std::string out, config, data;
  std::optional<std::uint64_t> seed;
  // make-phantom
  int n_train = 240, n_val = 30, n_test = 30;
  double benign_fraction = 0.8;
  // extract-patches
  std::string annotations, volumes, splits;
  // train-gan / synthesize
  std::string resume, ckpt, source, label;
  int count = 0;
  // classifier
  std::string regime, split = "test";
  std::vector<std::uint64_t> seeds;
  double threshold = 0.5;
  // report
  std::vector<std::string> inputs;
};

using Runner = std::function<void(const Options&, std::ostream&)>;

// Validation (exit 1) happens in each `prepare_*`; the returned runner performs all side effects.

Runner prepare_make_phantom(const Options& o) {
  FixtureConfig config;
  config.n_train = o.n_train;
  config.n_val = o.n_val;
  config.n_test = o.n_test;
  config.benign_fraction = o.benign_fraction;
  if (config.n_train < 1 || config.n_val < 1 || config.n_test < 1) throw ValidationError("split sizes must be >= 1");
  if (!(config.benign_fraction > 0 && config.benign_fraction < 1)) throw ValidationError("--benign-fraction must lie in (0, 1)");
  const auto seed = o.seed.value_or(0);
  return [config, seed](const Options& o, std::ostream& out) {
    const auto paths = make_phantom_fixture(o.out, seed, config);
    // Lets extract-patches reproduce the fixture's patches from its volumes.
    write_json_file(to_json(fixture_pipeline_config(config)), paths.root / "pipeline.json");
    out << "fixture written to " << paths.root.string() << '\n';
  };
}

Runner prepare_extract(const Options& o) {
  require_file(o.annotations, "--annotations");
  require_dir(o.volumes, "--volumes");
  require_separate(o.out, {o.volumes, o.annotations});
  auto annotations = parse_annotations(o.annotations);
  for (const auto& a : annotations) consensus_malignancy(a.scores);
  std::map<std::string, std::string> splits;
  if (!o.splits.empty()) {
    require_file(o.splits, "--splits");
    try {
      splits = read_splits(o.splits);
    } catch (const FormatError& e) {
      throw ValidationError(e.what());
    }
  }
  PipelineConfig config;
  if (!o.config.empty()) config = pipeline_config_from_json(read_json_file(o.config));
  if (o.seed) config.seed = *o.seed;
  for (const auto& a : annotations) {
    if (!fs::is_regular_file(fs::path(o.volumes) / (a.source_volume_id + ".vol"))) {
      throw ValidationError("annotation references missing volume " + a.source_volume_id);
    }
  }
  return [annotations, splits, config](const Options& o, std::ostream& out) {
    const auto rows = extract_patch_dataset(annotations, o.volumes, splits, config, o.out);
    out << rows.size() << " patches written to " << o.out << '\n';
  };
}

Runner prepare_train_gan(const Options& o) {
  require_dir(o.data, "--data");
  require_separate(o.out, {o.data, o.resume});
  if (!o.resume.empty()) {
    require_dir(o.resume, "--resume");
    if (o.seed) throw ValidationError("--seed conflicts with --resume (the checkpoint fixes the seed)");
  }
  GanConfig config;
  if (!o.config.empty()) config = gan_config_from_json(read_json_file(o.config));
  if (o.seed) config.seed = *o.seed;
  validate(config);
  return [config](const Options& o, std::ostream& out) {
    const auto data = load_patch_dataset(o.data, derive_seed(config.seed, "dataset-noise"));
    std::vector<PatchSample> train_set;
    for (const auto& s : data.train) {
      if (!s.synthetic) train_set.push_back(s);
    }
    TrainOptions options;
    options.out_dir = o.out;
    if (!o.resume.empty()) options.resume_from = fs::path(o.resume);
    fs::create_directories(o.out);
    write_json_file(to_json(config), fs::path(o.out) / "gan_config.json");
    const auto state = train(train_set, config, options);
    char name[32];
    std::snprintf(name, sizeof(name), "step_%07ld", state.step);
    out << "trained to step " << state.step << "; checkpoint " << (fs::path(o.out) / "checkpoints" / name).string()
        << '\n';
  };
}

Runner prepare_synthesize(const Options& o) {
  require_dir(o.ckpt, "--ckpt");
  require_dir(o.source, "--source");
  require_file(fs::path(o.source) / "manifest.csv", "--source manifest");
  require_separate(o.out, {o.ckpt, o.source});
  const auto label = parse_domain_label(o.label);
  if (o.count < 1) throw ValidationError("--count must be >= 1");
  if (!o.seed) throw ValidationError("--seed is required for synthesize");
  const auto seed = *o.seed;
  return [label, seed](const Options& o, std::ostream& out) {
    auto state = load_train_state(o.ckpt);
    const auto data = load_patch_dataset(o.source, derive_seed(seed, "dataset-noise"));
    std::vector<PatchSample> source;
    for (const auto& s : data.train) {
      if (!s.synthetic && s.label == label) source.push_back(s);
    }
    if (source.empty()) throw ValidationError(std::string("source has no real ") + to_string(label) + " training patches");
    const auto synthetic = synthesize_dataset(state, source, label, o.count, seed);

    // Output: the source dataset copied verbatim plus the synthetic training rows.
    fs::create_directories(o.out);
    auto rows = read_manifest(fs::path(o.source) / "manifest.csv");
    for (const auto& r : rows) fs::copy_file(fs::path(o.source) / r.patch_file, fs::path(o.out) / r.patch_file,
                                             fs::copy_options::overwrite_existing);
    for (std::size_t i = 0; i < synthetic.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "syn_%05zu.vol", i);
      save_volume(Volume{synthetic[i].raw, state.config.spacing, {0.0, 0.0, 0.0}}, fs::path(o.out) / name);
      rows.push_back({name, label, synthetic[i].diameter_mm, "train", true});
    }
    write_manifest(rows, fs::path(o.out) / "manifest.csv");
    std::size_t count = 0;
    for (const auto& r : rows) count += r.split == "train" && r.label == label;
    out << synthetic.size() << " synthetic " << to_string(label) << " patches; train " << to_string(label)
        << " total " << count << '\n';
  };
}

std::string table_for(std::span<const ExperimentResult> results, const std::string& architecture) {
  std::vector<TableSection> sections;
  for (const auto& r : results) {
    TableSection section{regime_title(r.regime), {}, r.mean};
    for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
      section.rows.push_back({architecture + " (seed " + std::to_string(r.seeds[i]) + ")", r.per_seed[i]});
    }
    sections.push_back(std::move(section));
  }
  return format_metrics_table(sections);
}

Runner prepare_train_classifier(const Options& o) {
  require_dir(o.data, "--data");
  require_separate(o.out, {o.data});
  const auto regime = parse_regime(o.regime);
  ClassifierConfig config;
  if (!o.config.empty()) config = classifier_config_from_json(read_json_file(o.config));
  if (!o.seeds.empty()) config.seeds = o.seeds;
  if (o.seed) config.seeds = {*o.seed};
  if (config.pretrained_weights_path) require_dir(*config.pretrained_weights_path, "pretrained_weights_path");
  validate(config);
  return [regime, config](const Options& o, std::ostream& out) {
    auto data = load_patch_dataset(o.data);
    std::vector<PatchSample> real, synthetic;
    for (auto& s : data.train) (s.synthetic ? synthetic : real).push_back(std::move(s));
    data.train = std::move(real);
    fs::create_directories(o.out);
    const auto result = run_experiment(data, regime, config, config.seeds, synthetic, fs::path(o.out) / "models");
    for (const auto& s : config.seeds) {
      write_text_file(fs::absolute(o.data).string() + "\n",
                      fs::path(o.out) / "models" / ("seed_" + std::to_string(s)) / "data_source.txt");
    }
    write_json_file(to_json(result), fs::path(o.out) / "report.json");
    const auto table = table_for(std::span(&result, 1), config.architecture);
    write_text_file(table, fs::path(o.out) / "table.txt");
    out << table;
  };
}

Runner prepare_evaluate(const Options& o) {
  require_dir(o.ckpt, "--ckpt");
  if (o.split != "train" && o.split != "val" && o.split != "test") throw ValidationError("--split must be train, val or test");
  if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) throw ValidationError("--threshold must lie in [0, 1]");
  std::string data = o.data;
  if (data.empty()) {
    std::ifstream in(fs::path(o.ckpt) / "data_source.txt");
    if (!in || !std::getline(in, data)) throw ValidationError("--data is required (checkpoint records no data source)");
  }
  require_dir(data, "--data");
  const fs::path out_path = o.out;
  if (out_path.empty()) throw ValidationError("--out is required");
  require_separate(out_path, {o.ckpt, data});
  return [data](const Options& o, std::ostream& out) {
    auto model = load_classifier(o.ckpt);
    const auto dataset = load_patch_dataset(data);
    std::vector<PatchSample> split;
    for (const auto& s : dataset.split(o.split)) {
      if (!s.synthetic) split.push_back(s);
    }
    const auto report = evaluate(model, split, o.threshold);
    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    write_json_file(to_json(report), o.out);
    out << to_json(report).dump() << '\n';
  };
}

Runner prepare_report(const Options& o) {
  if (o.inputs.empty()) throw ValidationError("report needs at least one --inputs file");
  std::vector<ExperimentResult> results;
  for (const auto& path : o.inputs) {
    require_file(path, "--inputs");
    try {
      results.push_back(experiment_from_json(read_json_file(path)));
    } catch (const FormatError& e) {
      throw ValidationError(e.what());
    }
  }
  return [results](const Options& o, std::ostream& out) {
    const auto table = table_for(results, "3D ResNet");
    if (!o.out.empty()) {
      if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
      write_text_file(table, o.out);
    }
    out << table;
  };
}

void apply_thread_cap() {
  if (const char* env = std::getenv("INPAINT_GAN_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw ValidationError("INPAINT_GAN_THREADS must be a positive integer");
    torch::set_num_threads(static_cast<int>(n));
  }
}

void mark_failed(const fs::path& out, const std::string& message) {
  if (out.empty()) return;
  std::error_code ec;
  const auto dir = fs::is_directory(out) ? out : (out.has_extension() ? out.parent_path() : out);
  if (!dir.empty()) fs::create_directories(dir, ec);
  std::ofstream marker((dir.empty() ? fs::path(".") : dir) / ".failed");
  marker << message << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << "error: empty argument vector\n";
    return 1;
  }
  CLI::App app{"Class-conditional 3D nodule in-painting and malignancy classification", args[0]};
  app.require_subcommand(1);
  Options o;

  auto* phantom = app.add_subcommand("make-phantom", "Write a synthetic phantom dataset");
  phantom->add_option("--out", o.out, "Output directory")->required();
  phantom->add_option("--seed", o.seed, "Root seed");
  phantom->add_option("--train", o.n_train, "Training patches");
  phantom->add_option("--val", o.n_val, "Validation patches");
  phantom->add_option("--test", o.n_test, "Test patches");
  phantom->add_option("--benign-fraction", o.benign_fraction, "Benign share of every split");

  auto* extract = app.add_subcommand("extract-patches", "Cut nodule-centred patches out of volumes");
  extract->add_option("--annotations", o.annotations, "Annotation table (.csv)")->required();
  extract->add_option("--volumes", o.volumes, "Directory of <volume_id>.vol files")->required();
  extract->add_option("--out", o.out, "Output patch dataset directory")->required();
  extract->add_option("--splits", o.splits, "volume_id,split table");
  extract->add_option("--config", o.config, "Pipeline config (JSON)");
  extract->add_option("--seed", o.seed, "Seed for hashed split assignment");

  auto* train_gan = app.add_subcommand("train-gan", "Train the in-painting GAN");
  train_gan->add_option("--data", o.data, "Patch dataset directory")->required();
  train_gan->add_option("--config", o.config, "GAN config (JSON)");
  train_gan->add_option("--out", o.out, "Output directory")->required();
  train_gan->add_option("--resume", o.resume, "Checkpoint directory to resume from");
  train_gan->add_option("--seed", o.seed, "Root seed (overrides the config)");

  auto* synth = app.add_subcommand("synthesize", "In-paint synthetic nodules of one class");
  synth->add_option("--ckpt", o.ckpt, "GAN checkpoint directory")->required();
  synth->add_option("--source", o.source, "Patch dataset supplying contexts")->required();
  synth->add_option("--label", o.label, "benign or malignant")->required();
  synth->add_option("--count", o.count, "Number of synthetic patches")->required();
  synth->add_option("--seed", o.seed, "Synthesis seed")->required();
  synth->add_option("--out", o.out, "Output patch dataset directory")->required();

  auto* train_cls = app.add_subcommand("train-classifier", "Run a malignancy classification experiment");
  train_cls->add_option("--data", o.data, "Patch dataset directory")->required();
  train_cls->add_option("--regime", o.regime, "raw, raw-weighted or raw-synthesis")->required();
  train_cls->add_option("--config", o.config, "Classifier config (JSON)");
  train_cls->add_option("--out", o.out, "Output directory")->required();
  auto* seeds_opt = train_cls->add_option("--seeds", o.seeds, "Training seeds")->delimiter(',');
  train_cls->add_option("--seed", o.seed, "Single training seed")->excludes(seeds_opt);

  auto* eval = app.add_subcommand("evaluate", "Score a trained classifier on one split");
  eval->add_option("--ckpt", o.ckpt, "Classifier checkpoint directory")->required();
  eval->add_option("--data", o.data, "Patch dataset directory (defaults to the training data)");
  eval->add_option("--split", o.split, "train, val or test");
  eval->add_option("--threshold", o.threshold, "Malignant decision threshold");
  eval->add_option("--out", o.out, "Report path (.json)")->required();

  auto* report = app.add_subcommand("report", "Format experiment reports as a metrics table");
  report->add_option("--inputs", o.inputs, "Experiment report.json files")->required();
  report->add_option("--out", o.out, "Table path (.txt)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  Runner runner;
  try {
    apply_thread_cap();
    if (phantom->parsed()) runner = prepare_make_phantom(o);
    else if (extract->parsed()) runner = prepare_extract(o);
    else if (train_gan->parsed()) runner = prepare_train_gan(o);
    else if (synth->parsed()) runner = prepare_synthesize(o);
    else if (train_cls->parsed()) runner = prepare_train_classifier(o);
    else if (eval->parsed()) runner = prepare_evaluate(o);
    else runner = prepare_report(o);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    runner(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    mark_failed(o.out, e.what());
    return 2;
  }
  return 0;
}

}  // namespace inpaint_gan
