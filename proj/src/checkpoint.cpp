#include "inpaint_gan/checkpoint.hpp"

#include <fstream>

#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::pair<std::string, torch::Tensor>> named_tensors(const torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : module.named_parameters()) out.emplace_back(item.key(), item.value());
  for (const auto& item : module.named_buffers()) out.emplace_back(item.key(), item.value());
  return out;
}

torch::Tensor read_blob(const fs::path& path, const std::vector<std::int64_t>& shape, const std::string& name) {
  std::int64_t count = 1;
  for (auto d : shape) count *= d;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing parameter blob for '" + name + "'");
  auto t = torch::empty(shape, torch::kFloat32);
  in.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(count * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float)) || in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("parameter blob for '" + name + "' does not match its manifest shape");
  }
  return t;
}

}  // namespace

void save_parameters(const torch::nn::Module& module, const fs::path& dir, const json& config) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string());
  json manifest = json::object();
  for (const auto& [name, tensor] : named_tensors(module)) {
    auto t = tensor.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    manifest[name] = t.sizes().vec();
    std::ofstream out(dir / (name + ".bin"), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write parameter blob " + name);
    out.write(reinterpret_cast<const char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!out) throw IoError("failed writing parameter blob " + name);
  }
  write_json(config, dir / "config.json");
  write_json(manifest, dir / "manifest.json");
}

json read_checkpoint_config(const fs::path& dir) { return read_json(dir / "config.json"); }

std::map<std::string, torch::Tensor> read_checkpoint_tensors(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  if (!manifest.is_object()) throw FormatError("checkpoint manifest must be an object");
  std::map<std::string, torch::Tensor> out;
  for (const auto& item : manifest.items()) {
    std::vector<std::int64_t> shape;
    try {
      shape = item.value().get<std::vector<std::int64_t>>();
    } catch (const json::exception&) {
      throw FormatError("manifest entry for '" + item.key() + "' is not a shape");
    }
    out.emplace(item.key(), read_blob(dir / (item.key() + ".bin"), shape, item.key()));
  }
  return out;
}

void load_parameters(torch::nn::Module& module, const fs::path& dir) {
  const auto tensors = read_checkpoint_tensors(dir);
  torch::NoGradGuard no_grad;
  for (auto& [name, target] : named_tensors(module)) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint " + dir.string() + " has no tensor '" + name + "'");
    if (it->second.sizes() != target.sizes()) {
      throw FormatError("shape mismatch for layer '" + name + "' in " + dir.string());
    }
    target.copy_(it->second.to(target.scalar_type()));
  }
}

}  // namespace inpaint_gan
