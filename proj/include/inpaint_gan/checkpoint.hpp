#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace inpaint_gan {

/// Parameter checkpoint layout: `config.json`, `manifest.json` ({name: shape}) and one little-endian f32
/// blob `<name>.bin` per named parameter or buffer.
void save_parameters(const torch::nn::Module& module, const std::filesystem::path& dir, const nlohmann::json& config);

/// Copies every tensor named in the module from `dir`. A missing tensor or a shape mismatch throws
/// FormatError naming the tensor.
void load_parameters(torch::nn::Module& module, const std::filesystem::path& dir);

nlohmann::json read_checkpoint_config(const std::filesystem::path& dir);

/// All tensors of a checkpoint, keyed by name, as float32.
std::map<std::string, torch::Tensor> read_checkpoint_tensors(const std::filesystem::path& dir);

}  // namespace inpaint_gan
