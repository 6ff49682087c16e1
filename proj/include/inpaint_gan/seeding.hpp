#pragma once

#include <cstdint>
#include <string_view>

namespace inpaint_gan {

/// Derives an independent stream seed from a root seed, a fixed component label and an index.
/// Every random draw in the pipeline is keyed this way so any stage can be replayed in isolation.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0);

}  // namespace inpaint_gan
