#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace inpaint_gan {

/// Runs one subcommand. `args[0]` is the program name. Returns 0 on success, 1 on invalid input
/// (nothing written) and 2 on a runtime failure (the output directory receives a `.failed` marker).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace inpaint_gan
