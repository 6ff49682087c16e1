#pragma once

#include <stdexcept>
#include <string>

namespace inpaint_gan {

/// Bad input: a precondition or a domain invariant was violated.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file was readable but its contents do not follow the expected layout.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a training loss becomes NaN/Inf. `term()` names the first offending loss.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(std::string term, long step)
      : std::runtime_error("non-finite loss term '" + term + "' at step " + std::to_string(step)),
        term_(std::move(term)),
        step_(step) {}

  const std::string& term() const noexcept { return term_; }
  long step() const noexcept { return step_; }

 private:
  std::string term_;
  long step_;
};

}  // namespace inpaint_gan
