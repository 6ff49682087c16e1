#include "inpaint_gan/array3.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

std::string to_string(const Shape3& shape) {
  return "(" + std::to_string(shape.x) + "," + std::to_string(shape.y) + "," + std::to_string(shape.z) + ")";
}

Array3f::Array3f(Shape3 shape, float fill) : shape_(shape) {
  if (shape.x < 0 || shape.y < 0 || shape.z < 0) {
    throw ValidationError("negative array extent " + to_string(shape));
  }
  values_.assign(static_cast<std::size_t>(shape.count()), fill);
}

Array3f::Array3f(Shape3 shape, std::vector<float> values) : shape_(shape), values_(std::move(values)) {
  if (shape.x < 0 || shape.y < 0 || shape.z < 0 || static_cast<std::int64_t>(values_.size()) != shape.count()) {
    throw ValidationError("array payload of " + std::to_string(values_.size()) + " values does not match shape " +
                          to_string(shape));
  }
}

bool Array3f::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

float Array3f::min() const { return values_.empty() ? 0.0f : *std::min_element(values_.begin(), values_.end()); }

float Array3f::max() const { return values_.empty() ? 0.0f : *std::max_element(values_.begin(), values_.end()); }

double Array3f::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

}  // namespace inpaint_gan
