#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace inpaint_gan {

/// Grid extent in voxels, ordered (x, y, z).
struct Shape3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  std::int64_t count() const { return x * y * z; }
  bool positive() const { return x > 0 && y > 0 && z > 0; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

std::string to_string(const Shape3& shape);

/// A triple of physical quantities (mm), ordered (x, y, z).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Dense 3D float array stored x-fastest: index = x + X * (y + Y * z).
class Array3f {
 public:
  Array3f() = default;
  explicit Array3f(Shape3 shape, float fill = 0.0f);
  Array3f(Shape3 shape, std::vector<float> values);

  const Shape3& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }
  std::vector<float>& storage() { return values_; }
  const std::vector<float>& storage() const { return values_; }

  std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + shape_.x * (j + shape_.y * k));
  }
  float& operator()(std::int64_t i, std::int64_t j, std::int64_t k) { return values_[index(i, j, k)]; }
  float operator()(std::int64_t i, std::int64_t j, std::int64_t k) const { return values_[index(i, j, k)]; }

  bool all_finite() const;
  float min() const;
  float max() const;
  double sum() const;

  friend bool operator==(const Array3f&, const Array3f&) = default;

 private:
  Shape3 shape_;
  std::vector<float> values_;
};

}  // namespace inpaint_gan
