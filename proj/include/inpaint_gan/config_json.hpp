#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "inpaint_gan/array3.hpp"
#include "inpaint_gan/errors.hpp"

namespace inpaint_gan {

/// Reads optional fields out of a JSON object and rejects any key that was never asked for.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& object, std::string context) : object_(object), context_(std::move(context)) {
    if (!object_.is_object()) throw ValidationError(context_ + ": expected a JSON object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!object_.contains(key)) return;
    try {
      out = object_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(context_ + "." + key + ": " + e.what());
    }
  }

  void read(const std::string& key, Shape3& out) {
    seen_.insert(key);
    if (!object_.contains(key)) return;
    const auto& a = object_.at(key);
    if (!a.is_array() || a.size() != 3) throw ValidationError(context_ + "." + key + ": expected [x, y, z]");
    try {
      out = {a[0].get<std::int64_t>(), a[1].get<std::int64_t>(), a[2].get<std::int64_t>()};
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(context_ + "." + key + ": " + e.what());
    }
  }

  void read(const std::string& key, Vec3& out) {
    seen_.insert(key);
    if (!object_.contains(key)) return;
    const auto& a = object_.at(key);
    if (!a.is_array() || a.size() != 3) throw ValidationError(context_ + "." + key + ": expected [x, y, z]");
    try {
      out = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(context_ + "." + key + ": " + e.what());
    }
  }

  /// Nested object reader; an absent key yields an empty object so every nested field keeps its default.
  ConfigReader child(const std::string& key) {
    seen_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return ConfigReader(object_.contains(key) ? object_.at(key) : empty, context_ + "." + key);
  }

  void finish() const {
    for (const auto& item : object_.items()) {
      if (!seen_.contains(item.key())) throw ValidationError(context_ + ": unknown key '" + item.key() + "'");
    }
  }

 private:
  const nlohmann::json& object_;
  std::string context_;
  std::set<std::string> seen_;
};

inline nlohmann::json shape_json(const Shape3& s) { return {s.x, s.y, s.z}; }
inline nlohmann::json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

}  // namespace inpaint_gan
