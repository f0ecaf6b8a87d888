#pragma once

// Field-checked access to JSON objects. Every error names the offending path.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcbo/errors.hpp"
#include "pcbo/strategies.hpp"

namespace pcbo::detail {

using nlohmann::json;

inline json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": malformed JSON: " + e.what());
  }
}

class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Marks an optional key as known without reading it.
  void allow(const std::string& key) { seen_.insert(key); }

  bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(path(key) + ": missing required field");
    return obj_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key) + ": must be finite");
    return d;
  }

  double number_or(const std::string& key, double fallback) {
    seen_.insert(key);
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(path(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) {
    seen_.insert(key);
    return has(key) ? unsigned_int(key) : fallback;
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::string string_or(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) { return number_list(at(key), path(key)); }

  std::vector<std::size_t> indices(const std::string& key) {
    return index_list(at(key), path(key));
  }

  static std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(where + "[" + std::to_string(i) + "]: expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  static std::vector<std::size_t> index_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of indices");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 0) {
        throw ConfigError(where + "[" + std::to_string(i) + "]: expected a non-negative integer");
      }
      out.push_back(v[i].get<std::size_t>());
    }
    return out;
  }

  /// Throws on any key that was never asked for.
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()) + ": unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline HierarchySpec parse_hierarchy(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of levels");
  HierarchySpec h;
  for (std::size_t l = 0; l < v.size(); ++l) {
    Fields f(v[l], where + "[" + std::to_string(l) + "]");
    HierarchyLevel level;
    level.dims = f.indices("dims");
    level.batch_size = f.unsigned_int("K");
    f.finish();
    h.levels.push_back(std::move(level));
  }
  return h;
}

inline json hierarchy_to_json(const HierarchySpec& h) {
  json out = json::array();
  for (const auto& level : h.levels) out.push_back({{"dims", level.dims}, {"K", level.batch_size}});
  return out;
}

inline KernelKind parse_kernel_kind(const std::string& name, const std::string& where) {
  if (name == "matern25") return KernelKind::matern25;
  if (name == "rbf") return KernelKind::rbf;
  throw ConfigError(where + ": unknown kernel '" + name + "' (expected matern25 or rbf)");
}

inline std::string kernel_kind_name(KernelKind k) {
  return k == KernelKind::rbf ? "rbf" : "matern25";
}

}  // namespace pcbo::detail
