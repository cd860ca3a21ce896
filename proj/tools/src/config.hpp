#pragma once

// Experiment configuration: a JSON object per experiment, with dotted-key
// overrides and a stable hash for output headers.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace cscg::cli {

using Json = nlohmann::json;

/// Bad config file, unknown key or wrongly typed value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// taken as a string otherwise.
void apply_override(Json& cfg, const std::string& assignment);

/// 64-bit FNV-1a of the compact dump (keys are sorted by nlohmann::json).
std::uint64_t config_hash(const Json& cfg);
std::string hex64(std::uint64_t v);

/// Typed access with defaults. Every key read is remembered so that
/// check_unknown() can reject keys no experiment looked at.
class Config {
 public:
  explicit Config(Json j, std::string path = {});

  template <class T>
  T get(const std::string& key, const T& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config key '" + where(key) + "' has the wrong type");
    }
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  /// Sub-object (empty when absent); the reference stays valid.
  Config& child(const std::string& key);
  const Json& raw() const noexcept { return j_; }

  /// Throws ConfigError listing unknown keys (recursing into children).
  void check_unknown() const;

 private:
  std::string where(const std::string& key) const;

  Json j_;
  std::string path_;
  std::set<std::string> used_;
  std::map<std::string, Config> children_;
};

}  // namespace cscg::cli
