#include "config.hpp"

#include <fstream>

namespace cscg::cli {

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    Json j = Json::parse(in, nullptr, true, true);
    if (!j.is_object()) throw ConfigError("config " + path.string() + " is not a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

void apply_override(Json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json* node = &cfg;
  std::size_t begin = 0;
  while (true) {
    const auto dot = key.find('.', begin);
    const std::string part = key.substr(begin, dot == std::string::npos ? dot : dot - begin);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty part");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' goes through a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    begin = dot + 1;
  }
}

std::uint64_t config_hash(const Json& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15];
  return s;
}

Config::Config(Json j, std::string path) : j_(std::move(j)), path_(std::move(path)) {
  if (j_.is_null()) j_ = Json::object();
  if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
}

Config& Config::child(const std::string& key) {
  used_.insert(key);
  if (auto it = children_.find(key); it != children_.end()) return it->second;
  Json sub = j_.contains(key) ? j_.at(key) : Json::object();
  if (!sub.is_object()) throw ConfigError("config key '" + where(key) + "' must be an object");
  return children_.try_emplace(key, std::move(sub), where(key)).first->second;
}

std::string Config::where(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

void Config::check_unknown() const {
  std::string unknown;
  for (const auto& [key, value] : j_.items()) {
    if (!used_.contains(key)) unknown += (unknown.empty() ? "" : ", ") + where(key);
  }
  if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
  for (const auto& [key, c] : children_) c.check_unknown();
}

}  // namespace cscg::cli
