#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bell {

/// Flat `key = value` configuration shared by every command.
///
/// Lines starting with `#` are comments; trailing `# ...` comments are
/// stripped. Keys are case-sensitive and may contain dots. Later definitions
/// of the same key override earlier ones.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;

  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// All keys that begin with `prefix`, in sorted order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  /// FNV-1a 64 of the source text, as 16 hex digits.
  const std::string& content_hash() const { return hash_; }

 private:
  std::map<std::string, std::string> values_;
  std::string hash_ = "0000000000000000";
};

std::string fnv1a_hex(const std::string& bytes);

}  // namespace bell
