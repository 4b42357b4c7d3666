#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace qprecon::io {

/// Plain `key = value` configuration files: one pair per line, `#` starts a
/// comment, blank lines ignored. Unknown keys are the caller's concern.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig from_file(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace qprecon::io
