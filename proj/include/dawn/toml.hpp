#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace dawn {

/// TOML subset: [tables], strings, integers, floats, booleans, and flat
/// integer arrays. Keys flatten to "table.key". Line comments with '#'.
class TomlDoc {
 public:
  using Value = std::variant<std::string, int64_t, double, bool, std::vector<int64_t>>;

  static TomlDoc parse(const std::string& text);
  static TomlDoc parse_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int64_t> get_int_array(const std::string& key,
                                     std::vector<int64_t> fallback) const;

 private:
  const Value* find(const std::string& key) const;
  std::map<std::string, Value> values_;
};

}  // namespace dawn
