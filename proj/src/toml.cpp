#include "dawn/toml.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dawn {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw std::runtime_error("config line " + std::to_string(line_no) + ": " + what);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return true;
}

TomlDoc::Value parse_scalar(const std::string& raw, int line_no) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    return raw.substr(1, raw.size() - 2);
  if (raw == "true") return true;
  if (raw == "false") return false;
  // integer or float
  const bool looks_float = raw.find('.') != std::string::npos ||
                           raw.find('e') != std::string::npos ||
                           raw.find('E') != std::string::npos;
  try {
    size_t used = 0;
    if (looks_float) {
      double v = std::stod(raw, &used);
      if (used != raw.size()) fail(line_no, "bad number '" + raw + "'");
      return v;
    }
    int64_t v = std::stoll(raw, &used);
    if (used != raw.size()) fail(line_no, "bad number '" + raw + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(line_no, "unrecognized value '" + raw + "'");
  } catch (const std::out_of_range&) {
    fail(line_no, "number out of range '" + raw + "'");
  }
}

}  // namespace

TomlDoc TomlDoc::parse(const std::string& text) {
  TomlDoc doc;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated table header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) fail(line_no, "bad table name '" + section + "'");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(line_no, "bad key '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    const std::string raw = trim(line.substr(eq + 1));
    if (raw.empty()) fail(line_no, "missing value for '" + key + "'");

    if (raw.front() == '[') {
      if (raw.back() != ']') fail(line_no, "unterminated array");
      std::vector<int64_t> items;
      std::string body = raw.substr(1, raw.size() - 2);
      std::istringstream parts(body);
      std::string item;
      while (std::getline(parts, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        Value v = parse_scalar(item, line_no);
        if (!std::holds_alternative<int64_t>(v))
          fail(line_no, "arrays may hold integers only");
        items.push_back(std::get<int64_t>(v));
      }
      doc.values_[key] = std::move(items);
    } else {
      doc.values_[key] = parse_scalar(raw, line_no);
    }
  }
  return doc;
}

TomlDoc TomlDoc::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

std::vector<std::string> TomlDoc::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [key, value] : values_) out.push_back(key);
  return out;
}

const TomlDoc::Value* TomlDoc::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string TomlDoc::get_string(const std::string& key, const std::string& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  throw std::runtime_error("config key '" + key + "' is not a string");
}

int64_t TomlDoc::get_int(const std::string& key, int64_t fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* i = std::get_if<int64_t>(v)) return *i;
  throw std::runtime_error("config key '" + key + "' is not an integer");
}

double TomlDoc::get_double(const std::string& key, double fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* d = std::get_if<double>(v)) return *d;
  if (const auto* i = std::get_if<int64_t>(v)) return static_cast<double>(*i);
  throw std::runtime_error("config key '" + key + "' is not a number");
}

bool TomlDoc::get_bool(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* b = std::get_if<bool>(v)) return *b;
  throw std::runtime_error("config key '" + key + "' is not a boolean");
}

std::vector<int64_t> TomlDoc::get_int_array(const std::string& key,
                                            std::vector<int64_t> fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (const auto* a = std::get_if<std::vector<int64_t>>(v)) return *a;
  if (const auto* i = std::get_if<int64_t>(v)) return {*i};
  throw std::runtime_error("config key '" + key + "' is not an array");
}

}  // namespace dawn
