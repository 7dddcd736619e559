#pragma once

// Minimal TOML reader covering what run configs need: [section] headers,
// key = value lines, strings, numbers, booleans, flat arrays, # comments.
// Keys flatten to "section.key". Reads are tracked so a loader can reject
// configs containing keys nothing consumed (typo protection).

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hybridcontract/errors.hpp"

namespace hybridcontract {

struct TomlValue {
  enum class Kind { String, Number, Boolean, Array };
  Kind kind = Kind::String;
  std::string str;
  double number = 0.0;
  bool integral = false;  // number was written without '.', 'e', 'E'
  bool boolean = false;
  std::vector<TomlValue> array;
};

class TomlTable {
 public:
  static TomlTable parse(const std::string& text) {
    TomlTable t;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t eol = text.find('\n', pos);
      std::string line = text.substr(
          pos, eol == std::string::npos ? std::string::npos : eol - pos);
      pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
      ++line_no;

      strip_comment(line);
      trim(line);
      if (line.empty()) continue;

      if (line.front() == '[') {
        if (line.back() != ']')
          throw InvalidArgument("config line " + std::to_string(line_no) +
                                ": unterminated section header");
        section = line.substr(1, line.size() - 2);
        trim(section);
        if (section.empty() || !valid_key(section))
          throw InvalidArgument("config line " + std::to_string(line_no) +
                                ": bad section name");
        continue;
      }

      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw InvalidArgument("config line " + std::to_string(line_no) +
                              ": expected key = value");
      std::string key = line.substr(0, eq);
      std::string raw = line.substr(eq + 1);
      trim(key);
      trim(raw);
      if (key.empty() || !valid_key(key))
        throw InvalidArgument("config line " + std::to_string(line_no) +
                              ": bad key name");
      const std::string full = section.empty() ? key : section + "." + key;
      if (t.values_.count(full))
        throw InvalidArgument("config line " + std::to_string(line_no) +
                              ": duplicate key '" + full + "'");
      t.values_[full] = parse_value(raw, line_no);
    }
    return t;
  }

  [[nodiscard]] bool has(const std::string& key) const {
    return values_.count(key) > 0;
  }

  [[nodiscard]] std::string get_string(const std::string& key,
                                       const std::string& fallback) const {
    const TomlValue* v = fetch(key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::String)
      throw InvalidArgument("config key '" + key + "' must be a string");
    return v->str;
  }

  [[nodiscard]] double get_double(const std::string& key,
                                  double fallback) const {
    const TomlValue* v = fetch(key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::Number)
      throw InvalidArgument("config key '" + key + "' must be a number");
    return v->number;
  }

  [[nodiscard]] long get_integer(const std::string& key, long fallback) const {
    const TomlValue* v = fetch(key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::Number || !v->integral)
      throw InvalidArgument("config key '" + key + "' must be an integer");
    return static_cast<long>(v->number);
  }

  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const {
    const TomlValue* v = fetch(key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::Boolean)
      throw InvalidArgument("config key '" + key + "' must be a boolean");
    return v->boolean;
  }

  [[nodiscard]] std::vector<double> get_number_array(
      const std::string& key, const std::vector<double>& fallback) const {
    const TomlValue* v = fetch(key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::Array)
      throw InvalidArgument("config key '" + key + "' must be an array");
    std::vector<double> out;
    for (const TomlValue& e : v->array) {
      if (e.kind != TomlValue::Kind::Number)
        throw InvalidArgument("config key '" + key +
                              "' must contain only numbers");
      out.push_back(e.number);
    }
    return out;
  }

  // Keys present in the file that no getter touched.
  [[nodiscard]] std::vector<std::string> unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!consumed_.count(k)) out.push_back(k);
    return out;
  }

  // All keys under "section." (marks nothing consumed).
  [[nodiscard]] std::vector<std::string> keys_in(
      const std::string& section) const {
    std::vector<std::string> out;
    const std::string prefix = section + ".";
    for (const auto& [k, v] : values_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k.substr(prefix.size()));
    return out;
  }

 private:
  [[nodiscard]] const TomlValue* fetch(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  static bool valid_key(const std::string& k) {
    for (char c : k)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
            c == '-' || c == '.'))
        return false;
    return true;
  }

  static void trim(std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    s = s.substr(b, e - b);
  }

  // Removes "# ..." outside double quotes.
  static void strip_comment(std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) {
        s.resize(i);
        return;
      }
    }
  }

  static TomlValue parse_scalar(std::string raw, std::size_t line_no) {
    TomlValue v;
    trim(raw);
    if (raw.empty())
      throw InvalidArgument("config line " + std::to_string(line_no) +
                            ": empty value");
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"')
        throw InvalidArgument("config line " + std::to_string(line_no) +
                              ": unterminated string");
      v.kind = TomlValue::Kind::String;
      v.str = raw.substr(1, raw.size() - 2);
      return v;
    }
    if (raw == "true" || raw == "false") {
      v.kind = TomlValue::Kind::Boolean;
      v.boolean = raw == "true";
      return v;
    }
    char* end = nullptr;
    const double num = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0')
      throw InvalidArgument("config line " + std::to_string(line_no) +
                            ": cannot parse value '" + raw + "'");
    v.kind = TomlValue::Kind::Number;
    v.number = num;
    v.integral = raw.find_first_of(".eE") == std::string::npos;
    return v;
  }

  static TomlValue parse_value(const std::string& raw, std::size_t line_no) {
    if (!raw.empty() && raw.front() == '[') {
      if (raw.back() != ']')
        throw InvalidArgument("config line " + std::to_string(line_no) +
                              ": unterminated array");
      TomlValue v;
      v.kind = TomlValue::Kind::Array;
      std::string body = raw.substr(1, raw.size() - 2);
      std::string item;
      bool quoted = false;
      for (char c : body) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
          v.array.push_back(parse_scalar(item, line_no));
          item.clear();
        } else {
          item += c;
        }
      }
      std::string tail = item;
      std::string probe = tail;
      trim(probe);
      if (!probe.empty()) v.array.push_back(parse_scalar(tail, line_no));
      return v;
    }
    return parse_scalar(raw, line_no);
  }

  std::map<std::string, TomlValue> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace hybridcontract
