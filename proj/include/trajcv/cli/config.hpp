#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace trajcv::cli {

// INI-like text: "[section]" headers and "key = value" lines; '#' starts a
// comment. Keys outside the allowed set are rejected at parse time. Every
// getter records the value it resolved (explicit or default) so the full
// effective configuration can be written out.
class Config {
 public:
  Config() = default;
  Config(const std::string& text, const std::set<std::string>& allowed, const std::string& origin = "<config>");
  static Config load(const std::string& path, const std::set<std::string>& allowed);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& def) const;

  // "section.key = value" grouped by section, sorted.
  std::string resolved() const;

 private:
  const std::string* raw(const std::string& key) const;
  void record(const std::string& key, const std::string& value) const;

  std::map<std::string, std::string> values_;  // "section.key" -> raw value
  mutable std::map<std::string, std::string> resolved_;
};

std::string format_double(double x);

}  // namespace trajcv::cli
