#include "trajcv/cli/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "trajcv/common.hpp"

namespace trajcv::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(b, &end);
  if (end == b || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(b, &end, 10);
  if (end == b || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": not an integer: '" + v + "'");
  return x;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Config::Config(const std::string& text, const std::set<std::string>& allowed, const std::string& origin) {
  std::stringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string k = trim(line.substr(0, eq));
    if (k.empty()) throw ConfigError(where + ": empty key");
    const std::string key = section.empty() ? k : section + "." + k;
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    values_[key] = trim(line.substr(eq + 1));
  }
}

Config Config::load(const std::string& path, const std::set<std::string>& allowed) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return Config(ss.str(), allowed, path);
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

const std::string* Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void Config::record(const std::string& key, const std::string& value) const { resolved_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& def) const {
  const std::string* r = raw(key);
  const std::string v = r ? *r : def;
  record(key, v);
  return v;
}

double Config::get_double(const std::string& key, double def) const {
  const std::string* r = raw(key);
  const double v = r ? to_double(key, *r) : def;
  record(key, format_double(v));
  return v;
}

int Config::get_int(const std::string& key, int def) const {
  const std::string* r = raw(key);
  const long long v = r ? to_integer(key, *r) : def;
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(key + ": integer out of range");
  record(key, std::to_string(v));
  return static_cast<int>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) const {
  const std::string* r = raw(key);
  std::uint64_t v = def;
  if (r) {
    const char* b = r->c_str();
    char* end = nullptr;
    errno = 0;
    v = std::strtoull(b, &end, 10);
    if (end == b || *end != '\0' || errno == ERANGE || r->front() == '-')
      throw ConfigError(key + ": not an unsigned integer: '" + *r + "'");
  }
  record(key, std::to_string(v));
  return v;
}

bool Config::get_bool(const std::string& key, bool def) const {
  const std::string* r = raw(key);
  bool v = def;
  if (r) {
    if (*r == "true" || *r == "1" || *r == "yes")
      v = true;
    else if (*r == "false" || *r == "0" || *r == "no")
      v = false;
    else
      throw ConfigError(key + ": not a boolean: '" + *r + "'");
  }
  record(key, v ? "true" : "false");
  return v;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& def) const {
  const std::string* r = raw(key);
  std::vector<double> v = def;
  if (r) {
    v.clear();
    for (const auto& item : split_list(*r)) v.push_back(to_double(key, item));
  }
  std::string joined;
  for (size_t i = 0; i < v.size(); ++i) joined += (i ? ", " : "") + format_double(v[i]);
  record(key, joined);
  return v;
}

std::vector<std::string> Config::get_strings(const std::string& key, const std::vector<std::string>& def) const {
  const std::string* r = raw(key);
  const std::vector<std::string> v = r ? split_list(*r) : def;
  std::string joined;
  for (size_t i = 0; i < v.size(); ++i) joined += (i ? ", " : "") + v[i];
  record(key, joined);
  return v;
}

std::string Config::resolved() const {
  std::ostringstream os;
  std::string section = "\x01";
  for (const auto& [key, value] : resolved_) {
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string k = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      if (section != "\x01") os << "\n";
      if (!sec.empty()) os << "[" << sec << "]\n";
      section = sec;
    }
    os << k << " = " << value << "\n";
  }
  return os.str();
}

}  // namespace trajcv::cli
