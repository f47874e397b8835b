// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "antispoof/error.hpp"
#include "antispoof/text_util.hpp"

namespace antispoof {

IniConfig IniConfig::parse(std::string_view text, const std::string& origin) {
  IniConfig cfg;
  cfg.origin_ = origin;
  std::string current;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError(where + "unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (current.empty()) throw UsageError(where + "empty section name");
      cfg.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw UsageError(where + "empty key");
    if (!cfg.sections_[current].emplace(key, value).second)
      throw UsageError(where + "duplicate key '" + key + "' in section [" + current + "]");
  }
  return cfg;
}

IniConfig IniConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) != 0;
}

std::vector<std::string> IniConfig::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

std::string IniConfig::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return fallback;
  auto kv = it->second.find(key);
  return kv == it->second.end() ? fallback : kv->second;
}

std::string IniConfig::require(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw UsageError(origin_ + ": missing [" + section + "] " + key);
  return get(section, key, "");
}

double IniConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return parse_double(get(section, key, ""));
  } catch (const DataError&) {
    throw UsageError(origin_ + ": [" + section + "] " + key + " must be a number");
  }
}

long long IniConfig::get_int(const std::string& section, const std::string& key, long long fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return parse_int(get(section, key, ""));
  } catch (const DataError&) {
    throw UsageError(origin_ + ": [" + section + "] " + key + " must be an integer");
  }
}

bool IniConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError(origin_ + ": [" + section + "] " + key + " must be a boolean");
}

std::vector<std::string> IniConfig::get_list(const std::string& section, const std::string& key,
                                             const std::vector<std::string>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<std::string> out;
  for (const auto& item : split(get(section, key, ""), ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

const std::map<std::string, std::string>& IniConfig::section(const std::string& name) const {
  static const std::map<std::string, std::string> kEmpty;
  auto it = sections_.find(name);
  return it == sections_.end() ? kEmpty : it->second;
}

void IniConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

std::string IniConfig::canonical(const std::string& section) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return "";
  std::string out = "[" + section + "]\n";
  for (const auto& [k, v] : it->second) out += k + "=" + v + "\n";
  return out;
}

void IniConfig::check_keys(const std::string& section, const std::vector<std::string>& allowed) const {
  for (const auto& [k, _] : this->section(section)) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw UsageError(origin_ + ": unknown key '" + k + "' in section [" + section + "]");
  }
}

}  // namespace antispoof
