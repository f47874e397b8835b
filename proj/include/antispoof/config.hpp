// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace antispoof {

/// Plain-text configuration:
///
///   # comment            (also ';')
///   [section]
///   key = value
///
/// Keys before the first section header belong to section "". Keys are
/// unique within a section. Errors raise UsageError with the line number.
class IniConfig {
 public:
  static IniConfig parse(std::string_view text, const std::string& origin = "<config>");
  static IniConfig load(const std::filesystem::path& path);

  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }
  bool has(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;

  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  /// Comma separated, trimmed, empty items dropped.
  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  const std::map<std::string, std::string>& section(const std::string& name) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// "[section]\nkey=value\n..." with sorted keys, or "" for a missing section.
  std::string canonical(const std::string& section) const;
  /// Throws UsageError for any key in section not listed in allowed.
  void check_keys(const std::string& section, const std::vector<std::string>& allowed) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

}  // namespace antispoof
