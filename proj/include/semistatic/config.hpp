/*
 * Copyright 2026 The Semistatic Mapping Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace semistatic {

// Minimal "key = value" configuration format shared by run configs and scene
// scripts. '#' starts a comment, [[name]] opens a repeated section, values
// may be bare tokens or bracketed number lists, and a key may repeat within
// a section (e.g. one waypoint per line).
struct ConfigSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return true;
    }
    return false;
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries) {
      if (k == key) out.push_back(v);
    }
    return out;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
  }

  std::string require(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw std::runtime_error("missing key '" + key + "' in section [" + name + "]");
    return *v;
  }

  double get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? parse_double(*v, key) : fallback;
  }

  double require_double(const std::string& key) const { return parse_double(require(key), key); }

  int get_int(const std::string& key, int fallback) const {
    const std::string* v = find(key);
    return v ? static_cast<int>(parse_double(*v, key)) : fallback;
  }

  int require_int(const std::string& key) const {
    return static_cast<int>(parse_double(require(key), key));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "off") return false;
    throw std::runtime_error("key '" + key + "': expected a boolean, got '" + *v + "'");
  }

  /// Whitespace/comma/bracket separated numbers.
  static std::vector<double> parse_numbers(const std::string& value) {
    std::string cleaned = value;
    for (char& c : cleaned) {
      if (c == '[' || c == ']' || c == ',') c = ' ';
    }
    std::istringstream in(cleaned);
    std::vector<double> out;
    double x = 0.0;
    while (in >> x) out.push_back(x);
    return out;
  }

  std::vector<double> get_numbers(const std::string& key) const {
    const std::string* v = find(key);
    return v ? parse_numbers(*v) : std::vector<double>{};
  }

 private:
  static double parse_double(const std::string& value, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(value.c_str(), &end);
    if (end == value.c_str()) {
      throw std::runtime_error("key '" + key + "': expected a number, got '" + value + "'");
    }
    return x;
  }
};

struct ParsedConfig {
  ConfigSection globals;
  std::vector<ConfigSection> sections;

  std::vector<const ConfigSection*> sections_named(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections) {
      if (s.name == name) out.push_back(&s);
    }
    return out;
  }
};

inline ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig cfg;
  ConfigSection* current = &cfg.globals;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (line.size() >= 4 && line.substr(0, 2) == "[[" && line.substr(line.size() - 2) == "]]") {
      cfg.sections.push_back(ConfigSection{line.substr(2, line.size() - 4), {}});
      current = &cfg.sections.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    }
    if (!value.empty() && value.front() == '"' && value.back() == '"' && value.size() >= 2) {
      value = value.substr(1, value.size() - 2);
    }
    current->entries.emplace_back(std::move(key), std::move(value));
  }
  return cfg;
}

inline ParsedConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace semistatic
