// attrans/configfile.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/configfile.hpp"

#include <fstream>
#include <sstream>

#include "attrans/common.hpp"

namespace attrans {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    require(eq != std::string::npos,
            ("config line " + std::to_string(lineno) + ": expected key = value").c_str());
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    require(!key.empty(), "config: empty key");
    require(!kv.contains(key), ("config: duplicate key '" + key + "'").c_str());
    kv[key] = value;
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::size_t get_size(const KeyValues& kv, const std::string& key,
                     std::size_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return static_cast<std::size_t>(std::stoull(it->second));
}

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return std::stod(it->second);
}

std::string get_string(const KeyValues& kv, const std::string& key,
                       const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::uint64_t get_u64(const KeyValues& kv, const std::string& key,
                      std::uint64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return std::stoull(it->second);
}

}  // namespace attrans
