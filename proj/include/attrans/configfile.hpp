// attrans/configfile.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Human-readable key/value config files: one `key = value` per line,
// `#` starts a comment, blank lines ignored.

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace attrans {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);

std::size_t get_size(const KeyValues& kv, const std::string& key,
                     std::size_t fallback);
double get_double(const KeyValues& kv, const std::string& key, double fallback);
std::string get_string(const KeyValues& kv, const std::string& key,
                       const std::string& fallback);
std::uint64_t get_u64(const KeyValues& kv, const std::string& key,
                      std::uint64_t fallback);

}  // namespace attrans
