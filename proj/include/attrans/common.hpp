// attrans/common.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace attrans {

// Contract violations (bad arguments, protocol misuse) throw
// std::invalid_argument; IO and numeric failures throw std::runtime_error.
[[noreturn]] void contract_fail(const std::string& msg);

inline void require(bool ok, const char* msg) {
  if (!ok) contract_fail(msg);
}

}  // namespace attrans
