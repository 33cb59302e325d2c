// attrans/selftest.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <iosfwd>

namespace attrans {

// Runs the built-in oracle suites (log-space identities, loss
// enumeration cross-check, finite-difference gradient check,
// quantization round trip). Prints one line per suite; returns true
// when everything passes.
bool run_selftest(std::ostream& out, std::uint64_t seed = 1);

}  // namespace attrans
