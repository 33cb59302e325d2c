// attrans/logmath.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Numerically stable log-space primitives. -infinity is a legal
// log-probability throughout: -inf + x = -inf, and logsumexp ignores
// -inf entries unless every entry is -inf.

#pragma once

#include <limits>
#include <span>
#include <vector>

namespace attrans {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow; exact on -inf arguments.
double log_add(double a, double b);

// log sum_i exp(values[i]), computed with a max shift. Empty input is a
// contract violation; all -inf inputs yield -inf exactly.
double logsumexp(std::span<const double> values);

// exp(x - logsumexp(x)). Entries are positive and sum to 1 within 1e-12
// at 64-bit; invariant under an additive shift of the logits. NaN input
// is an error.
std::vector<double> softmax(std::span<const double> logits);

// x - logsumexp(x), in place. Every output entry is <= 0.
void log_softmax_inplace(std::span<double> logits);

}  // namespace attrans
