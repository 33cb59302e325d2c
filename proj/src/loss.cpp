// attrans/loss.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/loss.hpp"

#include <cmath>
#include <functional>

#include "attrans/logmath.hpp"

namespace attrans {

namespace {

// exp over a sum of log terms; zero as soon as any term is -inf.
double occupancy(std::initializer_list<double> log_terms, double log_z) {
  double acc = -log_z;
  for (double t : log_terms) {
    if (t == kNegInf) return 0.0;
    acc += t;
  }
  return std::exp(acc);
}

}  // namespace

AlignmentGrid::AlignmentGrid(std::size_t C, std::size_t U, std::size_t vocab,
                             std::vector<int> targets)
    : num_chunks(C),
      num_labels(U),
      vocab(vocab),
      log_probs(C * (U + 1) * (vocab + 1), kNegInf),
      targets(std::move(targets)) {}

void AlignmentGrid::validate() const {
  require(num_chunks >= 1, "alignment grid: need at least one chunk");
  require(vocab >= 1, "alignment grid: vocabulary must be non-empty");
  require(targets.size() == num_labels, "alignment grid: target length mismatch");
  require(log_probs.size() == num_chunks * (num_labels + 1) * slice_len(),
          "alignment grid: log-prob buffer size mismatch");
  for (int y : targets) {
    require(y >= 1 && y <= static_cast<int>(vocab),
            "alignment grid: target out of range (blank is never a target)");
  }
  for (std::size_t c = 0; c < num_chunks; ++c) {
    for (std::size_t u = 0; u <= num_labels; ++u) {
      const double* slice = log_probs.data() + index(c, u, 0);
      double z = logsumexp(std::span<const double>(slice, slice_len()));
      require(std::abs(z) <= 1e-6, "alignment grid: slice is not a log-distribution");
    }
  }
}

LossResult forward_backward(const AlignmentGrid& g) {
  g.validate();
  const std::size_t C = g.num_chunks;
  const std::size_t U = g.num_labels;
  const std::size_t K = g.slice_len();

  auto cell = [U](std::size_t c, std::size_t u) { return c * (U + 1) + u; };

  std::vector<double> alpha(C * (U + 1), kNegInf);
  alpha[cell(0, 0)] = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t u = 0; u <= U; ++u) {
      if (c == 0 && u == 0) continue;
      double from_blank = kNegInf;
      if (c >= 1) from_blank = alpha[cell(c - 1, u)] + g.at(c - 1, u, 0);
      double from_label = kNegInf;
      if (u >= 1) {
        int y = g.targets[u - 1];
        from_label = alpha[cell(c, u - 1)] + g.at(c, u - 1, static_cast<std::size_t>(y));
      }
      alpha[cell(c, u)] = log_add(from_blank, from_label);
    }
  }
  const double total_f = alpha[cell(C - 1, U)] + g.at(C - 1, U, 0);

  // beta(c,u): log-probability of completing the alignment from (c,u),
  // including the emission made there. The blank edge at the last chunk
  // is only the final one (u == U).
  std::vector<double> beta(C * (U + 1), kNegInf);
  auto beta_next = [&](std::size_t c, std::size_t u) {
    if (c + 1 < C) return beta[cell(c + 1, u)];
    return u == U ? 0.0 : kNegInf;
  };
  for (std::size_t c = C; c-- > 0;) {
    for (std::size_t u = U + 1; u-- > 0;) {
      double via_blank = g.at(c, u, 0) + beta_next(c, u);
      double via_label = kNegInf;
      if (u < U) {
        int y = g.targets[u];
        via_label = g.at(c, u, static_cast<std::size_t>(y)) + beta[cell(c, u + 1)];
      }
      beta[cell(c, u)] = log_add(via_blank, via_label);
    }
  }
  const double total_b = beta[cell(0, 0)];

  if (std::isfinite(total_f) || std::isfinite(total_b)) {
    if (!(std::abs(total_f - total_b) <= 1e-6)) {
      throw std::runtime_error("forward_backward: alpha/beta totals disagree");
    }
  }

  const double log_z = total_f;
  LossResult result;
  result.nll = -log_z;
  result.nll_backward = -total_b;
  result.grad_logits.assign(g.log_probs.size(), 0.0);
  if (log_z == kNegInf) return result;  // no path has positive probability

  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t u = 0; u <= U; ++u) {
      double a = alpha[cell(c, u)];
      double gamma_blank = occupancy({a, g.at(c, u, 0), beta_next(c, u)}, log_z);
      double gamma_label = 0.0;
      int y = -1;
      if (u < U) {
        y = g.targets[u];
        gamma_label = occupancy(
            {a, g.at(c, u, static_cast<std::size_t>(y)), beta[cell(c, u + 1)]}, log_z);
      }
      double gamma_total = gamma_blank + gamma_label;
      double* out = result.grad_logits.data() + g.index(c, u, 0);
      for (std::size_t k = 0; k < K; ++k) {
        double p = std::exp(g.at(c, u, k));
        out[k] = p * gamma_total;
      }
      out[0] -= gamma_blank;
      if (y >= 0) out[static_cast<std::size_t>(y)] -= gamma_label;
    }
  }
  return result;
}

double enumerate_paths(const AlignmentGrid& g, std::uint64_t* path_count) {
  g.validate();
  require(g.num_chunks + g.num_labels <= 14,
          "enumerate_paths: C + U exceeds the size guard");
  const std::size_t C = g.num_chunks;
  const std::size_t U = g.num_labels;
  double total = kNegInf;
  std::uint64_t paths = 0;
  std::function<void(std::size_t, std::size_t, double)> dfs =
      [&](std::size_t c, std::size_t u, double acc) {
        if (c == C - 1 && u == U) {
          total = log_add(total, acc + g.at(c, u, 0));  // final blank
          ++paths;
          return;
        }
        if (c + 1 < C) dfs(c + 1, u, acc + g.at(c, u, 0));
        if (u < U) {
          dfs(c, u + 1, acc + g.at(c, u, static_cast<std::size_t>(g.targets[u])));
        }
      };
  dfs(0, 0, 0.0);
  if (path_count) *path_count = paths;
  return -total;
}

std::size_t blank_count_per_alignment(std::size_t T, std::size_t mu,
                                      std::size_t w) {
  require(mu >= 1 && (mu & (mu - 1)) == 0, "blank count: mu must be a power of two");
  require(w >= 1, "blank count: chunk width must be positive");
  require(T >= mu, "blank count: utterance shorter than the subsampling factor");
  std::size_t len = T;
  for (std::size_t m = mu; m > 1; m /= 2) len /= 2;
  return (len + w - 1) / w;
}

Value transducer_nll(Tape& tape,
                     const std::vector<std::vector<Value>>& logits,
                     std::span<const int> targets, LossResult* result) {
  require(!logits.empty(), "transducer_nll: no chunks");
  const std::size_t C = logits.size();
  const std::size_t U = targets.size();
  const std::size_t K = tape.value(logits[0][0]).size();
  require(K >= 2, "transducer_nll: logits must cover blank plus tokens");

  AlignmentGrid grid(C, U, K - 1, std::vector<int>(targets.begin(), targets.end()));
  std::vector<Value> parents;
  parents.reserve(C * (U + 1));
  for (std::size_t c = 0; c < C; ++c) {
    require(logits[c].size() == U + 1, "transducer_nll: grid row length mismatch");
    for (std::size_t u = 0; u <= U; ++u) {
      const Tensor& z = tape.value(logits[c][u]);
      require(z.size() == K, "transducer_nll: inconsistent logit width");
      double* slice = grid.log_probs.data() + grid.index(c, u, 0);
      for (std::size_t k = 0; k < K; ++k) slice[k] = z[k];
      log_softmax_inplace(std::span<double>(slice, K));
      parents.push_back(logits[c][u]);
    }
  }

  LossResult lr = forward_backward(grid);
  if (result) *result = lr;

  std::vector<double> grad = std::move(lr.grad_logits);
  double nll = lr.nll;
  return tape.custom(
      Tensor::scalar(nll), std::move(parents),
      [grad = std::move(grad), K](const Tensor& upstream,
                                  std::span<Tensor* const> parent_grads) {
        double g0 = upstream[0];
        for (std::size_t i = 0; i < parent_grads.size(); ++i) {
          Tensor& pg = *parent_grads[i];
          const double* src = grad.data() + i * K;
          for (std::size_t k = 0; k < K; ++k) pg[k] += g0 * src[k];
        }
      });
}

}  // namespace attrans
