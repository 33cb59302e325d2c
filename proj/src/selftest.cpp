// attrans/selftest.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/selftest.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "attrans/logmath.hpp"
#include "attrans/loss.hpp"
#include "attrans/quantize.hpp"
#include "attrans/synthetic.hpp"
#include "attrans/train.hpp"

namespace attrans {

namespace {

AlignmentGrid random_grid(std::mt19937_64& rng, std::size_t C, std::size_t U,
                          std::size_t vocab) {
  std::vector<int> targets;
  std::uniform_int_distribution<int> tok(1, static_cast<int>(vocab));
  for (std::size_t u = 0; u < U; ++u) targets.push_back(tok(rng));
  AlignmentGrid g(C, U, vocab, std::move(targets));
  std::normal_distribution<double> logit(0.0, 2.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t u = 0; u <= U; ++u) {
      std::vector<double> z(g.slice_len());
      for (double& x : z) x = logit(rng);
      log_softmax_inplace(z);
      for (std::size_t k = 0; k < z.size(); ++k) g.at(c, u, k) = z[k];
    }
  }
  return g;
}

bool check_logmath(std::ostream& out) {
  double v[] = {1.0, 2.0, 3.0};
  bool ok = std::abs(logsumexp(v) - 3.4076059644443806) < 1e-12;
  double ninf[] = {kNegInf, kNegInf};
  ok = ok && logsumexp(ninf) == kNegInf;
  double two[] = {0.0, std::log(3.0)};
  auto p = softmax(two);
  ok = ok && std::abs(p[0] - 0.25) < 1e-12 && std::abs(p[1] - 0.75) < 1e-12;
  out << (ok ? "[ok]" : "[FAILED]") << " log-space primitives\n";
  return ok;
}

bool check_loss_oracle(std::ostream& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> cs(1, 4), us(0, 3), vs(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    AlignmentGrid g = random_grid(rng, cs(rng), us(rng), vs(rng));
    LossResult fb = forward_backward(g);
    double ref = enumerate_paths(g);
    worst = std::max(worst, std::abs(fb.nll - ref));
    for (std::size_t c = 0; c < g.num_chunks; ++c) {
      for (std::size_t u = 0; u <= g.num_labels; ++u) {
        double s = 0.0;
        for (std::size_t k = 0; k < g.slice_len(); ++k) {
          s += fb.grad_logits[g.index(c, u, k)];
        }
        worst = std::max(worst, std::abs(s));
      }
    }
  }
  bool ok = worst <= 1e-9;
  out << (ok ? "[ok]" : "[FAILED]") << " forward-backward vs path enumeration (200 grids, "
      << "max err " << worst << ")\n";
  return ok;
}

bool check_gradients(std::ostream& out, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.feature_dim = 4;
  cfg.n_p = 1;
  cfg.n_lstm = 1;
  cfg.d = 4;
  cfg.d_dec = 4;
  cfg.n_att = 2;
  cfg.tau = 1;
  cfg.chunk_width = 2;
  cfg.vocab = 3;
  ModelParams params(cfg);
  params.init(seed);

  SyntheticTaskConfig task;
  task.vocab = cfg.vocab;
  task.feature_dim = cfg.feature_dim;
  task.min_frames = 96;
  task.max_frames = 96;
  task.min_tokens = 2;
  task.max_tokens = 2;
  task.seed = seed;
  Utterance utt = generate_synthetic_dataset(task, 1)[0];

  auto loss_value = [&]() {
    Tape tape(false);
    return tape.value(utterance_loss(tape, params, utt, 0.0, nullptr))[0];
  };
  Tape tape;
  params.zero_grad();
  Value loss = utterance_loss(tape, params, utt, 0.0, nullptr);
  tape.backward(loss);

  // Check the highest-sensitivity entry of every tensor: double-precision
  // differencing is only trustworthy where the gradient is not tiny. The
  // acceptance suite covers every entry against an extended-precision
  // oracle.
  double worst = 0.0;
  const double h = 1e-4;
  for (Parameter* p : params.all()) {
    std::size_t j = 0;
    for (std::size_t i = 1; i < p->grad.size(); ++i) {
      if (std::abs(p->grad[i]) > std::abs(p->grad[j])) j = i;
    }
    if (std::abs(p->grad[j]) < 1e-4) continue;
    double saved = p->value[j];
    auto at = [&](double x) {
      p->value[j] = x;
      return loss_value();
    };
    // 5-point central stencil: O(h^4) truncation, low cancellation noise.
    double fd = (8.0 * (at(saved + h) - at(saved - h)) -
                 (at(saved + 2.0 * h) - at(saved - 2.0 * h))) /
                (12.0 * h);
    p->value[j] = saved;
    double ga = p->grad[j];
    double rel = std::abs(ga - fd) / std::max(1e-8, std::abs(ga) + std::abs(fd));
    worst = std::max(worst, rel);
  }
  bool ok = worst <= 1e-5;
  out << (ok ? "[ok]" : "[FAILED]") << " finite-difference gradient check (max rel err "
      << worst << ")\n";
  return ok;
}

bool check_quantization(std::ostream& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.5);
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor t({17, 11});
    for (double& x : t.data()) x = dist(rng);
    QuantizedTensor q = quantize_tensor(t);
    Tensor back = dequantize(q);
    for (std::size_t i = 0; i < t.size(); ++i) {
      ok = ok && std::abs(t[i] - back[i]) <= q.scale / 2 + 1e-12;
    }
    QuantizedTensor again = quantize_tensor(back);
    ok = ok && again.data == q.data;
  }
  out << (ok ? "[ok]" : "[FAILED]") << " int8 round trip and idempotence\n";
  return ok;
}

}  // namespace

bool run_selftest(std::ostream& out, std::uint64_t seed) {
  bool ok = true;
  ok &= check_logmath(out);
  ok &= check_loss_oracle(out, seed);
  ok &= check_gradients(out, seed);
  ok &= check_quantization(out, seed);
  out << (ok ? "selftest passed" : "selftest FAILED") << "\n";
  return ok;
}

}  // namespace attrans
