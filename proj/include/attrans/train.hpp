// attrans/train.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Training loop (forward-backward loss, Adam, scheduled sampling),
// token error rate, and evaluation helpers. Batches are counted in
// frames; runs are deterministic given seed and dataset.

#pragma once

#include <iosfwd>

#include "attrans/loss.hpp"
#include "attrans/model.hpp"
#include "attrans/synthetic.hpp"

namespace attrans {

struct TrainConfig {
  std::size_t steps = 200;
  std::size_t batch_frames = 1536;  // utterances accumulate until this budget
  double lr = 1e-3;
  double clip_norm = 5.0;
  double p_ss = 0.1;
  bool deterministic = true;
  std::size_t checkpoint_every = 0;  // 0 = final checkpoint only
  std::uint64_t seed = 1;

  static TrainConfig from_map(const KeyValues& kv);
};

class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  // Applies one update from the accumulated gradients.
  void step(double lr);

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

// Scales gradients so the global L2 norm is at most max_norm; returns
// the pre-clip norm.
double clip_gradients(std::span<Parameter* const> params, double max_norm);

// Builds the full graph for one utterance: encode, predict with
// scheduled sampling, joint over every (chunk, label) cell, transducer
// loss. ss_rng may be null when p_ss is 0.
Value utterance_loss(Tape& tape, ModelParams& params, const Utterance& utt,
                     double p_ss, std::mt19937_64* ss_rng,
                     LossResult* result = nullptr);

struct StepLog {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  std::vector<StepLog> log;
};

// Aborts with a diagnostic if the loss diverges (non-finite nll).
TrainResult train(ModelParams& params, const std::vector<Utterance>& dataset,
                  const TrainConfig& cfg, const std::string& checkpoint_path = "",
                  std::ostream* progress = nullptr);

struct TerResult {
  double rate = 0.0;
  std::size_t ins = 0, del = 0, sub = 0;
};

// Levenshtein alignment with unit costs; rate = (I+D+S) / len(ref),
// and an empty reference scores rate = I.
TerResult token_error_rate(std::span<const int> hyp, std::span<const int> ref);

struct EvalResult {
  double token_accuracy = 1.0;  // 1 - (I+D+S) / total reference length
  TerResult totals;
};

EvalResult evaluate_greedy(ModelParams& params, std::span<const Utterance> testset,
                           std::size_t u_max = 8);
EvalResult evaluate_beam(ModelParams& params, std::span<const Utterance> testset,
                         std::size_t beam_size, std::size_t u_max = 8);

struct ErrorBreakdownRow {
  std::string label;
  std::size_t ins = 0, del = 0, sub = 0;
  double ter = 0.0;
};

// Decodes the same test set with both models and tabulates I/D/S.
std::vector<ErrorBreakdownRow> error_breakdown_report(
    ModelParams& model_a, ModelParams& model_b,
    std::span<const Utterance> testset, std::size_t beam_size,
    std::size_t u_max = 8);

}  // namespace attrans
