// attrans/model.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// The three transducer components: a pyramidal-LSTM encoder with local
// self-attention, a 2-layer LSTM prediction network, and a joint network
// in which the prediction output attends over one chunk of encoder
// outputs and is projected to logits over the vocabulary plus blank.

#pragma once

#include <optional>
#include <string>

#include "attrans/layers.hpp"

namespace attrans {

// Token id conventions: 0 is blank and never appears in transcripts or
// prediction-network inputs; real tokens are 1..vocab; vocab+1 is the
// start-of-sequence token fed to the prediction network before the
// first emission.
inline constexpr int kBlankId = 0;

struct ModelConfig {
  std::size_t feature_dim = 16;
  std::size_t n_p = 3;       // pyramidal LSTM layers, each halving time
  std::size_t n_lstm = 2;    // LSTM layers after the pyramid
  std::size_t d = 64;        // encoder width
  std::size_t d_dec = 32;    // prediction network width (= embedding dim)
  std::size_t n_att = 4;     // attention heads (encoder and joint)
  std::size_t tau = 2;       // self-attention context length, encoder frames
  std::size_t chunk_width = 4;
  std::size_t vocab = 16;    // |Y|, excluding blank
  double p_ss = 0.1;         // scheduled-sampling probability
  double ln_epsilon = 1e-5;

  std::size_t mu() const { return std::size_t{1} << n_p; }
  int sos() const { return static_cast<int>(vocab) + 1; }
  void validate() const;
  std::string dump() const;
  static ModelConfig parse(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

// Ordered token list; id 0 is the implicit blank and has no line in the
// vocabulary file (line j holds the token with id j + 1).
class Vocabulary {
 public:
  Vocabulary() = default;
  static Vocabulary numbered(std::size_t n);  // tok1 .. tokN
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  int blank() const { return kBlankId; }
  int sos() const { return static_cast<int>(tokens_.size()) + 1; }
  const std::string& name(int id) const;
  std::string render(std::span<const int> tokens) const;

 private:
  std::vector<std::string> tokens_;
};

struct JointParams {
  std::vector<Parameter> q;  // per head (d/n_att, d_dec)
  std::vector<Parameter> k;  // per head (d/n_att, d)
  std::vector<Parameter> v;  // per head (d/n_att, d)
  Parameter out_w;           // (vocab + 1, d + d_dec)
  Parameter out_b;           // (vocab + 1)

  JointParams(const std::string& prefix, const ModelConfig& cfg);
  void init(std::mt19937_64& rng);
  void collect(std::vector<Parameter*>& out);
};

struct ModelParams {
  ModelConfig config;
  std::vector<LstmCellParams> plstm;
  std::vector<LstmCellParams> lstm;
  SelfAttentionParams enc_attn;
  Parameter embedding;                   // (vocab + 2, d_dec); row 0 unused,
                                         // rows 1..vocab tokens, last row sos
  std::vector<LstmCellParams> dec_lstm;  // 2 layers
  JointParams joint;

  explicit ModelParams(const ModelConfig& cfg);
  void init(std::uint64_t seed);
  std::vector<Parameter*> all();
  void zero_grad();
};

// --- Encoder ---------------------------------------------------------

// Incremental encoder: pyramidal LSTM cascade, LSTM stack, then local
// self-attention. Frames go in at the feature rate; encoder outputs come
// out at rate 1/mu, delayed by the attention context. Offline encoding
// is the same object fed all frames at once, so streaming and offline
// outputs are identical bit for bit.
class EncoderStream {
 public:
  EncoderStream(Tape& tape, ModelParams& params, AttentionProbe* probe = nullptr);

  // frames: (K x feature_dim), K >= 0. Returns newly available outputs.
  std::vector<Value> push(const Tensor& frames);
  // Emits the remaining tail (truncated attention windows). Throws
  // "utterance too short" when fewer than 2^n_p frames were pushed.
  std::vector<Value> finish();
  std::size_t frames_pushed() const { return frames_pushed_; }

 private:
  void feed_frame(Value x);

  Tape& tape_;
  ModelParams& params_;
  std::vector<LstmState> plstm_state_;
  std::vector<std::optional<Value>> plstm_pending_;
  std::vector<LstmState> lstm_state_;
  LocalAttentionStream attn_;
  std::size_t frames_pushed_ = 0;
  bool finished_ = false;
};

// Offline convenience: T_enc = floor(T / 2) applied n_p times.
std::vector<Value> encode(Tape& tape, ModelParams& params, const Tensor& features,
                          AttentionProbe* probe = nullptr);

// --- Prediction network ----------------------------------------------

struct PredState {
  std::vector<LstmState> layers;
};

PredState pred_zero_state(Tape& tape, ModelParams& params);

// token is sos or 1..vocab; blank is never fed back and is rejected.
std::pair<Value, PredState> predict_step(Tape& tape, ModelParams& params,
                                         int token, const PredState& state);

// s_0 from <sos> and a zero initial state.
std::pair<Value, PredState> predict_start(Tape& tape, ModelParams& params);

// --- Joint network ----------------------------------------------------

struct ChunkedEncoderOutput {
  std::vector<std::vector<Value>> chunks;  // chunk c holds w_c frames
};

// C = ceil(len / w); all chunks have width w except a possibly short
// final chunk. Concatenating the chunks reproduces the input exactly.
ChunkedEncoderOutput chunk_encoder_outputs(std::span<const Value> h,
                                           std::size_t w);

// Per-chunk projections shared across label positions and hypotheses.
struct ChunkContext {
  std::vector<Value> frames;
  std::vector<std::vector<Value>> k, v;  // [head][i]
};

ChunkContext make_chunk_context(Tape& tape, ModelParams& params,
                                std::span<const Value> chunk);

// Logits over Y plus blank for one (chunk, s_u) pair: per head the
// prediction output attends over the chunk frames; head outputs and s_u
// are concatenated and affinely projected to vocab + 1 logits.
Value joint_logits(Tape& tape, ModelParams& params, const ChunkContext& chunk,
                   Value s_u, AttentionProbe* probe = nullptr);

// With probability p_ss, replaces the true label by a uniform sample
// from 1..vocab (blank excluded); otherwise returns the label unchanged.
int scheduled_sample(int true_label, std::size_t vocab, double p_ss,
                     std::mt19937_64& rng);

}  // namespace attrans
