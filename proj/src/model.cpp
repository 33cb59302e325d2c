// attrans/model.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "attrans/configfile.hpp"

namespace attrans {

void ModelConfig::validate() const {
  require(feature_dim >= 1, "config: feature_dim must be positive");
  require(n_p <= 16, "config: n_p out of range");
  require(n_lstm >= 1, "config: need at least one post-pyramid LSTM layer");
  require(d >= 2, "config: d must be at least 2");
  require(d_dec >= 2, "config: d_dec must be at least 2");
  require(n_att >= 1, "config: n_att must be positive");
  require(d % n_att == 0, "config: d must be divisible by n_att");
  require(chunk_width >= 1, "config: chunk_width must be positive");
  require(vocab >= 1, "config: vocab must be positive");
  require(p_ss >= 0.0 && p_ss <= 1.0, "config: p_ss must lie in [0, 1]");
  require(ln_epsilon > 0.0, "config: ln_epsilon must be positive");
}

std::string ModelConfig::dump() const {
  std::ostringstream out;
  out << "feature_dim = " << feature_dim << "\n";
  out << "n_p = " << n_p << "\n";
  out << "n_lstm = " << n_lstm << "\n";
  out << "d = " << d << "\n";
  out << "d_dec = " << d_dec << "\n";
  out << "n_att = " << n_att << "\n";
  out << "tau = " << tau << "\n";
  out << "chunk_width = " << chunk_width << "\n";
  out << "vocab = " << vocab << "\n";
  out << "p_ss = " << p_ss << "\n";
  out << "ln_epsilon = " << ln_epsilon << "\n";
  return out.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
  KeyValues kv = parse_key_values(text);
  ModelConfig cfg;
  cfg.feature_dim = get_size(kv, "feature_dim", cfg.feature_dim);
  cfg.n_p = get_size(kv, "n_p", cfg.n_p);
  cfg.n_lstm = get_size(kv, "n_lstm", cfg.n_lstm);
  cfg.d = get_size(kv, "d", cfg.d);
  cfg.d_dec = get_size(kv, "d_dec", cfg.d_dec);
  cfg.n_att = get_size(kv, "n_att", cfg.n_att);
  cfg.tau = get_size(kv, "tau", cfg.tau);
  cfg.chunk_width = get_size(kv, "chunk_width", cfg.chunk_width);
  cfg.vocab = get_size(kv, "vocab", cfg.vocab);
  cfg.p_ss = get_double(kv, "p_ss", cfg.p_ss);
  cfg.ln_epsilon = get_double(kv, "ln_epsilon", cfg.ln_epsilon);
  cfg.validate();
  return cfg;
}

Vocabulary Vocabulary::numbered(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 1; i <= n; ++i) v.tokens_.push_back("tok" + std::to_string(i));
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(!line.empty(), "vocabulary: empty token line");
    require(seen.insert(line).second, "vocabulary: duplicate token");
    v.tokens_.push_back(line);
  }
  require(!v.tokens_.empty(), "vocabulary: no tokens");
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (const std::string& t : tokens_) out << t << "\n";
}

const std::string& Vocabulary::name(int id) const {
  require(id >= 1 && id <= static_cast<int>(tokens_.size()),
          "vocabulary: token id out of range");
  return tokens_[static_cast<std::size_t>(id) - 1];
}

std::string Vocabulary::render(std::span<const int> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += name(tokens[i]);
  }
  return out;
}

JointParams::JointParams(const std::string& prefix, const ModelConfig& cfg)
    : out_w(prefix + ".out_w", {cfg.vocab + 1, cfg.d + cfg.d_dec}),
      out_b(prefix + ".out_b", {cfg.vocab + 1}) {
  std::size_t dh = cfg.d / cfg.n_att;
  for (std::size_t a = 0; a < cfg.n_att; ++a) {
    std::string idx = std::to_string(a);
    q.emplace_back(prefix + ".q" + idx, std::vector<std::size_t>{dh, cfg.d_dec});
    k.emplace_back(prefix + ".k" + idx, std::vector<std::size_t>{dh, cfg.d});
    v.emplace_back(prefix + ".v" + idx, std::vector<std::size_t>{dh, cfg.d});
  }
}

void JointParams::init(std::mt19937_64& rng) {
  auto uniform = [&rng](Parameter& p, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& x : p.value.data()) x = dist(rng);
  };
  for (std::size_t a = 0; a < q.size(); ++a) {
    uniform(q[a], 1.0 / std::sqrt(static_cast<double>(q[a].value.cols())));
    uniform(k[a], 1.0 / std::sqrt(static_cast<double>(k[a].value.cols())));
    uniform(v[a], 1.0 / std::sqrt(static_cast<double>(v[a].value.cols())));
  }
  uniform(out_w, 1.0 / std::sqrt(static_cast<double>(out_w.value.cols())));
  out_b.value.fill(0.0);
}

void JointParams::collect(std::vector<Parameter*>& out) {
  for (std::size_t a = 0; a < q.size(); ++a) {
    out.push_back(&q[a]);
    out.push_back(&k[a]);
    out.push_back(&v[a]);
  }
  out.push_back(&out_w);
  out.push_back(&out_b);
}

ModelParams::ModelParams(const ModelConfig& cfg)
    : config(cfg),
      enc_attn("enc.attn", cfg.d, cfg.n_att, cfg.tau, cfg.ln_epsilon),
      embedding("dec.embed", {cfg.vocab + 2, cfg.d_dec}),
      joint("joint", cfg) {
  config.validate();
  for (std::size_t i = 0; i < cfg.n_p; ++i) {
    std::size_t in = (i == 0) ? cfg.feature_dim : 2 * cfg.d;
    plstm.emplace_back("enc.plstm" + std::to_string(i), in, cfg.d);
  }
  for (std::size_t i = 0; i < cfg.n_lstm; ++i) {
    std::size_t in = (i == 0) ? (cfg.n_p > 0 ? 2 * cfg.d : cfg.feature_dim) : cfg.d;
    lstm.emplace_back("enc.lstm" + std::to_string(i), in, cfg.d);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    dec_lstm.emplace_back("dec.lstm" + std::to_string(i), cfg.d_dec, cfg.d_dec);
  }
}

void ModelParams::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : plstm) l.init(rng);
  for (auto& l : lstm) l.init(rng);
  enc_attn.init(rng);
  std::uniform_real_distribution<double> emb(-0.1, 0.1);
  for (double& x : embedding.value.data()) x = emb(rng);
  for (auto& l : dec_lstm) l.init(rng);
  joint.init(rng);
}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out;
  for (auto& l : plstm) l.collect(out);
  for (auto& l : lstm) l.collect(out);
  enc_attn.collect(out);
  out.push_back(&embedding);
  for (auto& l : dec_lstm) l.collect(out);
  joint.collect(out);
  return out;
}

void ModelParams::zero_grad() {
  for (Parameter* p : all()) p->zero_grad();
}

// --- Encoder ---------------------------------------------------------

EncoderStream::EncoderStream(Tape& tape, ModelParams& params,
                             AttentionProbe* probe)
    : tape_(tape),
      params_(params),
      plstm_pending_(params.config.n_p),
      attn_(tape, params.enc_attn, probe) {
  for (std::size_t i = 0; i < params.config.n_p; ++i) {
    plstm_state_.push_back(zero_lstm_state(tape, params.config.d));
  }
  for (std::size_t i = 0; i < params.config.n_lstm; ++i) {
    lstm_state_.push_back(zero_lstm_state(tape, params.config.d));
  }
}

void EncoderStream::feed_frame(Value x) {
  Value cur = x;
  for (std::size_t l = 0; l < plstm_state_.size(); ++l) {
    plstm_state_[l] = lstm_step(tape_, params_.plstm[l], cur, plstm_state_[l]);
    Value h = plstm_state_[l].h;
    if (!plstm_pending_[l].has_value()) {
      plstm_pending_[l] = h;
      return;  // waits for its pair
    }
    Value pair[] = {*plstm_pending_[l], h};
    cur = tape_.concat(pair);
    plstm_pending_[l].reset();
  }
  for (std::size_t l = 0; l < lstm_state_.size(); ++l) {
    lstm_state_[l] = lstm_step(tape_, params_.lstm[l], cur, lstm_state_[l]);
    cur = lstm_state_[l].h;
  }
  attn_.push(cur);
}

std::vector<Value> EncoderStream::push(const Tensor& frames) {
  require(!finished_, "encoder: push after finish");
  require(frames.rank() == 2, "encoder: features must be a (T x feature_dim) matrix");
  require(frames.size() == 0 || frames.cols() == params_.config.feature_dim,
          "encoder: feature dimension mismatch");
  std::size_t f = params_.config.feature_dim;
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    Tensor row({f});
    for (std::size_t j = 0; j < f; ++j) row[j] = frames.at(r, j);
    feed_frame(tape_.constant(std::move(row)));
    ++frames_pushed_;
  }
  return attn_.take_ready();
}

std::vector<Value> EncoderStream::finish() {
  require(!finished_, "encoder: finish after finish");
  finished_ = true;
  require(frames_pushed_ >= params_.config.mu(), "utterance too short");
  return attn_.flush();
}

std::vector<Value> encode(Tape& tape, ModelParams& params, const Tensor& features,
                          AttentionProbe* probe) {
  EncoderStream stream(tape, params, probe);
  std::vector<Value> out = stream.push(features);
  for (Value v : stream.finish()) out.push_back(v);
  return out;
}

// --- Prediction network ----------------------------------------------

PredState pred_zero_state(Tape& tape, ModelParams& params) {
  PredState st;
  for (std::size_t i = 0; i < params.dec_lstm.size(); ++i) {
    st.layers.push_back(zero_lstm_state(tape, params.config.d_dec));
  }
  return st;
}

std::pair<Value, PredState> predict_step(Tape& tape, ModelParams& params,
                                         int token, const PredState& state) {
  require(token != kBlankId, "predict_step: blank is never fed to the prediction network");
  require(token >= 1 && token <= params.config.sos(),
          "predict_step: token id out of range");
  Value x = tape.row(tape.param(params.embedding), static_cast<std::size_t>(token));
  PredState next;
  Value cur = x;
  for (std::size_t l = 0; l < params.dec_lstm.size(); ++l) {
    next.layers.push_back(lstm_step(tape, params.dec_lstm[l], cur, state.layers[l]));
    cur = next.layers[l].h;
  }
  return {cur, next};
}

std::pair<Value, PredState> predict_start(Tape& tape, ModelParams& params) {
  return predict_step(tape, params, params.config.sos(), pred_zero_state(tape, params));
}

// --- Joint network ----------------------------------------------------

ChunkedEncoderOutput chunk_encoder_outputs(std::span<const Value> h,
                                           std::size_t w) {
  require(w >= 1, "chunk_encoder_outputs: chunk width must be positive");
  require(!h.empty(), "chunk_encoder_outputs: empty encoder output");
  ChunkedEncoderOutput out;
  for (std::size_t start = 0; start < h.size(); start += w) {
    std::size_t end = std::min(start + w, h.size());
    out.chunks.emplace_back(h.begin() + static_cast<std::ptrdiff_t>(start),
                            h.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

ChunkContext make_chunk_context(Tape& tape, ModelParams& params,
                                std::span<const Value> chunk) {
  require(!chunk.empty(), "joint: empty chunk");
  ChunkContext ctx;
  ctx.frames.assign(chunk.begin(), chunk.end());
  std::size_t heads = params.config.n_att;
  ctx.k.resize(heads);
  ctx.v.resize(heads);
  for (std::size_t a = 0; a < heads; ++a) {
    for (Value f : chunk) {
      ctx.k[a].push_back(tape.matvec(tape.param(params.joint.k[a]), f));
      ctx.v[a].push_back(tape.matvec(tape.param(params.joint.v[a]), f));
    }
  }
  return ctx;
}

Value joint_logits(Tape& tape, ModelParams& params, const ChunkContext& chunk,
                   Value s_u, AttentionProbe* probe) {
  require(!chunk.frames.empty(), "joint: empty chunk");
  require(tape.value(s_u).size() == params.config.d_dec,
          "joint: prediction output dimension mismatch");
  std::size_t heads = params.config.n_att;
  double inv_sqrt =
      1.0 / std::sqrt(static_cast<double>(params.config.d / params.config.n_att));
  std::vector<Value> parts;
  parts.reserve(heads + 1);
  for (std::size_t a = 0; a < heads; ++a) {
    Value qu = tape.matvec(tape.param(params.joint.q[a]), s_u);
    std::vector<Value> scores;
    scores.reserve(chunk.frames.size());
    for (std::size_t i = 0; i < chunk.frames.size(); ++i) {
      scores.push_back(tape.dot(qu, chunk.k[a][i]));
    }
    Value alpha = tape.softmax(tape.scale(tape.concat(scores), inv_sqrt));
    if (probe) {
      auto w = tape.value(alpha).data();
      probe->weights.emplace_back(w.begin(), w.end());
    }
    parts.push_back(tape.weighted_sum(alpha, chunk.v[a]));
  }
  parts.push_back(s_u);
  Value feats = tape.concat(parts);
  return tape.add(tape.matvec(tape.param(params.joint.out_w), feats),
                  tape.param(params.joint.out_b));
}

int scheduled_sample(int true_label, std::size_t vocab, double p_ss,
                     std::mt19937_64& rng) {
  require(true_label >= 1 && true_label <= static_cast<int>(vocab),
          "scheduled_sample: label out of range");
  require(p_ss >= 0.0 && p_ss <= 1.0, "scheduled_sample: p_ss out of range");
  if (p_ss > 0.0 && std::bernoulli_distribution(p_ss)(rng)) {
    return std::uniform_int_distribution<int>(1, static_cast<int>(vocab))(rng);
  }
  return true_label;
}

}  // namespace attrans
