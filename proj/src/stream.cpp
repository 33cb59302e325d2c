// attrans/stream.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/stream.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <json.hpp>

namespace attrans {

RtfLatency compute_rtf_latency(std::span<const ChunkMetrics> metrics) {
  require(!metrics.empty(), "compute_rtf_latency: no chunks");
  double rtf_sum = 0.0;
  double proc_sum = 0.0;
  for (const ChunkMetrics& m : metrics) {
    require(m.audio_ms > 0.0, "compute_rtf_latency: chunk with no audio");
    rtf_sum += m.processing_ms / m.audio_ms;
    proc_sum += m.processing_ms;
  }
  double n = static_cast<double>(metrics.size());
  return RtfLatency{rtf_sum / n, proc_sum / n + metrics.front().lookahead_ms};
}

StreamSession::StreamSession(ModelParams& params, StreamOptions opts,
                             AttentionProbe* joint_probe)
    : params_(params),
      opts_(opts),
      enc_(tape_, params),
      beam_(initial_beam(tape_, params)),
      probe_(joint_probe) {
  require(opts_.beam >= 1, "stream: beam size must be positive");
  require(opts_.frame_step_ms > 0.0, "stream: frame step must be positive");
  require(chunk_frames() >= 1, "stream: chunk shorter than one frame");
}

std::size_t StreamSession::chunk_frames() const {
  double f = opts_.chunk_ms / opts_.frame_step_ms;
  auto n = static_cast<std::size_t>(std::llround(f));
  require(std::abs(f - static_cast<double>(n)) < 1e-9,
          "stream: chunk_ms must be a whole number of frames");
  return n;
}

std::size_t StreamSession::lookahead_frames() const {
  return params_.config.tau * params_.config.mu();
}

void StreamSession::feed_until(std::size_t row) {
  if (row <= fed_rows_) return;
  std::size_t f = params_.config.feature_dim;
  std::size_t n = row - fed_rows_;
  Tensor block({n, f});
  std::copy(buffer_.begin() + static_cast<std::ptrdiff_t>(fed_rows_ * f),
            buffer_.begin() + static_cast<std::ptrdiff_t>(row * f),
            block.data().begin());
  for (Value v : enc_.push(block)) pending_.push_back(v);
  fed_rows_ = row;
}

void StreamSession::advance_beam_full_chunks() {
  std::size_t w = params_.config.chunk_width;
  while (pending_.size() - pending_off_ >= w) {
    ChunkContext ctx = make_chunk_context(
        tape_, params_, std::span<const Value>(pending_.data() + pending_off_, w));
    beam_ = beam_search_chunk(tape_, params_, beam_, ctx, opts_.beam, opts_.u_max,
                              probe_);
    pending_off_ += w;
  }
}

void StreamSession::finish_encoder() {
  for (Value v : enc_.finish()) pending_.push_back(v);
  enc_finished_ = true;
  advance_beam_full_chunks();
  if (pending_.size() > pending_off_) {  // short final chunk, no padding
    ChunkContext ctx = make_chunk_context(
        tape_, params_,
        std::span<const Value>(pending_.data() + pending_off_,
                               pending_.size() - pending_off_));
    beam_ = beam_search_chunk(tape_, params_, beam_, ctx, opts_.beam, opts_.u_max,
                              probe_);
    pending_off_ = pending_.size();
  }
}

void StreamSession::run_engine_chunk(std::size_t idx, bool last) {
  auto t0 = std::chrono::steady_clock::now();
  std::size_t rows_this = std::min(chunk_frames(), buffered_rows_ - audio_rows_done_);
  std::size_t feed_to = last ? buffered_rows_
                             : std::min(buffered_rows_,
                                        (idx + 1) * chunk_frames() + lookahead_frames());
  feed_until(feed_to);
  if (last) {
    finish_encoder();
  } else {
    advance_beam_full_chunks();
  }
  auto t1 = std::chrono::steady_clock::now();
  double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  metrics_.push_back(ChunkMetrics{
      static_cast<double>(rows_this) * opts_.frame_step_ms, ms,
      static_cast<double>(lookahead_frames()) * opts_.frame_step_ms});
  audio_rows_done_ += rows_this;
}

std::optional<std::vector<int>> StreamSession::push(const Tensor& frames) {
  require(!finalized_, "stream: push after finalize");
  require(frames.rank() == 2, "stream: features must be a (T x feature_dim) matrix");
  require(frames.size() == 0 || frames.cols() == params_.config.feature_dim,
          "stream: feature dimension mismatch");
  for (double x : frames.data()) buffer_.push_back(x);
  buffered_rows_ += frames.rows();

  std::size_t before = metrics_.size();
  while (buffered_rows_ >=
         (metrics_.size() + 1) * chunk_frames() + lookahead_frames()) {
    run_engine_chunk(metrics_.size(), false);
  }
  if (metrics_.size() == before) return std::nullopt;
  return beam_.front().prefix;
}

StreamResult StreamSession::finalize() {
  require(!finalized_, "stream: finalize after finalize");
  finalized_ = true;
  StreamResult result;
  if (buffered_rows_ == 0) {
    result.tokens = beam_.front().prefix;
    result.log_prob = beam_.front().log_prob;
    return result;
  }
  while (audio_rows_done_ < buffered_rows_) {
    bool last = buffered_rows_ - audio_rows_done_ <= chunk_frames();
    run_engine_chunk(metrics_.size(), last);
  }
  if (!enc_finished_) {
    // Every engine chunk was already processed during pushes (possible
    // with zero lookahead); flush the encoder tail into the last chunk's
    // accounting.
    auto t0 = std::chrono::steady_clock::now();
    finish_encoder();
    auto t1 = std::chrono::steady_clock::now();
    metrics_.back().processing_ms +=
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  result.tokens = beam_.front().prefix;
  result.log_prob = beam_.front().log_prob;
  result.chunks = metrics_;
  return result;
}

StreamResult decode_utterance(ModelParams& params, const Tensor& features,
                              std::size_t beam_size, const StreamOptions& base,
                              AttentionProbe* joint_probe) {
  StreamOptions opts = base;
  opts.beam = beam_size;
  StreamSession session(params, opts, joint_probe);
  session.push(features);
  return session.finalize();
}

Tensor read_feature_file(const std::string& path, std::size_t feature_dim) {
  require(feature_dim >= 1, "read_feature_file: feature_dim must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  std::size_t row_bytes = feature_dim * 4;
  if (bytes.size() % row_bytes != 0) {
    throw std::runtime_error("feature file size is not a whole number of frames: " +
                             path);
  }
  std::size_t rows = bytes.size() / row_bytes;
  Tensor out({rows, feature_dim});
  for (std::size_t i = 0; i < rows * feature_dim; ++i) {
    auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + i * 4;
    std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                      (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) |
                      (static_cast<std::uint32_t>(p[3]) << 24);
    out[i] = static_cast<double>(std::bit_cast<float>(u));
  }
  return out;
}

void write_feature_file(const std::string& path, const Tensor& features) {
  require(features.rank() == 2, "write_feature_file: expected a 2-D tensor");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write feature file: " + path);
  for (double x : features.data()) {
    auto u = std::bit_cast<std::uint32_t>(static_cast<float>(x));
    char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                 static_cast<char>((u >> 16) & 0xff),
                 static_cast<char>((u >> 24) & 0xff)};
    out.write(b, 4);
  }
}

std::string benchmark_row_json(const std::string& utterance,
                               const StreamResult& result,
                               const Vocabulary* vocab) {
  double audio_ms = 0.0;
  for (const ChunkMetrics& m : result.chunks) audio_ms += m.audio_ms;
  nlohmann::json row;
  row["utterance"] = utterance;
  row["audio_ms"] = audio_ms;
  if (!result.chunks.empty()) {
    RtfLatency rl = compute_rtf_latency(result.chunks);
    row["rtf"] = rl.rtf;
    row["latency_ms"] = rl.latency_ms;
    row["lookahead_ms"] = result.chunks.front().lookahead_ms;
  } else {
    row["rtf"] = 0.0;
    row["latency_ms"] = 0.0;
    row["lookahead_ms"] = 0.0;
  }
  if (vocab) {
    row["transcript"] = vocab->render(result.tokens);
  } else {
    std::string ids;
    for (std::size_t i = 0; i < result.tokens.size(); ++i) {
      if (i) ids += ' ';
      ids += std::to_string(result.tokens[i]);
    }
    row["transcript"] = ids;
  }
  return row.dump();
}

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<std::string> files;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) files.push_back(line);
  }
  return files;
}

}  // namespace attrans
