// attrans/stream.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Real-time simulation: features arrive in arbitrary pushes, the
// session processes them in fixed engine chunks (100 ms by default)
// once each chunk plus the attention lookahead is buffered, and the
// beam advances chunk-synchronously. The final transcript is identical
// for every partition of the frames into pushes.

#pragma once

#include <optional>

#include "attrans/decode.hpp"

namespace attrans {

struct ChunkMetrics {
  double audio_ms = 0.0;       // audio covered by this engine chunk
  double processing_ms = 0.0;  // wall clock, monotonic
  double lookahead_ms = 0.0;   // tau * mu * frame_step, exact
};

struct RtfLatency {
  double rtf = 0.0;         // mean over chunks of processing / audio
  double latency_ms = 0.0;  // mean processing + lookahead
};

// Requires at least one chunk. Averages include every chunk, warm-up
// ones too.
RtfLatency compute_rtf_latency(std::span<const ChunkMetrics> metrics);

struct StreamOptions {
  std::size_t beam = 8;
  std::size_t u_max = kDefaultUMax;
  double chunk_ms = 100.0;
  double frame_step_ms = 10.0;
};

struct StreamResult {
  std::vector<int> tokens;
  double log_prob = 0.0;
  std::vector<ChunkMetrics> chunks;
};

class StreamSession {
 public:
  StreamSession(ModelParams& params, StreamOptions opts,
                AttentionProbe* joint_probe = nullptr);

  // frames: (K x feature_dim), K >= 0. Returns the current best prefix
  // when this push advanced the beam, nullopt otherwise. Calling push
  // after finalize is an error.
  std::optional<std::vector<int>> push(const Tensor& frames);

  // Flushes buffered frames (the final chunk may be short; no padding)
  // and returns the transcript with per-chunk metrics. An empty session
  // yields an empty transcript and no metrics; a nonempty one shorter
  // than the subsampling factor propagates "utterance too short".
  StreamResult finalize();

  std::size_t frames_buffered() const { return buffered_rows_; }

 private:
  std::size_t chunk_frames() const;
  std::size_t lookahead_frames() const;
  void feed_until(std::size_t row);
  void advance_beam_full_chunks();
  void finish_encoder();
  void run_engine_chunk(std::size_t idx, bool last);

  ModelParams& params_;
  StreamOptions opts_;
  Tape tape_{false};
  EncoderStream enc_;
  Beam beam_;
  AttentionProbe* probe_;

  std::vector<double> buffer_;  // row-major feature rows awaiting processing
  std::size_t buffered_rows_ = 0;
  std::size_t fed_rows_ = 0;
  std::size_t audio_rows_done_ = 0;
  std::vector<Value> pending_;  // encoder outputs not yet consumed by the beam
  std::size_t pending_off_ = 0;
  std::vector<ChunkMetrics> metrics_;
  bool enc_finished_ = false;
  bool finalized_ = false;
};

// Offline decoding is a stream session fed the whole utterance at once.
StreamResult decode_utterance(ModelParams& params, const Tensor& features,
                              std::size_t beam_size,
                              const StreamOptions& base = StreamOptions{},
                              AttentionProbe* joint_probe = nullptr);

// Feature files: raw frames of feature_dim 32-bit IEEE-754
// little-endian values, row-major, no header.
Tensor read_feature_file(const std::string& path, std::size_t feature_dim);
void write_feature_file(const std::string& path, const Tensor& features);

// Text manifest: one feature-file path per line.
std::vector<std::string> read_manifest(const std::string& path);

// One benchmark report row as a JSON object (utterance id, audio_ms,
// rtf, latency_ms, transcript). The report file is one row per line.
std::string benchmark_row_json(const std::string& utterance,
                               const StreamResult& result,
                               const Vocabulary* vocab);

}  // namespace attrans
