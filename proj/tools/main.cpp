// tools/main.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Command-line surface: train on the synthetic task, decode feature
// files, run the streaming benchmark, quantize checkpoints, run the
// built-in oracle suites, and compare error breakdowns.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "attrans/checkpoint.hpp"
#include "attrans/quantize.hpp"
#include "attrans/selftest.hpp"
#include "attrans/stream.hpp"
#include "attrans/train.hpp"

namespace {

using namespace attrans;

struct CommonOpts {
  std::string config_path;
  std::string checkpoint_path;
  std::string vocab_path;
  std::size_t beam = 8;
  int tau = -1;
  int chunk_width = -1;
  bool quantized = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
};

KeyValues load_config_or_empty(const std::string& path) {
  if (path.empty()) return {};
  return load_key_values(path);
}

ModelConfig model_config_from(const KeyValues& kv, const CommonOpts& opts) {
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
  if (opts.tau >= 0) cfg.tau = static_cast<std::size_t>(opts.tau);
  if (opts.chunk_width > 0) cfg.chunk_width = static_cast<std::size_t>(opts.chunk_width);
  cfg.validate();
  return cfg;
}

ModelParams load_model(const CommonOpts& opts) {
  require(!opts.checkpoint_path.empty(), "missing --checkpoint");
  bool was_quantized = false;
  ModelParams params = load_params(opts.checkpoint_path, &was_quantized);
  if (opts.quantized && !was_quantized) {
    throw std::runtime_error("--quantized given but the checkpoint holds float weights");
  }
  if (opts.tau < 0 && opts.chunk_width <= 0) return params;
  // tau only widens the attention window and chunk width only regroups
  // the joint grid, so both can be overridden at decode time.
  ModelConfig cfg = params.config;
  if (opts.tau >= 0) cfg.tau = static_cast<std::size_t>(opts.tau);
  if (opts.chunk_width > 0) cfg.chunk_width = static_cast<std::size_t>(opts.chunk_width);
  cfg.validate();
  Checkpoint ckpt = checkpoint_from_params(params);
  ckpt.config = cfg;
  return params_from_checkpoint(ckpt);
}

std::optional<Vocabulary> load_vocab(const CommonOpts& opts) {
  if (opts.vocab_path.empty()) return std::nullopt;
  return Vocabulary::load(opts.vocab_path);
}

std::string render_tokens(const std::optional<Vocabulary>& vocab,
                          std::span<const int> tokens) {
  if (vocab) return vocab->render(tokens);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(tokens[i]);
  }
  return out;
}

int cmd_train(const CommonOpts& opts, const std::string& out_path,
              const std::string& vocab_out, std::size_t steps_override,
              std::size_t utterances) {
  KeyValues kv = load_config_or_empty(opts.config_path);
  ModelConfig cfg = model_config_from(kv, opts);

  SyntheticTaskConfig task = SyntheticTaskConfig::from_map(kv);
  task.vocab = cfg.vocab;
  task.feature_dim = cfg.feature_dim;

  TrainConfig tc = TrainConfig::from_map(kv);
  if (!kv.contains("train.p_ss")) tc.p_ss = cfg.p_ss;
  if (opts.seed_set) tc.seed = opts.seed;
  if (opts.deterministic) tc.deterministic = true;
  if (steps_override > 0) tc.steps = steps_override;

  std::size_t count = utterances > 0 ? utterances : get_size(kv, "task.train_utterances", 300);
  std::cout << "generating " << count << " synthetic utterances\n";
  auto dataset = generate_synthetic_dataset(task, count);

  ModelParams params(cfg);
  params.init(tc.seed);
  std::cout << "training " << tc.steps << " steps (batch " << tc.batch_frames
            << " frames, lr " << tc.lr << ")\n";
  TrainResult result = train(params, dataset, tc, out_path, &std::cout);
  std::cout << "final loss " << result.log.back().loss << "\n";
  std::cout << "checkpoint written to " << out_path << "\n";
  if (!vocab_out.empty()) {
    Vocabulary::numbered(cfg.vocab).save(vocab_out);
    std::cout << "vocabulary written to " << vocab_out << "\n";
  }
  return 0;
}

int cmd_decode(const CommonOpts& opts, const std::string& features_path,
               const std::string& manifest_path, bool greedy) {
  ModelParams params = load_model(opts);
  auto vocab = load_vocab(opts);

  std::vector<std::string> files;
  if (!features_path.empty()) files.push_back(features_path);
  if (!manifest_path.empty()) {
    for (const std::string& f : read_manifest(manifest_path)) files.push_back(f);
  }
  require(!files.empty(), "decode: need --features or --manifest");

  for (const std::string& file : files) {
    Tensor feats = read_feature_file(file, params.config.feature_dim);
    std::vector<int> tokens;
    double log_prob = 0.0;
    if (greedy) {
      GreedyResult r = greedy_decode_scored(params, feats);
      tokens = r.tokens;
      log_prob = r.log_prob;
    } else {
      StreamResult r = decode_utterance(params, feats, opts.beam);
      tokens = r.tokens;
      log_prob = r.log_prob;
    }
    std::cout << file << "\t" << render_tokens(vocab, tokens) << "\t(log-prob "
              << log_prob << ")\n";
  }
  return 0;
}

int cmd_stream_bench(const CommonOpts& opts, const std::string& manifest_path,
                     std::size_t synthetic, const std::string& report_path,
                     const std::string& dump_dir) {
  ModelParams params = load_model(opts);
  auto vocab = load_vocab(opts);

  struct Item {
    std::string name;
    Tensor features;
  };
  std::vector<Item> items;
  if (!manifest_path.empty()) {
    for (const std::string& f : read_manifest(manifest_path)) {
      items.push_back({f, read_feature_file(f, params.config.feature_dim)});
    }
  } else {
    require(synthetic > 0, "stream-bench: need --manifest or --synthetic N");
    KeyValues kv = load_config_or_empty(opts.config_path);
    SyntheticTaskConfig task = SyntheticTaskConfig::from_map(kv);
    task.vocab = params.config.vocab;
    task.feature_dim = params.config.feature_dim;
    if (opts.seed_set) task.seed = opts.seed;
    auto data = generate_synthetic_dataset(task, synthetic, /*salt=*/1);
    for (std::size_t i = 0; i < data.size(); ++i) {
      items.push_back({"synthetic-" + std::to_string(i), std::move(data[i].features)});
    }
  }

  if (!dump_dir.empty()) {
    std::filesystem::create_directories(dump_dir);
    std::ofstream manifest(dump_dir + "/manifest.txt");
    for (Item& item : items) {
      std::string path = dump_dir + "/" + item.name + ".f32";
      write_feature_file(path, item.features);
      manifest << path << "\n";
    }
    std::cout << "features and manifest written to " << dump_dir << "\n";
  }

  std::ofstream report;
  if (!report_path.empty()) {
    report.open(report_path);
    if (!report) throw std::runtime_error("cannot write report: " + report_path);
  }

  double rtf_sum = 0.0, latency_sum = 0.0;
  for (Item& item : items) {
    StreamSession session(params, StreamOptions{.beam = opts.beam});
    session.push(item.features);
    StreamResult result = session.finalize();
    std::string row = benchmark_row_json(item.name, result, vocab ? &*vocab : nullptr);
    if (report.is_open()) report << row << "\n";
    if (!result.chunks.empty()) {
      RtfLatency rl = compute_rtf_latency(result.chunks);
      rtf_sum += rl.rtf;
      latency_sum += rl.latency_ms;
    }
  }
  std::cout << "utterances: " << items.size() << "\n";
  std::cout << "mean rtf: " << rtf_sum / double(items.size()) << "\n";
  std::cout << "mean latency_ms: " << latency_sum / double(items.size())
            << " (includes lookahead "
            << double(params.config.tau * params.config.mu()) * 10.0 << " ms)\n";
  if (report.is_open()) std::cout << "report written to " << report_path << "\n";
  return 0;
}

int cmd_quantize(const CommonOpts& opts, const std::string& out_path) {
  require(!opts.checkpoint_path.empty(), "missing --checkpoint");
  Checkpoint f = load_checkpoint_file(opts.checkpoint_path);
  Checkpoint q = quantize_weights(f);
  save_checkpoint(out_path, q);
  auto fsize = std::filesystem::file_size(opts.checkpoint_path);
  auto qsize = std::filesystem::file_size(out_path);
  std::cout << "quantized checkpoint written to " << out_path << "\n";
  std::cout << "size: " << fsize << " -> " << qsize << " bytes ("
            << double(fsize) / double(qsize) << "x smaller)\n";
  return 0;
}

int cmd_report_errors(const CommonOpts& opts, const std::string& checkpoint_b,
                      std::size_t utterances) {
  require(!opts.checkpoint_path.empty(), "missing --checkpoint-a");
  require(!checkpoint_b.empty(), "missing --checkpoint-b");
  ModelParams a = load_params(opts.checkpoint_path);
  ModelParams b = load_params(checkpoint_b);
  require(a.config.vocab == b.config.vocab && a.config.feature_dim == b.config.feature_dim,
          "report-errors: models must share vocabulary and feature dimension");

  KeyValues kv = load_config_or_empty(opts.config_path);
  SyntheticTaskConfig task = SyntheticTaskConfig::from_map(kv);
  task.vocab = a.config.vocab;
  task.feature_dim = a.config.feature_dim;
  if (opts.seed_set) task.seed = opts.seed;
  auto testset = generate_synthetic_dataset(task, utterances, /*salt=*/1);

  auto rows = error_breakdown_report(a, b, testset, opts.beam);
  std::cout << "model\tins\tdel\tsub\tter\n";
  const char* names[2] = {"A", "B"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::cout << names[i] << "\t" << rows[i].ins << "\t" << rows[i].del << "\t"
              << rows[i].sub << "\t" << rows[i].ter << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-based transducer: streaming training and decoding"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "key = value config file");
    cmd->add_option("--vocab", opts.vocab_path, "vocabulary file, one token per line");
    cmd->add_option("--beam", opts.beam, "beam size");
    cmd->add_option("--tau", opts.tau, "attention context length override");
    cmd->add_option("--chunk-width", opts.chunk_width, "joint chunk width override");
    cmd->add_flag("--quantized", opts.quantized, "require a quantized checkpoint");
    cmd->add_option("--seed", opts.seed, "seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_flag("--deterministic", opts.deterministic,
                  "force deterministic training");
  };

  std::string out_path, vocab_out, features_path, manifest_path, report_path;
  std::string checkpoint_b, dump_dir;
  std::size_t steps_override = 0, utterances = 0, synthetic = 0;
  bool greedy = false;

  CLI::App* train_cmd = app.add_subcommand("train", "train on the synthetic task");
  add_common(train_cmd);
  train_cmd->add_option("--out,--checkpoint", out_path, "output checkpoint path")
      ->required();
  train_cmd->add_option("--write-vocab", vocab_out, "also write a numbered vocabulary");
  train_cmd->add_option("--steps", steps_override, "training steps override");
  train_cmd->add_option("--utterances", utterances, "training set size override");

  CLI::App* decode_cmd = app.add_subcommand("decode", "decode feature files");
  add_common(decode_cmd);
  decode_cmd->add_option("--checkpoint", opts.checkpoint_path, "model checkpoint")
      ->required();
  decode_cmd->add_option("--features", features_path, "raw f32 feature file");
  decode_cmd->add_option("--manifest", manifest_path, "manifest of feature files");
  decode_cmd->add_flag("--greedy", greedy, "greedy decoding instead of beam search");

  CLI::App* bench_cmd =
      app.add_subcommand("stream-bench", "streaming RTF/latency benchmark");
  add_common(bench_cmd);
  bench_cmd->add_option("--checkpoint", opts.checkpoint_path, "model checkpoint")
      ->required();
  bench_cmd->add_option("--manifest", manifest_path, "manifest of feature files");
  bench_cmd->add_option("--synthetic", synthetic, "benchmark N synthetic utterances");
  bench_cmd->add_option("--report", report_path, "JSONL report output path");
  bench_cmd->add_option("--dump-dir", dump_dir, "write features + manifest here");

  CLI::App* quant_cmd = app.add_subcommand("quantize", "8-bit weight quantization");
  add_common(quant_cmd);
  quant_cmd->add_option("--checkpoint", opts.checkpoint_path, "float checkpoint")
      ->required();
  quant_cmd->add_option("--out", out_path, "quantized checkpoint path")->required();

  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run the oracle suites");
  add_common(selftest_cmd);

  CLI::App* report_cmd =
      app.add_subcommand("report-errors", "I/D/S comparison of two checkpoints");
  add_common(report_cmd);
  report_cmd->add_option("--checkpoint-a", opts.checkpoint_path, "first checkpoint")
      ->required();
  report_cmd->add_option("--checkpoint-b", checkpoint_b, "second checkpoint")
      ->required();
  report_cmd->add_option("--utterances", utterances, "test set size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      return cmd_train(opts, out_path, vocab_out, steps_override, utterances);
    }
    if (decode_cmd->parsed()) {
      return cmd_decode(opts, features_path, manifest_path, greedy);
    }
    if (bench_cmd->parsed()) {
      return cmd_stream_bench(opts, manifest_path, synthetic, report_path, dump_dir);
    }
    if (quant_cmd->parsed()) {
      return cmd_quantize(opts, out_path);
    }
    if (selftest_cmd->parsed()) {
      std::uint64_t seed = opts.seed_set ? opts.seed : 1;
      return run_selftest(std::cout, seed) ? 0 : 1;
    }
    if (report_cmd->parsed()) {
      std::size_t n = utterances > 0 ? utterances : 60;
      return cmd_report_errors(opts, checkpoint_b, n);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
