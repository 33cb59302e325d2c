// tests/acceptance.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// End-to-end acceptance suite. Runs every shipping criterion at its
// pinned tolerance and prints one [PASS]/[FAIL] line per criterion;
// exits nonzero if any fail. The trained-model criteria share one
// training run (about three minutes of single-core time).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "attrans/checkpoint.hpp"
#include "attrans/logmath.hpp"
#include "attrans/quantize.hpp"
#include "attrans/stream.hpp"
#include "attrans/train.hpp"
#include "model_oracle.hpp"
#include "testutil.hpp"

using namespace attrans;

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

struct Criterion {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Criterion> g_results;

template <typename Fn>
void run_criterion(int id, const std::string& name, Fn&& fn) {
  Criterion c;
  c.id = id;
  c.name = name;
  auto t0 = std::chrono::steady_clock::now();
  try {
    c.pass = fn(c.detail);
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = std::string("exception: ") + e.what();
  }
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  criterion %d finished in %.1fs (%s)\n", id, sec,
              c.pass ? "pass" : "FAIL");
  std::fflush(stdout);
  g_results.push_back(std::move(c));
}

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

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
  Tensor out({end - begin, t.cols()});
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) out.at(r - begin, c) = t.at(r, c);
  }
  return out;
}

// Shared fixtures for the trained-model criteria.
SyntheticTaskConfig desk_task() {
  SyntheticTaskConfig task;
  task.vocab = 16;
  task.feature_dim = 16;
  task.min_frames = 96;
  task.max_frames = 160;
  task.min_tokens = 2;
  task.max_tokens = 4;
  task.noise = 0.05;
  task.seed = 7;
  return task;
}

ModelConfig desk_config() {
  ModelConfig cfg;
  cfg.feature_dim = 16;
  cfg.n_p = 3;
  cfg.n_lstm = 2;
  cfg.d = 64;
  cfg.d_dec = 32;
  cfg.n_att = 4;
  cfg.tau = 2;
  cfg.chunk_width = 4;
  cfg.vocab = 16;
  return cfg;
}

}  // namespace

int main() {
  std::printf("== transducer acceptance suite ==\n");

  // 1. Loss oracle equivalence on 1000 seeded grids.
  run_criterion(1, "loss oracle equivalence (1000 grids, 1e-9)", [](std::string& d) {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> cs(1, 4), us(0, 3), vs(1, 3);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      AlignmentGrid g = random_grid(rng, cs(rng), us(rng), vs(rng));
      LossResult fb = forward_backward(g);
      double ref = enumerate_paths(g);
      worst = std::max(worst, std::abs(fb.nll - ref));
      worst = std::max(worst, std::abs(fb.nll - fb.nll_backward));
    }
    d = "max |forward_backward - enumerate_paths| = " + sci(worst);
    return worst <= 1e-9;
  });

  // 2. End-to-end gradient correctness on the tiny model.
  run_criterion(2, "end-to-end gradients vs finite differences (1e-5)",
                [](std::string& d) {
    ModelConfig cfg;
    cfg.feature_dim = 6;
    cfg.n_p = 2;
    cfg.n_lstm = 1;
    cfg.d = 8;
    cfg.d_dec = 8;
    cfg.n_att = 2;
    cfg.tau = 1;
    cfg.chunk_width = 2;
    cfg.vocab = 4;
    ModelParams params(cfg);
    params.init(1);
    std::mt19937_64 rng(2);
    Utterance utt;
    utt.features = Tensor({16, cfg.feature_dim});
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& x : utt.features.data()) x = dist(rng);
    utt.tokens = {2, 4};

    Tape tape;
    params.zero_grad();
    Value loss = utterance_loss(tape, params, utt, 0.0, nullptr);
    double lib_nll = tape.value(loss)[0];
    tape.backward(loss);

    long double oracle_nll = testing::oracle_utterance_nll(params, utt);
    if (std::abs(lib_nll - (double)oracle_nll) > 1e-12) {
      d = "forward mismatch vs straight-line oracle";
      return false;
    }

    const long double h = 1e-4L;
    double worst = 0.0;
    std::size_t checked = 0;
    for (Parameter* p : params.all()) {
      for (std::size_t j = 0; j < p->value.size(); ++j) {
        double saved = p->value[j];
        auto at = [&](long double x) {
          p->value[j] = (double)x;
          return testing::oracle_utterance_nll(params, utt);
        };
        long double fd = (8.0L * (at(saved + h) - at(saved - h)) -
                          (at(saved + 2 * h) - at(saved - 2 * h))) /
                         (12.0L * h);
        p->value[j] = saved;
        double ga = p->grad[j];
        double rel = std::abs(ga - (double)fd) /
                     std::max(1e-8, std::abs(ga) + std::abs((double)fd));
        worst = std::max(worst, rel);
        ++checked;
      }
    }
    d = std::to_string(checked) + " parameter entries, max rel err = " + sci(worst);
    return worst <= 1e-5;
  });

  // 3 + 4. Structural blank reduction and grid-size accounting, on a real
  // encoder run at T = 800.
  std::size_t measured_C = 0;
  run_criterion(3, "blank reduction: T=800, mu=8, w=4 -> 25 blanks (32x)",
                [&](std::string& d) {
    if (blank_count_per_alignment(800, 8, 4) != 25) {
      d = "arithmetic check failed";
      return false;
    }
    ModelConfig cfg;
    cfg.feature_dim = 4;
    cfg.n_p = 3;
    cfg.n_lstm = 1;
    cfg.d = 8;
    cfg.d_dec = 8;
    cfg.n_att = 2;
    cfg.tau = 2;
    cfg.chunk_width = 4;
    cfg.vocab = 4;
    ModelParams params(cfg);
    params.init(5);
    std::mt19937_64 rng(6);
    Tensor features({800, cfg.feature_dim});
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& x : features.data()) x = dist(rng);
    Tape tape(false);
    auto enc = encode(tape, params, features);
    if (enc.size() != 100) {
      d = "encoder produced " + std::to_string(enc.size()) + " frames, wanted 100";
      return false;
    }
    auto chunks = chunk_encoder_outputs(enc, cfg.chunk_width);
    measured_C = chunks.chunks.size();
    d = "alignment blanks = " + std::to_string(measured_C) +
        " vs 800 frame-level (32x reduction)";
    return measured_C == 25;
  });

  run_criterion(4, "grid elements exactly mu*w-fold smaller", [&](std::string& d) {
    const std::size_t T = 800, U = 2, V = 4, mu = 8, w = 4;
    if (measured_C == 0) {
      d = "criterion 3 fixture missing";
      return false;
    }
    std::size_t chunk_grid = measured_C * (U + 1) * (V + 1);
    std::size_t frame_grid = T * (U + 1) * (V + 1);
    d = std::to_string(chunk_grid) + " vs " + std::to_string(frame_grid) +
        " elements (ratio " + std::to_string(frame_grid / chunk_grid) + ")";
    return frame_grid == chunk_grid * mu * w && frame_grid / chunk_grid == 32;
  });

  // 5. Attention normalization, including truncated windows and the short
  // final chunk.
  run_criterion(5, "attention weights sum to 1 within 1e-9", [](std::string& d) {
    ModelConfig cfg = desk_config();
    ModelParams params(cfg);
    params.init(9);
    std::mt19937_64 rng(10);
    double worst = 0.0;
    std::size_t sets = 0;
    for (std::size_t T : {96u, 130u, 150u}) {  // T_enc = 12, 16, 18; 18 % 4 != 0
      Tensor features({T, cfg.feature_dim});
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (double& x : features.data()) x = dist(rng);
      AttentionProbe enc_probe;
      Tape tape(false);
      auto enc = encode(tape, params, features, &enc_probe);
      AttentionProbe joint_probe;
      auto chunks = chunk_encoder_outputs(enc, cfg.chunk_width);
      auto [s0, st] = predict_start(tape, params);
      for (const auto& chunk : chunks.chunks) {
        ChunkContext ctx = make_chunk_context(tape, params, chunk);
        joint_logits(tape, params, ctx, s0, &joint_probe);
      }
      for (const AttentionProbe* probe : {&enc_probe, &joint_probe}) {
        for (const auto& wts : probe->weights) {
          double sum = 0.0;
          for (double x : wts) sum += x;
          worst = std::max(worst, std::abs(sum - 1.0));
          ++sets;
        }
      }
    }
    d = std::to_string(sets) + " weight sets, max |sum - 1| = " + sci(worst);
    return sets > 0 && worst <= 1e-9;
  });

  // 10. Latency accounting and report schema (independent of training).
  run_criterion(10, "lookahead = tau*mu*frame_step exactly; report schema",
                [](std::string& d) {
    ModelConfig cfg;
    cfg.feature_dim = 8;
    cfg.n_p = 3;  // mu = 8
    cfg.n_lstm = 1;
    cfg.d = 16;
    cfg.d_dec = 8;
    cfg.n_att = 2;
    cfg.tau = 4;
    cfg.chunk_width = 4;
    cfg.vocab = 4;
    ModelParams params(cfg);
    params.init(11);
    std::mt19937_64 rng(12);
    Tensor features({137, cfg.feature_dim});
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& x : features.data()) x = dist(rng);

    StreamResult r = decode_utterance(params, features, 4);
    for (const ChunkMetrics& m : r.chunks) {
      if (m.lookahead_ms != 320.0) {  // 4 * 8 * 10 ms, exact
        d = "lookahead was " + std::to_string(m.lookahead_ms);
        return false;
      }
    }
    RtfLatency rl = compute_rtf_latency(r.chunks);
    double proc_mean = 0.0;
    for (const ChunkMetrics& m : r.chunks) proc_mean += m.processing_ms;
    proc_mean /= double(r.chunks.size());
    if (std::abs(rl.latency_ms - (proc_mean + 320.0)) > 1e-9) {
      d = "latency is not mean processing + lookahead";
      return false;
    }

    nlohmann::json row = nlohmann::json::parse(benchmark_row_json("utt0", r, nullptr));
    for (const char* field : {"utterance", "audio_ms", "rtf", "latency_ms",
                              "lookahead_ms", "transcript"}) {
      if (!row.contains(field)) {
        d = std::string("report row missing field ") + field;
        return false;
      }
    }
    if (row["audio_ms"].get<double>() != 1370.0) {
      d = "audio_ms mismatch";
      return false;
    }
    d = "lookahead 320 ms exact over " + std::to_string(r.chunks.size()) +
        " chunks; JSONL schema ok (rtf " + std::to_string(rl.rtf) + ", informational)";
    return true;
  });

  // 11. Training determinism.
  run_criterion(11, "bit-identical checkpoints from identical seeds",
                [](std::string& d) {
    ModelConfig cfg;
    cfg.feature_dim = 8;
    cfg.n_p = 2;
    cfg.n_lstm = 1;
    cfg.d = 16;
    cfg.d_dec = 8;
    cfg.n_att = 2;
    cfg.tau = 1;
    cfg.chunk_width = 3;
    cfg.vocab = 8;
    SyntheticTaskConfig task;
    task.vocab = 8;
    task.feature_dim = 8;
    task.min_frames = 80;
    task.max_frames = 120;
    task.min_tokens = 1;
    task.max_tokens = 3;
    task.noise = 0.05;
    task.seed = 13;
    auto data = generate_synthetic_dataset(task, 12);
    TrainConfig tc;
    tc.steps = 6;
    tc.batch_frames = 400;
    tc.seed = 21;
    tc.deterministic = true;

    std::string paths[2] = {"/tmp/attrans_acc_det_a.ckpt", "/tmp/attrans_acc_det_b.ckpt"};
    for (const std::string& path : paths) {
      ModelParams params(cfg);
      params.init(31);
      train(params, data, tc, path);
    }
    std::ifstream a(paths[0], std::ios::binary), b(paths[1], std::ios::binary);
    std::ostringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    bool same = sa.str() == sb.str() && !sa.str().empty();
    std::remove(paths[0].c_str());
    std::remove(paths[1].c_str());
    d = same ? "checkpoints byte-identical" : "checkpoints differ";
    return same;
  });

  // 7. Learnability smoke test (the long pole; later criteria reuse the
  // trained model).
  ModelConfig cfg7 = desk_config();
  ModelParams trained(cfg7);
  SyntheticTaskConfig task7 = desk_task();
  auto testset = generate_synthetic_dataset(task7, 60, /*salt=*/1);
  bool have_trained = false;
  double greedy_acc = 0.0;

  run_criterion(7, "learnability: greedy accuracy >= 0.95, beam >= greedy",
                [&](std::string& d) {
    auto dataset = generate_synthetic_dataset(task7, 300);
    TrainConfig tc;
    tc.steps = 800;
    tc.batch_frames = 1536;
    tc.lr = 3e-3;
    tc.p_ss = 0.1;
    tc.seed = 3;
    trained.init(1);
    auto t0 = std::chrono::steady_clock::now();
    TrainResult log = train(trained, dataset, tc);
    double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
        60.0;
    have_trained = true;
    EvalResult greedy = evaluate_greedy(trained, testset);
    EvalResult beam8 = evaluate_beam(trained, testset, 8);
    greedy_acc = greedy.token_accuracy;
    std::ostringstream ss;
    ss << "train " << minutes << " min (budget 30), final loss "
       << log.log.back().loss << "; greedy acc " << greedy.token_accuracy
       << ", beam-8 acc " << beam8.token_accuracy;
    d = ss.str();
    return minutes <= 30.0 && greedy.token_accuracy >= 0.95 &&
           beam8.token_accuracy >= greedy.token_accuracy;
  });

  auto stream_set = generate_synthetic_dataset(task7, 100, /*salt=*/2);

  // 6. Stream/offline equivalence over arbitrary push partitions.
  run_criterion(6, "stream/offline transcripts identical (100 utterances)",
                [&](std::string& d) {
    if (!have_trained) {
      d = "no trained model";
      return false;
    }
    std::mt19937_64 rng(99);
    std::size_t equal = 0;
    for (const Utterance& utt : stream_set) {
      StreamResult whole = decode_utterance(trained, utt.features, 8);
      StreamSession session(trained, StreamOptions{.beam = 8});
      std::size_t pos = 0;
      std::uniform_int_distribution<std::size_t> step(1, 23);
      while (pos < utt.features.rows()) {
        std::size_t next = std::min<std::size_t>(utt.features.rows(), pos + step(rng));
        session.push(slice_rows(utt.features, pos, next));
        pos = next;
      }
      if (session.finalize().tokens == whole.tokens) ++equal;
    }
    d = std::to_string(equal) + "/100 partitions token-identical";
    return equal == 100;
  });

  // 8. Beam monotonicity and exact greedy equivalence at B = 1.
  run_criterion(8, "best log-prob non-decreasing in B; B=1 equals greedy",
                [&](std::string& d) {
    if (!have_trained) {
      d = "no trained model";
      return false;
    }
    std::size_t monotone = 0, greedy_eq = 0;
    for (const Utterance& utt : stream_set) {
      GreedyResult greedy = greedy_decode_scored(trained, utt.features);
      double prev = -std::numeric_limits<double>::infinity();
      bool mono = true;
      for (std::size_t B : {1u, 2u, 4u, 8u}) {
        StreamResult r = decode_utterance(trained, utt.features, B);
        if (B == 1 && r.tokens == greedy.tokens && r.log_prob == greedy.log_prob) {
          ++greedy_eq;
        }
        if (r.log_prob < prev) mono = false;
        prev = r.log_prob;
      }
      if (mono) ++monotone;
    }
    d = "monotone " + std::to_string(monotone) + "/100, B=1==greedy " +
        std::to_string(greedy_eq) + "/100";
    return monotone == 100 && greedy_eq == 100;
  });

  // 9. Quantization: round-trip bound, accuracy, checkpoint size.
  run_criterion(9, "int8 quantization: bound, accuracy, >=3.5x size",
                [&](std::string& d) {
    if (!have_trained) {
      d = "no trained model";
      return false;
    }
    Checkpoint f = checkpoint_from_params(trained);
    Checkpoint q = quantize_weights(f);
    for (std::size_t i = 0; i < q.entries.size(); ++i) {
      if (!q.entries[i].quantized) continue;
      Tensor back = dequantize(q.entries[i].q8);
      double scale = q.entries[i].q8.scale;
      for (std::size_t j = 0; j < back.size(); ++j) {
        if (std::abs(f.entries[i].dense[j] - back[j]) > scale / 2 + 1e-12) {
          d = "round-trip bound violated in " + q.entries[i].name;
          return false;
        }
      }
    }

    ModelParams qmodel = params_from_checkpoint(q);
    EvalResult gq = evaluate_greedy(qmodel, testset);
    double degradation = greedy_acc - gq.token_accuracy;

    std::string fp = "/tmp/attrans_acc_f.ckpt", qp = "/tmp/attrans_acc_q.ckpt";
    save_checkpoint(fp, f);
    save_checkpoint(qp, q);
    double ratio = double(std::filesystem::file_size(fp)) /
                   double(std::filesystem::file_size(qp));
    std::remove(fp.c_str());
    std::remove(qp.c_str());

    std::ostringstream ss;
    ss << "bound ok; accuracy " << greedy_acc << " -> " << gq.token_accuracy
       << " (degradation " << degradation << "); size ratio " << ratio << "x";
    d = ss.str();
    return degradation <= 0.005 && ratio >= 3.5;
  });

  std::sort(g_results.begin(), g_results.end(),
            [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  std::printf("\n== results ==\n");
  bool all_pass = true;
  for (const Criterion& c : g_results) {
    std::printf("[%s] criterion %d: %s — %s\n", c.pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), c.detail.c_str());
    all_pass = all_pass && c.pass;
  }
  std::printf("%s\n", all_pass ? "all criteria passed" : "SOME CRITERIA FAILED");
  return all_pass ? 0 : 1;
}
