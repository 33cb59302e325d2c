// attrans/checkpoint.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>

#include "attrans/quantize.hpp"

namespace attrans {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'X', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffu));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open checkpoint: " + path);
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw std::runtime_error("checkpoint: truncated file");
    }
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint64_t u64() {
    std::uint64_t lo = u32();
    std::uint64_t hi = u32();
    return lo | (hi << 32);
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str(std::size_t n) {
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  std::ifstream in_;
};

}  // namespace

bool Checkpoint::any_quantized() const {
  for (const CheckpointEntry& e : entries) {
    if (e.quantized) return true;
  }
  return false;
}

Checkpoint checkpoint_from_params(ModelParams& params) {
  Checkpoint ckpt;
  ckpt.config = params.config;
  for (Parameter* p : params.all()) {
    CheckpointEntry e;
    e.name = p->name;
    e.dense = p->value;
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  put_bytes(out, kMagic, 4);
  put_u32(out, kVersion);
  std::string cfg = ckpt.config.dump();
  put_u64(out, cfg.size());
  put_bytes(out, cfg.data(), cfg.size());
  put_u32(out, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const CheckpointEntry& e : ckpt.entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    put_bytes(out, e.name.data(), e.name.size());
    out.put(e.quantized ? 1 : 0);
    const auto& shape = e.quantized ? e.q8.shape : e.dense.shape();
    out.put(static_cast<char>(shape.size()));
    for (std::size_t d : shape) put_u64(out, d);
    if (e.quantized) {
      put_f64(out, e.q8.scale);
      put_bytes(out, e.q8.data.data(), e.q8.data.size());
    } else {
      for (double x : e.dense.data()) put_f32(out, static_cast<float>(x));
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4)) {
    throw std::runtime_error("checkpoint: bad magic (not a checkpoint file)");
  }
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  Checkpoint ckpt;
  std::uint64_t cfg_len = r.u64();
  ckpt.config = ModelConfig::parse(r.str(cfg_len));
  std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointEntry e;
    std::uint32_t name_len = r.u32();
    e.name = r.str(name_len);
    unsigned char dtype;
    r.bytes(&dtype, 1);
    if (dtype > 1) throw std::runtime_error("checkpoint: unknown tensor dtype");
    e.quantized = dtype == 1;
    unsigned char rank;
    r.bytes(&rank, 1);
    std::vector<std::size_t> shape;
    for (unsigned char d = 0; d < rank; ++d) {
      shape.push_back(static_cast<std::size_t>(r.u64()));
    }
    std::size_t numel = shape_size(shape);
    if (e.quantized) {
      e.q8.shape = shape;
      e.q8.scale = r.f64();
      if (!(e.q8.scale > 0.0)) {
        throw std::runtime_error("checkpoint: non-positive quantization scale");
      }
      e.q8.data.resize(numel);
      r.bytes(e.q8.data.data(), numel);
    } else {
      Tensor t(shape);
      for (std::size_t j = 0; j < numel; ++j) t[j] = static_cast<double>(r.f32());
      e.dense = std::move(t);
    }
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams params(ckpt.config);
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const CheckpointEntry& e : ckpt.entries) {
    bool inserted = by_name.emplace(e.name, &e).second;
    if (!inserted) {
      throw std::runtime_error("checkpoint: duplicate tensor '" + e.name + "'");
    }
  }
  std::vector<Parameter*> all = params.all();
  if (all.size() != by_name.size()) {
    throw std::runtime_error("checkpoint: topology mismatch (tensor count)");
  }
  for (Parameter* p : all) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint: topology mismatch, missing tensor '" +
                               p->name + "'");
    }
    const CheckpointEntry& e = *it->second;
    Tensor value = e.quantized ? dequantize(e.q8) : e.dense;
    if (value.shape() != p->value.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for tensor '" + p->name +
                               "'");
    }
    value.requires_grad = true;
    p->value = std::move(value);
  }
  return params;
}

void save_params(const std::string& path, ModelParams& params) {
  save_checkpoint(path, checkpoint_from_params(params));
}

ModelParams load_params(const std::string& path, bool* was_quantized) {
  Checkpoint ckpt = load_checkpoint_file(path);
  if (was_quantized) *was_quantized = ckpt.any_quantized();
  return params_from_checkpoint(ckpt);
}

}  // namespace attrans
