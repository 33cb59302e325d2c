// attrans/tape.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/tape.hpp"

#include <cmath>

#include "attrans/logmath.hpp"

namespace attrans {

namespace {

void check_vector(const Tensor& t, const char* op) {
  require(t.rank() == 1, (std::string(op) + ": expected a rank-1 tensor").c_str());
}

}  // namespace

Value Tape::push(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, {}});
  return Value{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::uint32_t Tape::idx_of(Value v, const char* op) const {
  require(v.tape == this, (std::string(op) + ": value from another tape").c_str());
  return v.index;
}

Tensor& Tape::grad_buf(std::uint32_t idx) {
  Node& n = nodes_[idx];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Value Tape::constant(Tensor v) {
  return push(std::move(v));
}

Value Tape::constant_scalar(double v) {
  return push(Tensor::scalar(v));
}

Value Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Value{this, it->second};
  Value v = push(p.value);
  param_nodes_.emplace(&p, v.index);
  if (grad_enabled_ && p.value.requires_grad) {
    std::uint32_t idx = v.index;
    Parameter* pp = &p;
    nodes_[idx].back = [this, idx, pp] {
      const Tensor& g = nodes_[idx].grad;
      require(pp->grad.same_shape(g), "param backward: gradient shape mismatch");
      auto dst = pp->grad.data();
      auto src = g.data();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    };
  }
  return v;
}

const Tensor& Tape::value(Value v) const {
  return nodes_[idx_of(v, "value")].value;
}

Tensor Tape::grad(Value v) const {
  const Node& n = nodes_[idx_of(v, "grad")];
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

Value Tape::add(Value a, Value b) {
  std::uint32_t ia = idx_of(a, "add"), ib = idx_of(b, "add");
  const Tensor& ta = val(ia);
  const Tensor& tb = val(ib);
  require(ta.same_shape(tb), "add: shape mismatch");
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] + tb[i];
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ia, ib] {
      const Tensor& g = nodes_[io].grad;
      Tensor& ga = grad_buf(ia);
      Tensor& gb = grad_buf(ib);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
    };
  }
  return v;
}

Value Tape::mul(Value a, Value b) {
  std::uint32_t ia = idx_of(a, "mul"), ib = idx_of(b, "mul");
  const Tensor& ta = val(ia);
  const Tensor& tb = val(ib);
  require(ta.same_shape(tb), "mul: shape mismatch");
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * tb[i];
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ia, ib] {
      const Tensor& g = nodes_[io].grad;
      const Tensor& ta2 = val(ia);
      const Tensor& tb2 = val(ib);
      Tensor& ga = grad_buf(ia);
      Tensor& gb = grad_buf(ib);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * tb2[i];
        gb[i] += g[i] * ta2[i];
      }
    };
  }
  return v;
}

Value Tape::scale(Value a, double k) {
  std::uint32_t ia = idx_of(a, "scale");
  const Tensor& ta = val(ia);
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * k;
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ia, k] {
      const Tensor& g = nodes_[io].grad;
      Tensor& ga = grad_buf(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * k;
    };
  }
  return v;
}

Value Tape::matvec(Value w, Value x) {
  std::uint32_t iw = idx_of(w, "matvec"), ix = idx_of(x, "matvec");
  const Tensor& tw = val(iw);
  const Tensor& tx = val(ix);
  require(tw.rank() == 2, "matvec: weight must be rank-2");
  check_vector(tx, "matvec");
  std::size_t m = tw.rows(), n = tw.cols();
  require(tx.size() == n, "matvec: dimension mismatch");
  Tensor out({m});
  const double* wd = tw.data().data();
  const double* xd = tx.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = wd + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * xd[j];
    out[i] = acc;
  }
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, iw, ix, m, n] {
      const Tensor& g = nodes_[io].grad;
      const Tensor& tw2 = val(iw);
      const Tensor& tx2 = val(ix);
      Tensor& gw = grad_buf(iw);
      Tensor& gx = grad_buf(ix);
      const double* xd = tx2.data().data();
      const double* wd = tw2.data().data();
      double* gwd = gw.data().data();
      double* gxd = gx.data().data();
      for (std::size_t i = 0; i < m; ++i) {
        double gi = g[i];
        if (gi == 0.0) continue;
        double* gw_row = gwd + i * n;
        const double* w_row = wd + i * n;
        for (std::size_t j = 0; j < n; ++j) {
          gw_row[j] += gi * xd[j];
          gxd[j] += gi * w_row[j];
        }
      }
    };
  }
  return v;
}

Value Tape::row(Value table, std::size_t r) {
  std::uint32_t it = idx_of(table, "row");
  const Tensor& tt = val(it);
  require(tt.rank() == 2, "row: table must be rank-2");
  require(r < tt.rows(), "row: index out of range");
  std::size_t n = tt.cols();
  Tensor out({n});
  for (std::size_t j = 0; j < n; ++j) out[j] = tt.at(r, j);
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, it, r, n] {
      const Tensor& g = nodes_[io].grad;
      Tensor& gt = grad_buf(it);
      for (std::size_t j = 0; j < n; ++j) gt[r * n + j] += g[j];
    };
  }
  return v;
}

Value Tape::concat(std::span<const Value> parts) {
  require(!parts.empty(), "concat: empty input");
  std::vector<std::uint32_t> idx;
  idx.reserve(parts.size());
  std::size_t total = 0;
  for (Value p : parts) {
    std::uint32_t i = idx_of(p, "concat");
    check_vector(val(i), "concat");
    total += val(i).size();
    idx.push_back(i);
  }
  Tensor out({total});
  std::size_t off = 0;
  for (std::uint32_t i : idx) {
    const Tensor& t = val(i);
    for (std::size_t j = 0; j < t.size(); ++j) out[off + j] = t[j];
    off += t.size();
  }
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, idx] {
      const Tensor& g = nodes_[io].grad;
      std::size_t off2 = 0;
      for (std::uint32_t i : idx) {
        Tensor& gi = grad_buf(i);
        for (std::size_t j = 0; j < gi.size(); ++j) gi[j] += g[off2 + j];
        off2 += gi.size();
      }
    };
  }
  return v;
}

Value Tape::sigmoid(Value x) {
  std::uint32_t ix = idx_of(x, "sigmoid");
  const Tensor& tx = val(ix);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < tx.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-tx[i]));
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ix] {
      const Tensor& g = nodes_[io].grad;
      const Tensor& y = val(io);
      Tensor& gx = grad_buf(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
    };
  }
  return v;
}

Value Tape::tanh(Value x) {
  std::uint32_t ix = idx_of(x, "tanh");
  const Tensor& tx = val(ix);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < tx.size(); ++i) out[i] = std::tanh(tx[i]);
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ix] {
      const Tensor& g = nodes_[io].grad;
      const Tensor& y = val(io);
      Tensor& gx = grad_buf(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
    };
  }
  return v;
}

Value Tape::softmax(Value x) {
  std::uint32_t ix = idx_of(x, "softmax");
  const Tensor& tx = val(ix);
  check_vector(tx, "softmax");
  std::vector<double> p = attrans::softmax(tx.data());
  std::size_t n = p.size();
  Value v = push(Tensor({n}, std::move(p)));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ix] {
      const Tensor& g = nodes_[io].grad;
      const Tensor& y = val(io);
      Tensor& gx = grad_buf(ix);
      double gy = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - gy);
    };
  }
  return v;
}

Value Tape::dot(Value a, Value b) {
  std::uint32_t ia = idx_of(a, "dot"), ib = idx_of(b, "dot");
  const Tensor& ta = val(ia);
  const Tensor& tb = val(ib);
  check_vector(ta, "dot");
  require(ta.same_shape(tb), "dot: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) acc += ta[i] * tb[i];
  Value v = push(Tensor::scalar(acc));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ia, ib] {
      double g = nodes_[io].grad[0];
      const Tensor& ta2 = val(ia);
      const Tensor& tb2 = val(ib);
      Tensor& ga = grad_buf(ia);
      Tensor& gb = grad_buf(ib);
      for (std::size_t i = 0; i < ta2.size(); ++i) {
        ga[i] += g * tb2[i];
        gb[i] += g * ta2[i];
      }
    };
  }
  return v;
}

Value Tape::weighted_sum(Value w, std::span<const Value> xs) {
  std::uint32_t iw = idx_of(w, "weighted_sum");
  const Tensor& tw = val(iw);
  check_vector(tw, "weighted_sum");
  require(tw.size() == xs.size(), "weighted_sum: weight/item count mismatch");
  require(!xs.empty(), "weighted_sum: empty input");
  std::vector<std::uint32_t> idx;
  idx.reserve(xs.size());
  for (Value x : xs) {
    std::uint32_t i = idx_of(x, "weighted_sum");
    check_vector(val(i), "weighted_sum");
    require(val(i).same_shape(val(idx.empty() ? i : idx[0])), "weighted_sum: item shape mismatch");
    idx.push_back(i);
  }
  std::size_t d = val(idx[0]).size();
  Tensor out({d});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Tensor& xk = val(idx[k]);
    double wk = tw[k];
    for (std::size_t j = 0; j < d; ++j) out[j] += wk * xk[j];
  }
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, iw, idx] {
      const Tensor& g = nodes_[io].grad;
      const Tensor& tw2 = val(iw);
      Tensor& gw = grad_buf(iw);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Tensor& xk = val(idx[k]);
        Tensor& gx = grad_buf(idx[k]);
        double wk = tw2[k];
        double acc = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
          acc += g[j] * xk[j];
          gx[j] += wk * g[j];
        }
        gw[k] += acc;
      }
    };
  }
  return v;
}

Value Tape::layer_norm(Value x, Value gain, Value bias, double epsilon) {
  std::uint32_t ix = idx_of(x, "layer_norm");
  std::uint32_t ig = idx_of(gain, "layer_norm");
  std::uint32_t ib = idx_of(bias, "layer_norm");
  const Tensor& tx = val(ix);
  check_vector(tx, "layer_norm");
  std::size_t d = tx.size();
  require(d >= 2, "layer_norm: dimension must be at least 2");
  require(val(ig).size() == d && val(ib).size() == d, "layer_norm: gain/bias size mismatch");
  require(epsilon > 0.0, "layer_norm: epsilon must be positive");

  double mean = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean += tx[i];
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double c = tx[i] - mean;
    var += c * c;
  }
  var /= static_cast<double>(d);
  double inv_sigma = 1.0 / std::sqrt(var + epsilon);

  std::vector<double> xhat(d);
  Tensor out({d});
  const Tensor& tg = val(ig);
  const Tensor& tb = val(ib);
  for (std::size_t i = 0; i < d; ++i) {
    xhat[i] = (tx[i] - mean) * inv_sigma;
    out[i] = tg[i] * xhat[i] + tb[i];
  }
  Value v = push(std::move(out));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ix, ig, ib, xhat, inv_sigma, d] {
      const Tensor& g = nodes_[io].grad;
      const Tensor& tg2 = val(ig);
      Tensor& gx = grad_buf(ix);
      Tensor& gg = grad_buf(ig);
      Tensor& gb = grad_buf(ib);
      std::vector<double> dxhat(d);
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        gb[i] += g[i];
        gg[i] += g[i] * xhat[i];
        dxhat[i] = g[i] * tg2[i];
        m1 += dxhat[i];
        m2 += dxhat[i] * xhat[i];
      }
      m1 /= static_cast<double>(d);
      m2 /= static_cast<double>(d);
      for (std::size_t i = 0; i < d; ++i) {
        gx[i] += inv_sigma * (dxhat[i] - m1 - xhat[i] * m2);
      }
    };
  }
  return v;
}

Value Tape::sum(Value x) {
  std::uint32_t ix = idx_of(x, "sum");
  const Tensor& tx = val(ix);
  double acc = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) acc += tx[i];
  Value v = push(Tensor::scalar(acc));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, ix] {
      double g = nodes_[io].grad[0];
      Tensor& gx = grad_buf(ix);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    };
  }
  return v;
}

Value Tape::custom(Tensor value, std::vector<Value> parents,
                   std::function<void(const Tensor& upstream,
                                      std::span<Tensor* const> parent_grads)>
                       backward) {
  std::vector<std::uint32_t> idx;
  idx.reserve(parents.size());
  for (Value p : parents) idx.push_back(idx_of(p, "custom"));
  Value v = push(std::move(value));
  if (grad_enabled_) {
    std::uint32_t io = v.index;
    nodes_[io].back = [this, io, idx, backward = std::move(backward)] {
      const Tensor& g = nodes_[io].grad;
      std::vector<Tensor*> grads;
      grads.reserve(idx.size());
      for (std::uint32_t i : idx) grads.push_back(&grad_buf(i));
      backward(g, grads);
    };
  }
  return v;
}

void Tape::backward(Value root) {
  require(grad_enabled_, "backward: tape was created without gradients");
  require(!backward_done_, "backward: tape already swept");
  std::uint32_t ir = idx_of(root, "backward");
  const Tensor& rv = val(ir);
  require(rv.size() == 1, "backward: root must be a scalar");
  require(rv.all_finite(), "backward: root is not finite");
  backward_done_ = true;
  grad_buf(ir)[0] = 1.0;
  for (std::uint32_t i = ir + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.back && !n.grad.empty()) n.back();
  }
}

}  // namespace attrans
