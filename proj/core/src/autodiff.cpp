#include "genemeta/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "genemeta/error.hpp"

namespace genemeta::ad {
namespace {

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[k,m]^T * B[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[p * m + i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// Out[n,m] = In[m,n]^T
void transpose_into(const double* in, double* out, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
}

Tape& same_tape(std::initializer_list<Var> vars) {
  Tape* tape = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw ContractError("operation on a detached Var");
    if (tape == nullptr) tape = v.tape();
    if (v.tape() != tape) throw ContractError("operands live on different tapes");
  }
  return *tape;
}

DimensionError mismatch(const char* op, const Shape& a, const Shape& b) {
  return DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                        shape_string(b));
}

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Splits a shape around `axis` into (outer, axis length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " invalid for shape " +
                         shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// View of a conv/pool input as [batch, channels, length].
struct Seq3 {
  std::size_t batch, channels, length;
  bool batched;
};

Seq3 as_seq3(const Shape& s, const char* op) {
  if (s.size() == 2) return {1, s[0], s[1], false};
  if (s.size() == 3) return {s[0], s[1], s[2], true};
  throw DimensionError(std::string(op) + ": expected [c, L] or [batch, c, L], got " +
                       shape_string(s));
}

}  // namespace

// ---------------------------------------------------------------------------
// Var / Gradients / GradSink / Tape

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("value() on a detached Var");
  return tape_->value(*this);
}

Tensor Gradients::operator[](Var v) const {
  if (v.id() < grads_.size() && !grads_[v.id()].empty()) return grads_[v.id()];
  return Tensor(v.shape());
}

bool Gradients::reached(Var v) const {
  return v.id() < grads_.size() && !grads_[v.id()].empty();
}

Tensor* GradSink::slot(Var parent) {
  if (!tape_.requires_grad(parent)) return nullptr;
  Tensor& g = grads_[parent.id()];
  if (g.empty()) g = Tensor(parent.shape());
  return &g;
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), true, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), false, nullptr});
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id()).value; }

bool Tape::requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || requires_grad(p);
  nodes_.push_back(Node{std::move(value), needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::note_kink_distance(double distance) noexcept {
  kink_margin_ = std::min(kink_margin_, distance);
}

Gradients Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("backward: loss does not belong to this tape");
  if (!value(loss).is_scalar()) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_string(value(loss).shape()));
  }
  Gradients out;
  out.grads_.resize(nodes_.size());
  if (!requires_grad(loss)) return out;
  out.grads_[loss.id()] = Tensor(value(loss).shape(), 1.0);
  GradSink sink(*this, out.grads_);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || out.grads_[i].empty()) continue;
    node.backward(out.grads_[i], sink);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(Var a, Var b) {
  Tape& tape = same_tape({a, b});
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool a3 = sa.size() == 3;
  const bool b3 = sb.size() == 3;
  if (sa.size() < 2 || sa.size() > 3 || sb.size() < 2 || sb.size() > 3 || (b3 && !a3) ||
      (a3 && b3 && sa[0] != sb[0]) || sa.back() != sb[sb.size() - 2]) {
    throw mismatch("matmul", sa, sb);
  }
  const std::size_t batch = a3 ? sa[0] : 1;
  const std::size_t m = sa[sa.size() - 2], k = sa.back(), n = sb.back();
  Shape out_shape = a3 ? Shape{batch, m, n} : Shape{m, n};
  Tensor out(out_shape);
  const double* pa = a.value().data().data();
  const double* pb = b.value().data().data();
  double* pc = out.data().data();
  if (a3 && !b3) {
    gemm_nn(pa, pb, pc, batch * m, k, n);
  } else {
    for (std::size_t t = 0; t < batch; ++t)
      gemm_nn(pa + t * m * k, pb + t * k * n, pc + t * m * n, m, k, n);
  }
  return tape.record(std::move(out), {a, b},
                     [a, b, batch, m, k, n, a3, b3](const Tensor& g, GradSink& sink) {
                       const double* pg = g.data().data();
                       const double* pa = a.value().data().data();
                       const double* pb = b.value().data().data();
                       if (Tensor* ga = sink.slot(a)) {
                         // dA = dC * B^T
                         std::vector<double> bt(k * n);
                         for (std::size_t t = 0; t < batch; ++t) {
                           const double* bsrc = b3 ? pb + t * k * n : pb;
                           if (t == 0 || b3) transpose_into(bsrc, bt.data(), k, n);
                           gemm_nn(pg + t * m * n, bt.data(), ga->data().data() + t * m * k, m, n,
                                   k);
                         }
                       }
                       if (Tensor* gb = sink.slot(b)) {
                         // dB = A^T * dC
                         if (a3 && !b3) {
                           gemm_tn(pa, pg, gb->data().data(), k, batch * m, n);
                         } else {
                           for (std::size_t t = 0; t < batch; ++t)
                             gemm_tn(pa + t * m * k, pg + t * m * n,
                                     gb->data().data() + t * k * n, k, m, n);
                         }
                       }
                     });
}

Var linear(Var x, Var w, std::optional<Var> bias) {
  Tape& tape = bias ? same_tape({x, w, *bias}) : same_tape({x, w});
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.empty() || sw.size() != 2 || sx.back() != sw[1]) throw mismatch("linear", sx, sw);
  const std::size_t in = sw[1], out_dim = sw[0];
  const std::size_t rows = x.value().size() / in;
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != out_dim)) {
    throw mismatch("linear bias", sw, bias->shape());
  }
  Shape out_shape = sx;
  out_shape.back() = out_dim;
  Tensor out(out_shape);
  std::vector<double> wt(in * out_dim);
  transpose_into(w.value().data().data(), wt.data(), out_dim, in);
  gemm_nn(x.value().data().data(), wt.data(), out.data().data(), rows, in, out_dim);
  if (bias) {
    auto po = out.data();
    auto pbias = bias->value().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < out_dim; ++j) po[r * out_dim + j] += pbias[j];
  }
  std::optional<Var> bvar = bias;
  return tape.record(std::move(out), bias ? std::initializer_list<Var>{x, w, *bias}
                                          : std::initializer_list<Var>{x, w},
                     [x, w, bvar, rows, in, out_dim](const Tensor& g, GradSink& sink) {
                       const double* pg = g.data().data();
                       if (Tensor* gx = sink.slot(x)) {
                         gemm_nn(pg, w.value().data().data(), gx->data().data(), rows, out_dim,
                                 in);
                       }
                       if (Tensor* gw = sink.slot(w)) {
                         gemm_tn(pg, x.value().data().data(), gw->data().data(), out_dim, rows,
                                 in);
                       }
                       if (bvar) {
                         if (Tensor* gb = sink.slot(*bvar)) {
                           auto pb = gb->data();
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t j = 0; j < out_dim; ++j)
                               pb[j] += pg[r * out_dim + j];
                         }
                       }
                     });
}

Var transpose(Var a) {
  Tape& tape = same_tape({a});
  const Shape& s = a.shape();
  if (s.size() < 2) throw DimensionError("transpose: need rank >= 2, got " + shape_string(s));
  const std::size_t m = s[s.size() - 2], n = s.back();
  const std::size_t batch = a.value().size() / (m * n);
  Shape out_shape = s;
  std::swap(out_shape[s.size() - 2], out_shape[s.size() - 1]);
  Tensor out(out_shape);
  for (std::size_t t = 0; t < batch; ++t)
    transpose_into(a.value().data().data() + t * m * n, out.data().data() + t * m * n, m, n);
  return tape.record(std::move(out), {a}, [a, m, n, batch](const Tensor& g, GradSink& sink) {
    if (Tensor* ga = sink.slot(a)) {
      std::vector<double> tmp(m * n);
      for (std::size_t t = 0; t < batch; ++t) {
        transpose_into(g.data().data() + t * m * n, tmp.data(), n, m);
        double* dst = ga->data().data() + t * m * n;
        for (std::size_t i = 0; i < m * n; ++i) dst[i] += tmp[i];
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tape& tape = same_tape({a});
  Tensor out = a.value().reshaped(std::move(shape));
  return tape.record(std::move(out), {a}, [a](const Tensor& g, GradSink& sink) {
    if (Tensor* ga = sink.slot(a)) {
      auto d = ga->data();
      auto s = g.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Var a, Var b) {
  Tape& tape = same_tape({a, b});
  if (a.shape() != b.shape()) throw mismatch("add", a.shape(), b.shape());
  Tensor out = a.value();
  add_into(out, b.value());
  return tape.record(std::move(out), {a, b}, [a, b](const Tensor& g, GradSink& sink) {
    if (Tensor* ga = sink.slot(a)) add_into(*ga, g);
    if (Tensor* gb = sink.slot(b)) add_into(*gb, g);
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape({a, b});
  if (a.shape() != b.shape()) throw mismatch("mul", a.shape(), b.shape());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return tape.record(std::move(out), {a, b}, [a, b](const Tensor& g, GradSink& sink) {
    if (Tensor* ga = sink.slot(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b.value()[i];
    if (Tensor* gb = sink.slot(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a.value()[i];
  });
}

Var scale(Var a, double factor) {
  Tape& tape = same_tape({a});
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return tape.record(std::move(out), {a}, [a, factor](const Tensor& g, GradSink& sink) {
    if (Tensor* ga = sink.slot(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * factor;
  });
}

Var leaky_relu(Var x, double slope) {
  Tape& tape = same_tape({x});
  Tensor out = x.value();
  for (double& v : out.data()) {
    if (tape.requires_grad(x)) tape.note_kink_distance(std::abs(v));
    if (v < 0.0) v *= slope;
  }
  return tape.record(std::move(out), {x}, [x, slope](const Tensor& g, GradSink& sink) {
    if (Tensor* gx = sink.slot(x)) {
      const Tensor& xv = x.value();
      // x == 0 takes the positive branch.
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += xv[i] >= 0.0 ? g[i] : slope * g[i];
    }
  });
}

Var sigmoid(Var x) {
  Tape& tape = same_tape({x});
  Tensor out = x.value();
  for (double& v : out.data()) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  Tensor saved = out;
  return tape.record(std::move(out), {x},
                     [x, y = std::move(saved)](const Tensor& g, GradSink& sink) {
                       if (Tensor* gx = sink.slot(x))
                         for (std::size_t i = 0; i < g.size(); ++i)
                           (*gx)[i] += g[i] * y[i] * (1.0 - y[i]);
                     });
}

Var softmax(Var x, std::size_t axis) {
  Tape& tape = same_tape({x});
  const AxisSplit s = split_axis(x.shape(), axis);
  Tensor out = x.value();
  auto po = out.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      auto idx = [&](std::size_t i) { return (o * s.n + i) * s.inner + in; };
      double mx = po[idx(0)];
      for (std::size_t i = 1; i < s.n; ++i) mx = std::max(mx, po[idx(i)]);
      double total = 0.0;
      for (std::size_t i = 0; i < s.n; ++i) {
        po[idx(i)] = std::exp(po[idx(i)] - mx);
        total += po[idx(i)];
      }
      for (std::size_t i = 0; i < s.n; ++i) po[idx(i)] /= total;
    }
  }
  Tensor saved = out;
  return tape.record(std::move(out), {x},
                     [x, s, y = std::move(saved)](const Tensor& g, GradSink& sink) {
                       Tensor* gx = sink.slot(x);
                       if (!gx) return;
                       for (std::size_t o = 0; o < s.outer; ++o) {
                         for (std::size_t in = 0; in < s.inner; ++in) {
                           auto idx = [&](std::size_t i) { return (o * s.n + i) * s.inner + in; };
                           double dot = 0.0;
                           for (std::size_t i = 0; i < s.n; ++i) dot += g[idx(i)] * y[idx(i)];
                           for (std::size_t i = 0; i < s.n; ++i)
                             (*gx)[idx(i)] += y[idx(i)] * (g[idx(i)] - dot);
                         }
                       }
                     });
}

// ---------------------------------------------------------------------------
// Convolution and pooling

Var conv1d(Var x, Var w, std::size_t stride, std::size_t padding) {
  Tape& tape = same_tape({x, w});
  const Seq3 in = as_seq3(x.shape(), "conv1d");
  const Shape& sw = w.shape();
  if (sw.size() != 3 || sw[1] != in.channels) throw mismatch("conv1d", x.shape(), sw);
  if (stride == 0) throw ContractError("conv1d: stride must be >= 1");
  const std::size_t c_out = sw[0], c_in = sw[1], p = sw[2];
  if (in.length + 2 * padding < p) {
    throw DimensionError("conv1d: kernel of length " + std::to_string(p) +
                         " exceeds padded input of length " +
                         std::to_string(in.length + 2 * padding));
  }
  const std::size_t out_len = (in.length + 2 * padding - p) / stride + 1;
  Tensor out(in.batched ? Shape{in.batch, c_out, out_len} : Shape{c_out, out_len});

  const double* px = x.value().data().data();
  const double* pw = w.value().data().data();
  double* po = out.data().data();
  const std::size_t L = in.length;
  // Visits every (output position, input position) pair that touches real data.
  auto for_each_tap = [=](std::size_t k, auto&& fn) {
    for (std::size_t j = 0; j < out_len; ++j) {
      const std::size_t padded = j * stride + k;
      if (padded < padding || padded - padding >= L) continue;
      fn(j, padded - padding);
    }
  };
  for (std::size_t b = 0; b < in.batch; ++b)
    for (std::size_t o = 0; o < c_out; ++o)
      for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t k = 0; k < p; ++k) {
          const double wv = pw[(o * c_in + c) * p + k];
          const double* xrow = px + (b * c_in + c) * L;
          double* orow = po + (b * c_out + o) * out_len;
          for_each_tap(k, [&](std::size_t j, std::size_t pos) { orow[j] += wv * xrow[pos]; });
        }

  return tape.record(
      std::move(out), {x, w},
      [x, w, in, c_out, c_in, p, out_len, L, for_each_tap](const Tensor& g, GradSink& sink) {
        const double* pg = g.data().data();
        Tensor* gx = sink.slot(x);
        Tensor* gw = sink.slot(w);
        const double* px = x.value().data().data();
        const double* pw = w.value().data().data();
        for (std::size_t b = 0; b < in.batch; ++b)
          for (std::size_t o = 0; o < c_out; ++o)
            for (std::size_t c = 0; c < c_in; ++c)
              for (std::size_t k = 0; k < p; ++k) {
                const std::size_t widx = (o * c_in + c) * p + k;
                const double* grow = pg + (b * c_out + o) * out_len;
                const std::size_t xoff = (b * c_in + c) * L;
                if (gx) {
                  double* gxrow = gx->data().data() + xoff;
                  const double wv = pw[widx];
                  for_each_tap(k, [&](std::size_t j, std::size_t pos) { gxrow[pos] += grow[j] * wv; });
                }
                if (gw) {
                  double acc = 0.0;
                  for_each_tap(k, [&](std::size_t j, std::size_t pos) { acc += grow[j] * px[xoff + pos]; });
                  (*gw)[widx] += acc;
                }
              }
      });
}

Var max_pool1d(Var x, std::size_t window, std::size_t stride) {
  Tape& tape = same_tape({x});
  const Seq3 in = as_seq3(x.shape(), "max_pool1d");
  if (window == 0 || stride == 0) throw ContractError("max_pool1d: window and stride must be >= 1");
  if (window > in.length) {
    throw DimensionError("max_pool1d: window " + std::to_string(window) +
                         " exceeds input length " + std::to_string(in.length));
  }
  const std::size_t out_len = (in.length - window) / stride + 1;
  Tensor out(in.batched ? Shape{in.batch, in.channels, out_len} : Shape{in.channels, out_len});
  std::vector<std::size_t> argmax(out.size());
  const auto px = x.value().data();
  for (std::size_t row = 0; row < in.batch * in.channels; ++row) {
    for (std::size_t j = 0; j < out_len; ++j) {
      const std::size_t start = row * in.length + j * stride;
      std::size_t best = start;
      for (std::size_t t = 1; t < window; ++t) {
        if (px[start + t] > px[best]) best = start + t;
      }
      if (tape.requires_grad(x)) {
        for (std::size_t t = 0; t < window; ++t)
          if (start + t != best) tape.note_kink_distance(px[best] - px[start + t]);
      }
      out[row * out_len + j] = px[best];
      argmax[row * out_len + j] = best;
    }
  }
  return tape.record(std::move(out), {x},
                     [x, idx = std::move(argmax)](const Tensor& g, GradSink& sink) {
                       if (Tensor* gx = sink.slot(x))
                         for (std::size_t i = 0; i < g.size(); ++i) (*gx)[idx[i]] += g[i];
                     });
}

// ---------------------------------------------------------------------------
// Shape helpers and reductions

Var pad_last(Var x, std::size_t length) {
  Tape& tape = same_tape({x});
  const Shape& s = x.shape();
  if (s.empty() || s.back() > length) {
    throw DimensionError("pad_last: cannot pad " + shape_string(s) + " to length " +
                         std::to_string(length));
  }
  const std::size_t cur = s.back();
  const std::size_t rows = x.value().size() / std::max<std::size_t>(cur, 1);
  Shape out_shape = s;
  out_shape.back() = length;
  Tensor out(out_shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cur; ++j) out[r * length + j] = x.value()[r * cur + j];
  return tape.record(std::move(out), {x}, [x, rows, cur, length](const Tensor& g, GradSink& sink) {
    if (Tensor* gx = sink.slot(x))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cur; ++j) (*gx)[r * cur + j] += g[r * length + j];
  });
}

Var mean(Var x, std::size_t axis) {
  Tape& tape = same_tape({x});
  const AxisSplit s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  const double inv = 1.0 / static_cast<double>(s.n);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.n; ++i)
      for (std::size_t in = 0; in < s.inner; ++in)
        out[o * s.inner + in] += x.value()[(o * s.n + i) * s.inner + in] * inv;
  return tape.record(std::move(out), {x}, [x, s, inv](const Tensor& g, GradSink& sink) {
    if (Tensor* gx = sink.slot(x))
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.n; ++i)
          for (std::size_t in = 0; in < s.inner; ++in)
            (*gx)[(o * s.n + i) * s.inner + in] += g[o * s.inner + in] * inv;
  });
}

Var sum(Var x) {
  Tape& tape = same_tape({x});
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return tape.record(Tensor::scalar(total), {x}, [x](const Tensor& g, GradSink& sink) {
    if (Tensor* gx = sink.slot(x))
      for (double& v : gx->data()) v += g[0];
  });
}

Var bce_loss(Var pred, Var label) {
  Tape& tape = same_tape({pred, label});
  const Tensor& p = pred.value();
  const Tensor& y = label.value();
  if (p.size() != y.size() || p.size() == 0) throw mismatch("bce_loss", p.shape(), y.shape());
  const std::size_t n = p.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw ContractError("bce_loss: label " + std::to_string(y[i]) + " at index " +
                          std::to_string(i) + " is not 0 or 1");
    }
    const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    total += y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return tape.record(Tensor::scalar(-total * inv_n), {pred, label},
                     [pred, label, inv_n](const Tensor& g, GradSink& sink) {
                       Tensor* gp = sink.slot(pred);
                       if (!gp) return;
                       const Tensor& p = pred.value();
                       const Tensor& y = label.value();
                       for (std::size_t i = 0; i < p.size(); ++i) {
                         // Clamped entries have zero derivative.
                         if (p[i] < kBceClamp || p[i] > 1.0 - kBceClamp) continue;
                         (*gp)[i] += -g[0] * inv_n * (y[i] / p[i] - (1.0 - y[i]) / (1.0 - p[i]));
                       }
                     });
}

}  // namespace genemeta::ad
