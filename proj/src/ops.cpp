// Copyright 2026 The ILA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ila/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ila/errors.hpp"
#include "ila/kernels.hpp"

namespace ila {

namespace {

Tape& tape_of(const Var& x) {
  if (!x.valid()) throw BadIndex("use of an unbound Var");
  return *x.tape();
}

void require_same_shape(const char* kind, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(kind) + ": " + to_string(a.shape()) + " vs " +
                        to_string(b.shape()));
  }
}

void require_rank(const char* kind, const Var& x, std::size_t rank) {
  if (x.shape().size() != rank) {
    throw ShapeMismatch(std::string(kind) + ": expected rank " + std::to_string(rank) +
                        ", got " + to_string(x.shape()));
  }
}

// Splits `shape` around `axis` into (outer, extent, inner) for blocked loops.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <class Fwd, class Deriv>
Var unary(const char* kind, const Var& x, Fwd fwd, Deriv deriv) {
  const Tensor xv = x.value();
  Tensor out(xv.shape());
  auto o = out.mutable_data();
  auto in = xv.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(in[i]);
  return tape_of(x).record(kind, out, {x},
                           [xv, out, deriv](const Tensor& g, const std::vector<bool>&) {
                             Tensor gx(xv.shape());
                             auto d = gx.mutable_data();
                             auto gi = g.data();
                             auto xi = xv.data();
                             auto yi = out.data();
                             for (std::size_t i = 0; i < d.size(); ++i) {
                               d[i] = gi[i] == 0.0 ? 0.0 : gi[i] * deriv(xi[i], yi[i]);
                             }
                             return std::vector<Tensor>{gx};
                           });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeMismatch("matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const Tensor av = a.value(), bv = b.value();
  Tensor out({m, n});
  kernels::gemm(av.data().data(), bv.data().data(), out.mutable_data().data(), m, k, n);
  return tape_of(a).record(
      "matmul", out, {a, b}, [av, bv, m, k, n](const Tensor& g, const std::vector<bool>& needs) {
        std::vector<Tensor> grads(2);
        if (needs[0]) {
          grads[0] = Tensor({m, k});
          kernels::gemm_nt(g.data().data(), bv.data().data(), grads[0].mutable_data().data(), m,
                           n, k);
        }
        if (needs[1]) {
          grads[1] = Tensor({k, n});
          kernels::gemm_tn(av.data().data(), g.data().data(), grads[1].mutable_data().data(), k,
                           m, n);
        }
        return grads;
      });
}

Var transpose(const Var& x) {
  require_rank("transpose", x, 2);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  Tensor out({c, r});
  kernels::transpose(x.value().data().data(), out.mutable_data().data(), r, c);
  return tape_of(x).record("transpose", out, {x},
                           [r, c](const Tensor& g, const std::vector<bool>&) {
                             Tensor gx({r, c});
                             kernels::transpose(g.data().data(), gx.mutable_data().data(), c, r);
                             return std::vector<Tensor>{gx};
                           });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  Shape original = x.shape();
  return tape_of(x).record("reshape", out, {x},
                           [original](const Tensor& g, const std::vector<bool>&) {
                             return std::vector<Tensor>{g.reshaped(original)};
                           });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat of nothing");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeMismatch("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> extents;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw ShapeMismatch("concat: " + to_string(first) + " vs " + to_string(s) +
                          " along axis " + std::to_string(axis));
    }
    extents.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }
  const AxisSplit split = split_at(out_shape, axis);
  Tensor out(out_shape);
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto in = parts[p].value().data();
    const std::size_t block = extents[p] * split.inner;
    for (std::size_t r = 0; r < split.outer; ++r) {
      std::copy_n(in.begin() + r * block, block,
                  o.begin() + r * split.extent * split.inner + offset);
    }
    offset += block;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<Shape> shapes;
  for (const Var& p : parts) shapes.push_back(p.shape());
  return tape_of(parts[0]).record(
      "concat", out, inputs,
      [shapes, extents, split](const Tensor& g, const std::vector<bool>& needs) {
        std::vector<Tensor> grads(shapes.size());
        auto gi = g.data();
        std::size_t offset = 0;
        for (std::size_t p = 0; p < shapes.size(); ++p) {
          const std::size_t block = extents[p] * split.inner;
          if (needs[p]) {
            grads[p] = Tensor(shapes[p]);
            auto d = grads[p].mutable_data();
            for (std::size_t r = 0; r < split.outer; ++r) {
              std::copy_n(gi.begin() + r * split.extent * split.inner + offset, block,
                          d.begin() + r * block);
            }
          }
          offset += block;
        }
        return grads;
      });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& shape = x.shape();
  if (axis >= shape.size() || begin >= end || end > shape[axis]) {
    throw ShapeMismatch("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") on axis " + std::to_string(axis) + " of " + to_string(shape));
  }
  const AxisSplit split = split_at(shape, axis);
  Shape out_shape = shape;
  out_shape[axis] = end - begin;
  const std::size_t block = (end - begin) * split.inner;
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto in = x.value().data();
  for (std::size_t r = 0; r < split.outer; ++r) {
    std::copy_n(in.begin() + (r * split.extent + begin) * split.inner, block,
                o.begin() + r * block);
  }
  return tape_of(x).record("slice", out, {x},
                           [shape, split, begin, block](const Tensor& g, const std::vector<bool>&) {
                             Tensor gx(shape);
                             auto d = gx.mutable_data();
                             auto gi = g.data();
                             for (std::size_t r = 0; r < split.outer; ++r) {
                               std::copy_n(gi.begin() + r * block, block,
                                           d.begin() + (r * split.extent + begin) * split.inner);
                             }
                             return std::vector<Tensor>{gx};
                           });
}

namespace {

// Calls fn(out_flat, in_flat) for every output element under broadcasting,
// walking the output in row-major order with an odometer over the dims.
template <class Fn>
void for_each_broadcast(const Shape& in, const Shape& out, Fn&& fn) {
  const std::size_t rank = out.size();
  if (rank == 0) {
    fn(0, 0);
    return;
  }
  std::vector<std::size_t> in_stride(rank, 0), idx(rank, 0);
  std::size_t s = 1;
  for (std::size_t i = rank; i-- > 0;) {
    in_stride[i] = in[i] == 1 ? 0 : s;
    s *= in[i];
  }
  const std::size_t total = numel(out), inner = out[rank - 1], inner_stride = in_stride[rank - 1];
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < total; flat += inner) {
    for (std::size_t j = 0; j < inner; ++j) fn(flat + j, src + j * inner_stride);
    for (std::size_t i = rank - 1; i-- > 0;) {
      ++idx[i];
      src += in_stride[i];
      if (idx[i] < out[i]) break;
      src -= in_stride[i] * idx[i];
      idx[i] = 0;
    }
  }
}

}  // namespace

Var broadcast(const Var& x, Shape shape) {
  const Shape in_shape = x.shape();
  bool ok = in_shape.size() == shape.size();
  for (std::size_t i = 0; ok && i < shape.size(); ++i) {
    ok = in_shape[i] == shape[i] || in_shape[i] == 1;
  }
  if (!ok) {
    throw ShapeMismatch("broadcast " + to_string(in_shape) + " to " + to_string(shape));
  }
  Tensor out(shape);
  auto o = out.mutable_data();
  auto in = x.value().data();
  for_each_broadcast(in_shape, shape, [&](std::size_t i, std::size_t j) { o[i] = in[j]; });
  return tape_of(x).record("broadcast", out, {x},
                           [in_shape, shape](const Tensor& g, const std::vector<bool>&) {
                             Tensor gx(in_shape);
                             auto d = gx.mutable_data();
                             auto gi = g.data();
                             for_each_broadcast(in_shape, shape, [&](std::size_t i, std::size_t j) {
                               d[j] += gi[i];
                             });
                             return std::vector<Tensor>{gx};
                           });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.value().data(), y = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  return tape_of(a).record("add", out, {a, b}, [](const Tensor& g, const std::vector<bool>&) {
    return std::vector<Tensor>{g, g};
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.value().data(), y = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  return tape_of(a).record("sub", out, {a, b},
                           [](const Tensor& g, const std::vector<bool>& needs) {
                             std::vector<Tensor> grads{g, Tensor()};
                             if (needs[1]) {
                               grads[1] = Tensor(g.shape());
                               auto d = grads[1].mutable_data();
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
                             }
                             return grads;
                           });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  const Tensor av = a.value(), bv = b.value();
  Tensor out(a.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  return tape_of(a).record("mul", out, {a, b},
                           [av, bv](const Tensor& g, const std::vector<bool>& needs) {
                             std::vector<Tensor> grads(2);
                             if (needs[0]) {
                               grads[0] = Tensor(g.shape());
                               auto d = grads[0].mutable_data();
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * bv[i];
                             }
                             if (needs[1]) {
                               grads[1] = Tensor(g.shape());
                               auto d = grads[1].mutable_data();
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * av[i];
                             }
                             return grads;
                           });
}

Var div(const Var& a, const Var& b) {
  require_same_shape("div", a, b);
  const Tensor av = a.value(), bv = b.value();
  Tensor out(a.shape());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] / bv[i];
  return tape_of(a).record("div", out, {a, b},
                           [av, bv, out](const Tensor& g, const std::vector<bool>& needs) {
                             std::vector<Tensor> grads(2);
                             if (needs[0]) {
                               grads[0] = Tensor(g.shape());
                               auto d = grads[0].mutable_data();
                               for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] / bv[i];
                             }
                             if (needs[1]) {
                               grads[1] = Tensor(g.shape());
                               auto d = grads[1].mutable_data();
                               for (std::size_t i = 0; i < d.size(); ++i) {
                                 d[i] = -g[i] * out[i] / bv[i];
                               }
                             }
                             return grads;
                           });
}

Var neg(const Var& x) { return scale(x, -1.0); }

Var scale(const Var& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Var add_scalar(const Var& x, double c) {
  return unary(
      "add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var tanh(const Var& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(const Var& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(const Var& x) {
  return unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var clamp_min(const Var& x, double bound) {
  return unary(
      "clamp_min", x, [bound](double v) { return v > bound ? v : bound; },
      [bound](double v, double) { return v > bound ? 1.0 : 0.0; });
}

Var sum(const Var& x) {
  const Shape shape = x.shape();
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return tape_of(x).record("sum", Tensor::scalar(s), {x},
                           [shape](const Tensor& g, const std::vector<bool>&) {
                             return std::vector<Tensor>{Tensor::full(shape, g[0])};
                           });
}

Var sum(const Var& x, std::size_t axis) {
  const Shape shape = x.shape();
  if (axis >= shape.size()) throw ShapeMismatch("sum: axis out of range");
  const AxisSplit split = split_at(shape, axis);
  Shape out_shape = shape;
  out_shape[axis] = 1;
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto in = x.value().data();
  for (std::size_t r = 0; r < split.outer; ++r) {
    for (std::size_t e = 0; e < split.extent; ++e) {
      const double* src = in.data() + (r * split.extent + e) * split.inner;
      double* dst = o.data() + r * split.inner;
      for (std::size_t c = 0; c < split.inner; ++c) dst[c] += src[c];
    }
  }
  return tape_of(x).record("sum_axis", out, {x},
                           [shape, split](const Tensor& g, const std::vector<bool>&) {
                             Tensor gx(shape);
                             auto d = gx.mutable_data();
                             auto gi = g.data();
                             for (std::size_t r = 0; r < split.outer; ++r) {
                               for (std::size_t e = 0; e < split.extent; ++e) {
                                 std::copy_n(gi.begin() + r * split.inner, split.inner,
                                             d.begin() + (r * split.extent + e) * split.inner);
                               }
                             }
                             return std::vector<Tensor>{gx};
                           });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var mean(const Var& x, std::size_t axis) {
  if (axis >= x.shape().size()) throw ShapeMismatch("mean: axis out of range");
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.shape()[axis]));
}

Var softmax(const Var& x) {
  if (x.shape().empty()) throw ShapeMismatch("softmax of a scalar");
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.value().size() / cols;
  Tensor out(x.shape());
  kernels::softmax_rows(x.value().data().data(), out.mutable_data().data(), rows, cols);
  return tape_of(x).record("softmax", out, {x},
                           [out, rows, cols](const Tensor& g, const std::vector<bool>&) {
                             Tensor gx(out.shape());
                             auto d = gx.mutable_data();
                             for (std::size_t r = 0; r < rows; ++r) {
                               const double* y = out.data().data() + r * cols;
                               const double* gr = g.data().data() + r * cols;
                               double dot = 0.0;
                               for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * y[c];
                               for (std::size_t c = 0; c < cols; ++c) {
                                 d[r * cols + c] = y[c] * (gr[c] - dot);
                               }
                             }
                             return std::vector<Tensor>{gx};
                           });
}

Var log_softmax(const Var& x) {
  if (x.shape().empty()) throw ShapeMismatch("log_softmax of a scalar");
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.value().size() / cols;
  Tensor probs(x.shape());
  kernels::softmax_rows(x.value().data().data(), probs.mutable_data().data(), rows, cols);
  Tensor out(x.shape());
  {
    auto o = out.mutable_data();
    auto in = x.value().data();
    for (std::size_t r = 0; r < rows; ++r) {
      double m = in[r * cols];
      for (std::size_t c = 1; c < cols; ++c) m = std::max(m, in[r * cols + c]);
      double z = 0.0;
      for (std::size_t c = 0; c < cols; ++c) z += std::exp(in[r * cols + c] - m);
      const double lse = m + std::log(z);
      for (std::size_t c = 0; c < cols; ++c) o[r * cols + c] = in[r * cols + c] - lse;
    }
  }
  return tape_of(x).record("log_softmax", out, {x},
                           [probs, rows, cols](const Tensor& g, const std::vector<bool>&) {
                             Tensor gx(probs.shape());
                             auto d = gx.mutable_data();
                             for (std::size_t r = 0; r < rows; ++r) {
                               double total = 0.0;
                               for (std::size_t c = 0; c < cols; ++c) total += g[r * cols + c];
                               for (std::size_t c = 0; c < cols; ++c) {
                                 d[r * cols + c] = g[r * cols + c] - probs[r * cols + c] * total;
                               }
                             }
                             return std::vector<Tensor>{gx};
                           });
}

Var conv2d(const Var& x, const Var& w, const Var& b, std::size_t stride, std::size_t padding) {
  require_rank("conv2d input", x, 3);
  require_rank("conv2d weight", w, 4);
  require_rank("conv2d bias", b, 1);
  const std::size_t c = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const std::size_t o = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != c || w.shape()[3] != k || b.shape()[0] != o) {
    throw ShapeMismatch("conv2d: input " + to_string(x.shape()) + ", weight " +
                        to_string(w.shape()) + ", bias " + to_string(b.shape()));
  }
  if (stride == 0 || h + 2 * padding < k || wd + 2 * padding < k) {
    throw ShapeMismatch("conv2d: kernel " + std::to_string(k) + " does not fit input " +
                        to_string(x.shape()) + " with padding " + std::to_string(padding));
  }
  const kernels::ConvGeometry geo{c, h, wd, k, stride, padding};
  const std::size_t ho = geo.out_h(), wo = geo.out_w(), ckk = c * k * k, spatial = ho * wo;

  const Tensor xv = x.value(), wv = w.value();
  auto cols = std::make_shared<std::vector<double>>(ckk * spatial);
  kernels::im2col(xv.data().data(), cols->data(), geo);
  Tensor out({o, ho, wo});
  auto od = out.mutable_data();
  kernels::gemm(wv.data().data(), cols->data(), od.data(), o, ckk, spatial);
  auto bd = b.value().data();
  for (std::size_t oc = 0; oc < o; ++oc) {
    for (std::size_t s = 0; s < spatial; ++s) od[oc * spatial + s] += bd[oc];
  }
  return tape_of(x).record(
      "conv2d", out, {x, w, b},
      [xv, wv, cols, geo, o, ckk, spatial](const Tensor& g, const std::vector<bool>& needs) {
        std::vector<Tensor> grads(3);
        const double* gd = g.data().data();
        if (needs[0]) {
          std::vector<double> wt(ckk * o);
          kernels::transpose(wv.data().data(), wt.data(), o, ckk);
          std::vector<double> dcols(ckk * spatial);
          kernels::gemm(wt.data(), gd, dcols.data(), ckk, o, spatial);
          grads[0] = Tensor(xv.shape());
          kernels::col2im(dcols.data(), grads[0].mutable_data().data(), geo);
        }
        if (needs[1]) {
          std::vector<double> colst(spatial * ckk);
          kernels::transpose(cols->data(), colst.data(), ckk, spatial);
          grads[1] = Tensor(wv.shape());
          kernels::gemm(gd, colst.data(), grads[1].mutable_data().data(), o, spatial, ckk);
        }
        if (needs[2]) {
          grads[2] = Tensor({o});
          auto db = grads[2].mutable_data();
          for (std::size_t oc = 0; oc < o; ++oc) {
            double s = 0.0;
            for (std::size_t i = 0; i < spatial; ++i) s += gd[oc * spatial + i];
            db[oc] = s;
          }
        }
        return grads;
      });
}

}  // namespace ila
