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

#include "ila/nn.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ila/errors.hpp"
#include "ila/kernels.hpp"

namespace ila::nn {

namespace {

Tape& tape_of(const Var& x) {
  if (!x.valid()) throw BadIndex("use of an unbound Var");
  return *x.tape();
}

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Normalizes `groups` contiguous runs of `len` values each. Returns xhat and
// fills the per-run reciprocal standard deviations.
Tensor normalize_runs(const Tensor& x, std::size_t groups, std::size_t len, double eps,
                      std::vector<double>& rstd) {
  Tensor xhat(x.shape());
  auto in = x.data();
  auto out = xhat.mutable_data();
  rstd.assign(groups, 0.0);
  for (std::size_t r = 0; r < groups; ++r) {
    const double* xr = in.data() + r * len;
    double* yr = out.data() + r * len;
    double mu = 0.0;
    for (std::size_t j = 0; j < len; ++j) mu += xr[j];
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t j = 0; j < len; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(len);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < len; ++j) yr[j] = (xr[j] - mu) * rstd[r];
  }
  return xhat;
}

// Backward of xhat = (x - mean) * rstd within each run, given d(xhat).
void normalize_runs_backward(const double* gxhat, const double* xhat,
                             const std::vector<double>& rstd, std::size_t len, double* gx) {
  for (std::size_t r = 0; r < rstd.size(); ++r) {
    const double* g = gxhat + r * len;
    const double* xh = xhat + r * len;
    double mg = 0.0, mgx = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      mg += g[j];
      mgx += g[j] * xh[j];
    }
    mg /= static_cast<double>(len);
    mgx /= static_cast<double>(len);
    for (std::size_t j = 0; j < len; ++j) gx[r * len + j] = rstd[r] * (g[j] - mg - xh[j] * mgx);
  }
}

// Scaled dot-product attention on a fused projection qkv [n, 3d]; returns the
// head outputs concatenated along columns, [n, d].
Var attention(const Var& qkv, std::size_t heads) {
  const std::size_t n = qkv.shape()[0], d = qkv.shape()[1] / 3, hd = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const Tensor qv = qkv.value();
  auto z = qv.data();
  const std::size_t ld = 3 * d;
  auto probs = std::make_shared<std::vector<double>>(heads * n * n);
  Tensor out({n, d});
  auto o = out.mutable_data();
  std::vector<double> scores(n * n);
  for (std::size_t h = 0; h < heads; ++h) {
    const double* q = z.data() + h * hd;
    const double* k = z.data() + d + h * hd;
    const double* v = z.data() + 2 * d + h * hd;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < hd; ++p) s += q[i * ld + p] * k[j * ld + p];
        scores[i * n + j] = s * scale;
      }
    }
    double* P = probs->data() + h * n * n;
    kernels::softmax_rows(scores.data(), P, n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double* orow = o.data() + i * d + h * hd;
      for (std::size_t j = 0; j < n; ++j) {
        const double pij = P[i * n + j];
        for (std::size_t p = 0; p < hd; ++p) orow[p] += pij * v[j * ld + p];
      }
    }
  }
  return tape_of(qkv).record(
      "attention", out, {qkv},
      [qv, probs, n, d, hd, heads, scale, ld](const Tensor& g, const std::vector<bool>&) {
        Tensor gz({n, ld});
        auto dz = gz.mutable_data();
        auto z = qv.data();
        auto go = g.data();
        std::vector<double> dP(n * n);
        for (std::size_t h = 0; h < heads; ++h) {
          const double* q = z.data() + h * hd;
          const double* k = z.data() + d + h * hd;
          const double* v = z.data() + 2 * d + h * hd;
          double* dq = dz.data() + h * hd;
          double* dk = dz.data() + d + h * hd;
          double* dv = dz.data() + 2 * d + h * hd;
          const double* P = probs->data() + h * n * n;
          for (std::size_t i = 0; i < n; ++i) {
            const double* gi = go.data() + i * d + h * hd;
            for (std::size_t j = 0; j < n; ++j) {
              double s = 0.0;
              for (std::size_t p = 0; p < hd; ++p) {
                s += gi[p] * v[j * ld + p];
                dv[j * ld + p] += P[i * n + j] * gi[p];
              }
              dP[i * n + j] = s;
            }
          }
          for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += P[i * n + j] * dP[i * n + j];
            for (std::size_t j = 0; j < n; ++j) {
              const double ds = P[i * n + j] * (dP[i * n + j] - dot) * scale;
              if (ds == 0.0) continue;
              for (std::size_t p = 0; p < hd; ++p) {
                dq[i * ld + p] += ds * k[j * ld + p];
                dk[j * ld + p] += ds * q[i * ld + p];
              }
            }
          }
        }
        return std::vector<Tensor>{gz};
      });
}

}  // namespace

Var linear(const Var& x, const Var& w, const Var& b) {
  if (x.shape().size() != 2 || w.shape().size() != 2 || b.shape().size() != 1 ||
      w.shape()[1] != b.shape()[0] || x.shape()[1] != w.shape()[0]) {
    throw ShapeMismatch("linear: x " + to_string(x.shape()) + ", w " + to_string(w.shape()) +
                        ", b " + to_string(b.shape()));
  }
  const std::size_t n = x.shape()[0], in = x.shape()[1], out = w.shape()[1];
  const Tensor xv = x.value(), wv = w.value();
  Tensor y({n, out});
  auto yd = y.mutable_data();
  kernels::gemm(xv.data().data(), wv.data().data(), yd.data(), n, in, out);
  auto bd = b.value().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out; ++j) yd[i * out + j] += bd[j];
  }
  return tape_of(x).record(
      "linear", y, {x, w, b},
      [xv, wv, n, in, out](const Tensor& g, const std::vector<bool>& needs) {
        std::vector<Tensor> grads(3);
        if (needs[0]) {
          grads[0] = Tensor({n, in});
          kernels::gemm_nt(g.data().data(), wv.data().data(), grads[0].mutable_data().data(), n,
                           out, in);
        }
        if (needs[1]) {
          grads[1] = Tensor({in, out});
          kernels::gemm_tn(xv.data().data(), g.data().data(), grads[1].mutable_data().data(), in,
                           n, out);
        }
        if (needs[2]) {
          grads[2] = Tensor({out});
          auto gb = grads[2].mutable_data();
          auto gd = g.data();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < out; ++j) gb[j] += gd[i * out + j];
          }
        }
        return grads;
      });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  if (x.shape().size() != 2 || gain.shape() != Shape{x.shape()[1]} ||
      bias.shape() != Shape{x.shape()[1]}) {
    throw ShapeMismatch("layer_norm: x " + to_string(x.shape()) + ", gain " +
                        to_string(gain.shape()));
  }
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  auto rstd = std::make_shared<std::vector<double>>();
  const Tensor xhat = normalize_runs(x.value(), n, d, eps, *rstd);
  const Tensor gv = gain.value();
  Tensor y(x.shape());
  auto yd = y.mutable_data();
  auto xh = xhat.data(), gd = gv.data(), bd = bias.value().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) yd[i * d + j] = xh[i * d + j] * gd[j] + bd[j];
  }
  return tape_of(x).record(
      "layer_norm", y, {x, gain, bias},
      [xhat, gv, rstd, n, d](const Tensor& g, const std::vector<bool>& needs) {
        std::vector<Tensor> grads(3);
        auto gy = g.data(), xh = xhat.data(), gd = gv.data();
        if (needs[1] || needs[2]) {
          grads[1] = Tensor({d});
          grads[2] = Tensor({d});
          auto gg = grads[1].mutable_data(), gb = grads[2].mutable_data();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
              gg[j] += gy[i * d + j] * xh[i * d + j];
              gb[j] += gy[i * d + j];
            }
          }
        }
        if (needs[0]) {
          std::vector<double> gxhat(n * d);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) gxhat[i * d + j] = gy[i * d + j] * gd[j];
          }
          grads[0] = Tensor({n, d});
          normalize_runs_backward(gxhat.data(), xh.data(), *rstd, d,
                                  grads[0].mutable_data().data());
        }
        return grads;
      });
}

Var quick_gelu(const Var& x) {
  const Tensor xv = x.value();
  Tensor y(xv.shape());
  auto yd = y.mutable_data();
  auto xd = xv.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = xd[i] * stable_sigmoid(1.702 * xd[i]);
  return tape_of(x).record("quick_gelu", y, {x}, [xv](const Tensor& g, const std::vector<bool>&) {
    Tensor gx(xv.shape());
    auto d = gx.mutable_data();
    auto xd = xv.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double s = stable_sigmoid(1.702 * xd[i]);
      d[i] = gd[i] * (s + 1.702 * xd[i] * s * (1.0 - s));
    }
    return std::vector<Tensor>{gx};
  });
}

Var msa(const Var& x, const MsaWeights& p) {
  if (x.shape().size() != 2) throw ShapeMismatch("msa: input " + to_string(x.shape()));
  const std::size_t d = x.shape()[1];
  if (p.heads == 0 || d % p.heads != 0) {
    throw ShapeMismatch("msa: width " + std::to_string(d) + " not divisible into " +
                        std::to_string(p.heads) + " heads");
  }
  if (p.qkv_w.shape() != Shape{d, 3 * d} || p.out_w.shape() != Shape{d, d}) {
    throw ShapeMismatch("msa: projection shapes " + to_string(p.qkv_w.shape()) + ", " +
                        to_string(p.out_w.shape()) + " for width " + std::to_string(d));
  }
  return linear(attention(linear(x, p.qkv_w, p.qkv_b), p.heads), p.out_w, p.out_b);
}

Var mlp(const Var& x, const MlpWeights& p) {
  return linear(quick_gelu(linear(x, p.fc1_w, p.fc1_b)), p.fc2_w, p.fc2_b);
}

Var conv(const Var& x, const ConvWeights& p) {
  if (p.weight.shape().size() == 4 && p.weight.shape()[2] % 2 == 0) {
    throw ShapeMismatch("conv: kernel size must be odd, got " + to_string(p.weight.shape()));
  }
  return conv2d(x, p.weight, p.bias, p.stride, p.padding);
}

Var group_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  if (x.shape().size() != 3 || gain.shape() != Shape{x.shape()[0]} ||
      bias.shape() != Shape{x.shape()[0]}) {
    throw ShapeMismatch("group_norm: x " + to_string(x.shape()) + ", gain " +
                        to_string(gain.shape()));
  }
  const std::size_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  auto rstd = std::make_shared<std::vector<double>>();
  const Tensor xhat = normalize_runs(x.value(), 1, c * hw, eps, *rstd);
  const Tensor gv = gain.value();
  Tensor y(x.shape());
  auto yd = y.mutable_data();
  auto xh = xhat.data(), gd = gv.data(), bd = bias.value().data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t q = 0; q < hw; ++q) yd[ch * hw + q] = xh[ch * hw + q] * gd[ch] + bd[ch];
  }
  return tape_of(x).record(
      "group_norm", y, {x, gain, bias},
      [xhat, gv, rstd, c, hw](const Tensor& g, const std::vector<bool>& needs) {
        std::vector<Tensor> grads(3);
        auto gy = g.data(), xh = xhat.data(), gd = gv.data();
        if (needs[1] || needs[2]) {
          grads[1] = Tensor({c});
          grads[2] = Tensor({c});
          auto gg = grads[1].mutable_data(), gb = grads[2].mutable_data();
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t q = 0; q < hw; ++q) {
              gg[ch] += gy[ch * hw + q] * xh[ch * hw + q];
              gb[ch] += gy[ch * hw + q];
            }
          }
        }
        if (needs[0]) {
          std::vector<double> gxhat(c * hw);
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t q = 0; q < hw; ++q) gxhat[ch * hw + q] = gy[ch * hw + q] * gd[ch];
          }
          grads[0] = Tensor(xhat.shape());
          normalize_runs_backward(gxhat.data(), xh.data(), *rstd, c * hw,
                                  grads[0].mutable_data().data());
        }
        return grads;
      });
}

Var global_avg_pool(const Var& x) {
  if (x.shape().size() != 3) throw ShapeMismatch("global_avg_pool: " + to_string(x.shape()));
  const std::size_t c = x.shape()[0];
  return reshape(mean(reshape(x, {c, x.shape()[1] * x.shape()[2]}), 1), {c});
}

}  // namespace ila::nn
