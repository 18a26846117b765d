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

#include "ila/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <vector>

namespace ila::kernels {

namespace {

// Four doubles; lowers to one AVX register or two SSE2 registers.
typedef double v4d __attribute__((vector_size(32)));

inline v4d load4(const double* p) {
  v4d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store4(double* p, v4d v) { std::memcpy(p, &v, sizeof v); }

}  // namespace

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
  // 4 x 8 blocks of C live in registers while p runs over k. Every element is
  // still summed over p in ascending order, exactly like the scalar loop.
  const std::size_t m4 = m - m % 4, n8 = n - n % 8;
  for (std::size_t i = 0; i < m4; i += 4) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (std::size_t j = 0; j < n8; j += 8) {
      v4d c00{}, c01{}, c10{}, c11{}, c20{}, c21{}, c30{}, c31{};
      const double* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += n) {
        const v4d b0 = load4(bp), b1 = load4(bp + 4);
        const v4d x0 = v4d{} + a0[p], x1 = v4d{} + a1[p], x2 = v4d{} + a2[p], x3 = v4d{} + a3[p];
        c00 += x0 * b0;
        c01 += x0 * b1;
        c10 += x1 * b0;
        c11 += x1 * b1;
        c20 += x2 * b0;
        c21 += x2 * b1;
        c30 += x3 * b0;
        c31 += x3 * b1;
      }
      double* cp = c + i * n + j;
      store4(cp, c00);
      store4(cp + 4, c01);
      store4(cp + n, c10);
      store4(cp + n + 4, c11);
      store4(cp + 2 * n, c20);
      store4(cp + 2 * n + 4, c21);
      store4(cp + 3 * n, c30);
      store4(cp + 3 * n + 4, c31);
    }
  }
  // Ragged right edge (rows of the blocked part) and bottom edge (all columns).
  auto scalar = [&](std::size_t i, std::size_t j0, std::size_t j1) {
    double* crow = c + i * n;
    for (std::size_t j = j0; j < j1; ++j) crow[j] = 0.0;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = j0; j < j1; ++j) crow[j] += aip * brow[j];
    }
  };
  if (n8 < n) {
    for (std::size_t i = 0; i < m4; ++i) scalar(i, n8, n);
  }
  for (std::size_t i = m4; i < m; ++i) scalar(i, 0, n);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  // b is [n, k].
  std::vector<double> bt(k * n);
  transpose(b, bt.data(), n, k);
  gemm(a, bt.data(), c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  // a is [k, m]; a transposed copy lets the blocked kernel do the work.
  std::vector<double> at(m * k);
  transpose(a, at.data(), k, m);
  gemm(at.data(), b, c, m, k, n);
}

void transpose(const double* src, double* dst, std::size_t rows, std::size_t cols) {
  constexpr std::size_t kBlock = 16;
  for (std::size_t i0 = 0; i0 < rows; i0 += kBlock) {
    const std::size_t i1 = std::min(rows, i0 + kBlock);
    for (std::size_t j0 = 0; j0 < cols; j0 += kBlock) {
      const std::size_t j1 = std::min(cols, j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
      }
    }
  }
}

void softmax_rows(const double* in, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    double* y = out + r * cols;
    const double m = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - m);
      z += y[c];
    }
    const double inv = 1.0 / z;
    for (std::size_t c = 0; c < cols; ++c) y[c] *= inv;
  }
}

void im2col(const double* x, double* cols, const ConvGeometry& g) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj, ++row) {
        double* dst = cols + row * oh * ow;
        for (std::size_t i = 0; i < oh; ++i) {
          const long yi = static_cast<long>(i * g.stride + ki) - static_cast<long>(g.padding);
          for (std::size_t j = 0; j < ow; ++j) {
            const long xj = static_cast<long>(j * g.stride + kj) - static_cast<long>(g.padding);
            const bool inside = yi >= 0 && xj >= 0 && yi < static_cast<long>(g.height) &&
                                xj < static_cast<long>(g.width);
            dst[i * ow + j] = inside ? x[(c * g.height + yi) * g.width + xj] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, double* dx, const ConvGeometry& g) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj, ++row) {
        const double* src = cols + row * oh * ow;
        for (std::size_t i = 0; i < oh; ++i) {
          const long yi = static_cast<long>(i * g.stride + ki) - static_cast<long>(g.padding);
          if (yi < 0 || yi >= static_cast<long>(g.height)) continue;
          for (std::size_t j = 0; j < ow; ++j) {
            const long xj = static_cast<long>(j * g.stride + kj) - static_cast<long>(g.padding);
            if (xj < 0 || xj >= static_cast<long>(g.width)) continue;
            dx[(c * g.height + yi) * g.width + xj] += src[i * ow + j];
          }
        }
      }
    }
  }
}

}  // namespace ila::kernels
