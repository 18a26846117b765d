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

#pragma once

// Raw loops shared by the differentiable ops. No shape checking here.

#include <cstddef>

namespace ila::kernels {

/// c[m,n] = a[m,k] * b[k,n]; c is overwritten.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);

/// c[m,n] = a[m,k] * b[n,k]^T.
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
/// c[m,n] = a[k,m]^T * b[k,n].
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
/// dst[cols,rows] = src[rows,cols]^T.
void transpose(const double* src, double* dst, std::size_t rows, std::size_t cols);

void softmax_rows(const double* in, double* out, std::size_t rows, std::size_t cols);

struct ConvGeometry {
  std::size_t channels, height, width, kernel, stride, padding;
  std::size_t out_h() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_w() const { return (width + 2 * padding - kernel) / stride + 1; }
};

/// Unfolds x[C,H,W] into cols[C*k*k, out_h*out_w]; padded taps read zero.
void im2col(const double* x, double* cols, const ConvGeometry& g);
/// Adjoint of im2col: accumulates cols back into dx[C,H,W] (dx must be zeroed).
void col2im(const double* cols, double* dx, const ConvGeometry& g);

}  // namespace ila::kernels
