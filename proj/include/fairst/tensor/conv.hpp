// Copyright 2026 The FairST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Same-padding cross-correlation over 1, 2 or 3 trailing spatial axes.
//
// Layouts (row-major):
//   input   (B, Cin, s1..sr)  or (Cin, s1..sr)
//   kernels (Cout, Cin, k1..kr), every k odd
//   bias    (Cout)
//   output  same layout as input with Cout channels
//
// The work is lowered to im2col + GEMM. Rank 1 and 2 are handled as rank 3
// with leading unit axes.

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "fairst/error.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst::conv {

struct Geometry {
  std::size_t batch = 1;
  bool batched = false;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::array<std::size_t, 3> extent{1, 1, 1};  // D, H, W
  std::array<std::size_t, 3> kernel{1, 1, 1};  // kd, kh, kw

  std::size_t positions() const { return extent[0] * extent[1] * extent[2]; }
  std::size_t taps() const { return kernel[0] * kernel[1] * kernel[2]; }
  std::size_t patch() const { return in_channels * taps(); }
};

inline Geometry geometry(const Shape& input, const Shape& kernels,
                         std::size_t rank) {
  require(rank >= 1 && rank <= 3, ErrorKind::invalid_input,
          "convolution rank must be 1, 2 or 3, got ", rank);
  require(input.size() == rank + 1 || input.size() == rank + 2,
          ErrorKind::invalid_input, "rank-", rank,
          " convolution expects input with ", rank + 1, " or ", rank + 2,
          " axes, got ", shape_string(input));
  require(kernels.size() == rank + 2, ErrorKind::invalid_input, "rank-", rank,
          " convolution expects kernels with ", rank + 2, " axes, got ",
          shape_string(kernels));
  Geometry g;
  g.batched = input.size() == rank + 2;
  std::size_t axis = 0;
  if (g.batched) g.batch = input[axis++];
  g.in_channels = input[axis++];
  g.out_channels = kernels[0];
  require(kernels[1] == g.in_channels, ErrorKind::invalid_input,
          "kernel expects ", kernels[1], " input channels, input has ",
          g.in_channels);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t slot = 3 - rank + i;
    g.extent[slot] = input[axis + i];
    g.kernel[slot] = kernels[2 + i];
    require(g.kernel[slot] % 2 == 1, ErrorKind::invalid_input,
            "kernel extent ", g.kernel[slot], " along axis ", i,
            " is not odd");
  }
  return g;
}

inline Shape output_shape(const Shape& input, const Geometry& g) {
  Shape out = input;
  out[g.batched ? 1 : 0] = g.out_channels;
  return out;
}

namespace detail {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Depth slices [d0, d1) of a sample as a (patch x positions) matrix. The
// positions cover whole slices, so a slab is contiguous in the output.
inline void im2col(const double* sample, const Geometry& g, std::vector<double>& col,
                   std::size_t d0, std::size_t d1) {
  const auto [D, H, W] = g.extent;
  const auto [KD, KH, KW] = g.kernel;
  const long pd = static_cast<long>(KD / 2);
  const long ph = static_cast<long>(KH / 2);
  const long pw = static_cast<long>(KW / 2);
  const std::size_t P = g.positions();
  const std::size_t Pc = (d1 - d0) * H * W;
  col.assign(g.patch() * Pc, 0.0);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const double* chan = sample + c * P;
    for (std::size_t a = 0; a < KD; ++a) {
      for (std::size_t b = 0; b < KH; ++b) {
        for (std::size_t e = 0; e < KW; ++e, ++row) {
          double* dst = col.data() + row * Pc;
          const long od = static_cast<long>(a) - pd;
          const long oh = static_cast<long>(b) - ph;
          const long ow = static_cast<long>(e) - pw;
          const long w_lo = std::max(0L, -ow);
          const long w_hi = std::min(static_cast<long>(W), static_cast<long>(W) - ow);
          for (long d = static_cast<long>(d0); d < static_cast<long>(d1); ++d) {
            const long sd = d + od;
            if (sd < 0 || sd >= static_cast<long>(D)) continue;
            for (long h = 0; h < static_cast<long>(H); ++h) {
              const long sh = h + oh;
              if (sh < 0 || sh >= static_cast<long>(H)) continue;
              const double* src = chan + (sd * H + sh) * W;
              double* out = dst + ((d - static_cast<long>(d0)) * H + h) * W;
              for (long w = w_lo; w < w_hi; ++w) out[w] = src[w + ow];
            }
          }
        }
      }
    }
  }
}

inline void im2col(const double* sample, const Geometry& g, std::vector<double>& col) {
  im2col(sample, g, col, 0, g.extent[0]);
}

// Scatter-adds a slab produced like im2col back into a (Cin, D, H, W)
// sample gradient.
inline void col2im(const std::vector<double>& col, const Geometry& g, double* sample_grad,
                   std::size_t d0, std::size_t d1) {
  const auto [D, H, W] = g.extent;
  const auto [KD, KH, KW] = g.kernel;
  const long pd = static_cast<long>(KD / 2);
  const long ph = static_cast<long>(KH / 2);
  const long pw = static_cast<long>(KW / 2);
  const std::size_t P = g.positions();
  const std::size_t Pc = (d1 - d0) * H * W;
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    double* chan = sample_grad + c * P;
    for (std::size_t a = 0; a < KD; ++a) {
      for (std::size_t b = 0; b < KH; ++b) {
        for (std::size_t e = 0; e < KW; ++e, ++row) {
          const double* src = col.data() + row * Pc;
          const long od = static_cast<long>(a) - pd;
          const long oh = static_cast<long>(b) - ph;
          const long ow = static_cast<long>(e) - pw;
          const long w_lo = std::max(0L, -ow);
          const long w_hi = std::min(static_cast<long>(W), static_cast<long>(W) - ow);
          for (long d = static_cast<long>(d0); d < static_cast<long>(d1); ++d) {
            const long sd = d + od;
            if (sd < 0 || sd >= static_cast<long>(D)) continue;
            for (long h = 0; h < static_cast<long>(H); ++h) {
              const long sh = h + oh;
              if (sh < 0 || sh >= static_cast<long>(H)) continue;
              double* dst = chan + (sd * H + sh) * W;
              const double* in = src + ((d - static_cast<long>(d0)) * H + h) * W;
              for (long w = w_lo; w < w_hi; ++w) dst[w + ow] += in[w];
            }
          }
        }
      }
    }
  }
}

inline void col2im(const std::vector<double>& col, const Geometry& g, double* sample_grad) {
  col2im(col, g, sample_grad, 0, g.extent[0]);
}

// Depth slices per slab so one unrolled slab stays near 1 MiB of cache.
inline std::size_t slab_depth(const Geometry& g) {
  const std::size_t per_slice = g.patch() * g.extent[1] * g.extent[2];
  return std::max<std::size_t>(1, (std::size_t{1} << 17) / std::max<std::size_t>(1, per_slice));
}

// Wt[(o, t), c] = W[o, c, taps - 1 - t]: the kernel with taps reversed and
// the channel axes swapped. Used by the narrow-output formulation below, where
// every scratch buffer scales with Cout instead of Cin.
inline RowMatrix flipped_weights(const Tensor& kernels, const Geometry& g) {
  const std::size_t taps = g.taps();
  RowMatrix wt(g.out_channels * taps, g.in_channels);
  for (std::size_t o = 0; o < g.out_channels; ++o)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t t = 0; t < taps; ++t)
        wt(o * taps + t, c) = kernels[(o * g.in_channels + c) * taps + (taps - 1 - t)];
  return wt;
}

inline Geometry output_side(const Geometry& g) {
  Geometry h = g;
  h.in_channels = g.out_channels;
  return h;
}

inline bool narrow_output(const Geometry& g) { return g.out_channels < g.in_channels; }

}  // namespace detail

inline Tensor forward(const Tensor& input, const Tensor& kernels,
                      const Tensor& bias, std::size_t rank) {
  const Geometry g = geometry(input.shape(), kernels.shape(), rank);
  require(bias.size() == g.out_channels, ErrorKind::invalid_input,
          "bias has ", bias.size(), " entries, expected ", g.out_channels);
  Tensor out(output_shape(input.shape(), g));
  const std::size_t P = g.positions();
  const std::size_t K = g.patch();
  if (detail::narrow_output(g)) {
    // out = col2im(Wt * x) with reversed taps.
    const detail::RowMatrix wt = detail::flipped_weights(kernels, g);
    const Geometry h = detail::output_side(g);
    thread_local std::vector<double> z;
    for (std::size_t n = 0; n < g.batch; ++n) {
      z.resize(wt.rows() * P);
      detail::MatrixMap zm(z.data(), wt.rows(), P);
      zm.noalias() = wt * detail::ConstMatrixMap(input.data() + n * g.in_channels * P,
                                                 g.in_channels, P);
      double* dst = out.data() + n * g.out_channels * P;
      detail::col2im(z, h, dst);
      for (std::size_t o = 0; o < g.out_channels; ++o)
        for (std::size_t i = 0; i < P; ++i) dst[o * P + i] += bias[o];
    }
    return out;
  }
  detail::ConstMatrixMap weights(kernels.data(), g.out_channels, K);
  const std::size_t D = g.extent[0], slice = P / D, step = detail::slab_depth(g);
  thread_local std::vector<double> col;
  for (std::size_t n = 0; n < g.batch; ++n) {
    detail::MatrixMap result(out.data() + n * g.out_channels * P, g.out_channels, P);
    for (std::size_t d0 = 0; d0 < D; d0 += step) {
      const std::size_t d1 = std::min(D, d0 + step);
      detail::im2col(input.data() + n * g.in_channels * P, g, col, d0, d1);
      detail::ConstMatrixMap cols(col.data(), K, (d1 - d0) * slice);
      result.middleCols(d0 * slice, (d1 - d0) * slice).noalias() = weights * cols;
    }
    for (std::size_t o = 0; o < g.out_channels; ++o)
      result.row(o).array() += bias[o];
  }
  return out;
}

struct Gradients {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

// Vector-Jacobian product of `forward` for an upstream gradient `grad_out`.
// With `input_gradient` false the input gradient is left at zero.
inline Gradients backward(const Tensor& input, const Tensor& kernels,
                          const Tensor& grad_out, std::size_t rank,
                          bool input_gradient = true) {
  const Geometry g = geometry(input.shape(), kernels.shape(), rank);
  require(grad_out.shape() == output_shape(input.shape(), g),
          ErrorKind::invalid_input, "upstream gradient shape ",
          shape_string(grad_out.shape()), " does not match convolution output");
  Gradients grads{Tensor(input.shape()), Tensor(kernels.shape()),
                  Tensor(Shape{g.out_channels})};
  const std::size_t P = g.positions();
  const std::size_t K = g.patch();
  if (detail::narrow_output(g)) {
    // U = im2col(upstream); grad_x = Wt^T U and grad_Wt = U x^T.
    const detail::RowMatrix wt = detail::flipped_weights(kernels, g);
    const Geometry h = detail::output_side(g);
    const std::size_t taps = g.taps();
    detail::RowMatrix grad_wt = detail::RowMatrix::Zero(wt.rows(), wt.cols());
    thread_local std::vector<double> u;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const double* up = grad_out.data() + n * g.out_channels * P;
      detail::im2col(up, h, u);
      detail::ConstMatrixMap um(u.data(), wt.rows(), P);
      detail::ConstMatrixMap x(input.data() + n * g.in_channels * P, g.in_channels, P);
      grad_wt.noalias() += um * x.transpose();
      if (input_gradient) {
        detail::MatrixMap gx(grads.input.data() + n * g.in_channels * P, g.in_channels, P);
        gx.noalias() = wt.transpose() * um;
      }
      for (std::size_t o = 0; o < g.out_channels; ++o)
        for (std::size_t i = 0; i < P; ++i) grads.bias[o] += up[o * P + i];
    }
    for (std::size_t o = 0; o < g.out_channels; ++o)
      for (std::size_t c = 0; c < g.in_channels; ++c)
        for (std::size_t t = 0; t < taps; ++t)
          grads.kernels[(o * g.in_channels + c) * taps + (taps - 1 - t)] = grad_wt(o * taps + t, c);
    return grads;
  }
  detail::ConstMatrixMap weights(kernels.data(), g.out_channels, K);
  detail::MatrixMap grad_weights(grads.kernels.data(), g.out_channels, K);
  const std::size_t D = g.extent[0], slice = P / D, step = detail::slab_depth(g);
  // Scratch buffers are reused across calls on the same thread.
  thread_local std::vector<double> col;
  thread_local std::vector<double> grad_col;
  for (std::size_t n = 0; n < g.batch; ++n) {
    detail::ConstMatrixMap upstream(grad_out.data() + n * g.out_channels * P,
                                    g.out_channels, P);
    for (std::size_t d0 = 0; d0 < D; d0 += step) {
      const std::size_t d1 = std::min(D, d0 + step);
      const std::size_t Pc = (d1 - d0) * slice;
      const auto up = upstream.middleCols(d0 * slice, Pc);
      detail::im2col(input.data() + n * g.in_channels * P, g, col, d0, d1);
      detail::ConstMatrixMap cols(col.data(), K, Pc);
      grad_weights.noalias() += up * cols.transpose();
      if (input_gradient) {
        grad_col.resize(K * Pc);
        detail::MatrixMap gcol(grad_col.data(), K, Pc);
        gcol.noalias() = weights.transpose() * up;
        detail::col2im(grad_col, g, grads.input.data() + n * g.in_channels * P, d0, d1);
      }
    }
    // Plain loop: a vectorized sum's grouping depends on the buffer's
    // alignment, which would make repeated runs differ in the last bit.
    const double* up = grad_out.data() + n * g.out_channels * P;
    for (std::size_t o = 0; o < g.out_channels; ++o)
      for (std::size_t i = 0; i < P; ++i) grads.bias[o] += up[o * P + i];
  }
  return grads;
}

}  // namespace fairst::conv
