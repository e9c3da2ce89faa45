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

// Three-stream predictor.
//
//   3D stream: history (1, W_in, H, W) -> 3D convs [16, 32, 1] -> time axis
//              read as W_in channels -> 2D conv -> (C3, H, W)
//   1D stream: series (M, W_in) -> 1D convs -> dense time collapse -> (C1)
//              broadcast over the grid -> (C1, H, W)
//   2D stream: features (N, H, W) -> 2D convs -> (C2, H, W)
//   head:      concat -> 2D convs (leaky ReLU between, last linear) -> (H, W)
//
// Every conv is same-padded; every layer except the last head layer is
// followed by a leaky ReLU.

#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/model/arch.hpp"
#include "fairst/tensor/autodiff.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

// Parameters recorded on a tape, in ModelParams order.
struct BoundParams {
  const ModelParams* params = nullptr;
  std::vector<ad::Var> vars;

  ad::Var operator[](const std::string& name) const {
    return vars[params->index(name)];
  }
};

inline BoundParams bind_params(ad::Tape& tape, const ModelParams& params,
                               bool track_gradients) {
  BoundParams bound{&params, {}};
  bound.vars.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors)
    bound.vars.push_back(track_gradients ? tape.variable(t) : tape.constant(t));
  return bound;
}

namespace model_detail {

inline ad::Var conv_layer(const BoundParams& p, const std::string& prefix, ad::Var x,
                          std::size_t rank, bool activate = true) {
  ad::Var y = ad::conv(x, p[prefix + ".w"], p[prefix + ".b"], rank);
  return activate ? ad::leaky_relu(y) : y;
}

inline void expect_shape(const Tensor& t, const Shape& shape, const char* what) {
  require(t.shape() == shape, ErrorKind::invalid_input, what, " has shape ",
          shape_string(t.shape()), ", expected ", shape_string(shape));
}

}  // namespace model_detail

// history: (1, W_in, H, W), already divided by the demand scale.
inline ad::Var stream3d(const BoundParams& p, ad::Var history) {
  const ArchConfig& c = p.params->config;
  model_detail::expect_shape(history.value(), Shape{1, c.window, c.rows, c.cols},
                             "3D stream input");
  ad::Var x = history;
  for (std::size_t i = 0; i < c.filters3d.size(); ++i)
    x = model_detail::conv_layer(p, "s3.conv" + std::to_string(i), x, 3);
  x = ad::reshape(x, Shape{c.window, c.rows, c.cols});
  return model_detail::conv_layer(p, "s3.merge", x, 2);
}

// series: (M, W_in).
inline ad::Var stream1d(const BoundParams& p, ad::Var series) {
  const ArchConfig& c = p.params->config;
  model_detail::expect_shape(series.value(), Shape{c.series_count, c.window},
                             "1D stream input");
  ad::Var x = series;
  for (std::size_t i = 0; i < c.layers1d; ++i)
    x = model_detail::conv_layer(p, "s1.conv" + std::to_string(i), x, 1);
  x = ad::leaky_relu(ad::linear(x, p["s1.collapse.w"], p["s1.collapse.b"]));
  return ad::broadcast_spatial(x, c.rows, c.cols);
}

// features: (N, H, W).
inline ad::Var stream2d(const BoundParams& p, ad::Var features) {
  const ArchConfig& c = p.params->config;
  model_detail::expect_shape(features.value(), Shape{c.feature_count, c.rows, c.cols},
                             "2D stream input");
  ad::Var x = features;
  for (std::size_t i = 0; i < c.layers2d; ++i)
    x = model_detail::conv_layer(p, "s2.conv" + std::to_string(i), x, 2);
  return x;
}

// Prediction frame (H, W) in original demand units. `history` is (W_in, H, W)
// in original units; the demand scale is applied on both sides.
inline ad::Var fairst_forward(const BoundParams& p, const Tensor& history,
                              const Tensor& series, const Tensor& features) {
  const ArchConfig& c = p.params->config;
  ad::Tape& tape = *p.vars.front().tape;
  model_detail::expect_shape(history, Shape{c.window, c.rows, c.cols}, "history");
  const double scale = p.params->demand_scale;
  require(scale > 0.0, ErrorKind::invalid_input, "demand scale must be positive");
  Tensor scaled = history.reshaped(Shape{1, c.window, c.rows, c.cols});
  scaled *= 1.0 / scale;
  const ad::Var s3 = stream3d(p, tape.constant(std::move(scaled)));
  const ad::Var s2 = stream2d(p, tape.constant(features));
  const ad::Var s1 = stream1d(p, tape.constant(series));
  const std::vector<ad::Var> parts{s3, s2, s1};
  ad::Var x = ad::concat(parts);
  const std::size_t head = c.fusion_widths.size();
  for (std::size_t i = 0; i <= head; ++i)
    x = model_detail::conv_layer(p, "head.conv" + std::to_string(i), x, 2, i < head);
  x = ad::reshape(x, Shape{c.rows, c.cols});
  return ad::scale(x, scale);
}

// Inference without gradient tracking.
inline Tensor predict_frame(const ModelParams& params, const Tensor& history,
                            const Tensor& series, const Tensor& features) {
  ad::Tape tape;
  const BoundParams bound = bind_params(tape, params, false);
  return fairst_forward(bound, history, series, features).value();
}

}  // namespace fairst
