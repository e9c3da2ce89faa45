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

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "fairst/ingest/time.hpp"
#include "fairst/model/arch.hpp"
#include "fairst/model/fairst.hpp"
#include "fairst/model/ha.hpp"
#include "oracles.hpp"

namespace fairst {
namespace {

ArchConfig small_arch(std::size_t window, std::size_t rows, std::size_t cols) {
  ArchConfig c;
  c.window = window;
  c.rows = rows;
  c.cols = cols;
  c.series_count = 2;
  c.feature_count = 3;
  c.filters3d = {4, 1};
  c.width3d = 3;
  c.width2d = 2;
  c.width1d = 2;
  c.fusion_widths = {4};
  return c;
}

// Parameter total counted layer by layer from the architecture description.
std::size_t expected_parameters(const ArchConfig& c) {
  const std::size_t k = c.kernel, k2 = k * k, k3 = k * k * k;
  std::size_t n = 0, prev = 1;
  for (std::size_t f : c.filters3d) {
    n += f * prev * k3 + f;
    prev = f;
  }
  n += c.width3d * c.window * k2 + c.width3d;
  prev = c.series_count;
  for (std::size_t i = 0; i < c.layers1d; ++i) {
    n += c.width1d * prev * k + c.width1d;
    prev = c.width1d;
  }
  n += c.width1d * prev * c.window + c.width1d;
  prev = c.feature_count;
  for (std::size_t i = 0; i < c.layers2d; ++i) {
    n += c.width2d * prev * k2 + c.width2d;
    prev = c.width2d;
  }
  prev = c.width3d + c.width2d + c.width1d;
  for (std::size_t w : c.fusion_widths) {
    n += w * prev * k2 + w;
    prev = w;
  }
  return n + prev * k2 + 1;
}

struct Inputs {
  Tensor history, series, features;
};

Inputs random_inputs(const ArchConfig& c, std::mt19937_64& rng) {
  Tensor h = oracle::random_tensor({c.window, c.rows, c.cols}, rng, 5.0);
  for (double& v : h.values()) v = std::fabs(v);
  return {h, oracle::random_tensor({c.series_count, c.window}, rng),
          oracle::random_tensor({c.feature_count, c.rows, c.cols}, rng)};
}

TEST(Model, ParameterCountMatchesLayerWalk) {
  ArchConfig c = small_arch(12, 4, 5);
  EXPECT_EQ(init_params(c, 1).scalar_count(), expected_parameters(c));
  ArchConfig d = small_arch(168, 8, 8);
  d.filters3d = {16, 32, 1};
  d.width3d = 8;
  d.width2d = 4;
  d.width1d = 4;
  d.fusion_widths = {8};
  d.kernel = 3;
  EXPECT_EQ(init_params(d, 1).scalar_count(), expected_parameters(d));
}

TEST(Model, OutputShapeForEveryConfiguration) {
  std::mt19937_64 rng(2);
  for (std::size_t window : {1, 3, 12})
    for (std::size_t kernel : {1, 3, 5})
      for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{1, 1}, {4, 4}, {3, 7}}) {
        ArchConfig c = small_arch(window, rows, cols);
        c.kernel = kernel;
        c.layers1d = window % 2;
        c.fusion_widths = kernel == 5 ? std::vector<std::size_t>{} : std::vector<std::size_t>{3, 2};
        ModelParams p = init_params(c, 3);
        p.demand_scale = 2.0;
        const Inputs in = random_inputs(c, rng);
        const Tensor y = predict_frame(p, in.history, in.series, in.features);
        EXPECT_EQ(y.shape(), (Shape{rows, cols}));
        for (double v : y.values()) EXPECT_TRUE(std::isfinite(v));
      }
}

TEST(Model, RejectsInvalidArchitectures) {
  ArchConfig c = small_arch(12, 4, 4);
  c.kernel = 2;
  EXPECT_THROW(init_params(c, 0), Error);
  c = small_arch(12, 4, 4);
  c.filters3d = {4, 2};
  EXPECT_THROW(init_params(c, 0), Error);
  c = small_arch(12, 4, 4);
  c.series_count = 0;
  EXPECT_THROW(init_params(c, 0), Error);
  const ModelParams p = init_params(small_arch(12, 4, 4), 0);
  EXPECT_THROW(predict_frame(p, Tensor(Shape{11, 4, 4}), Tensor(Shape{2, 12}),
                             Tensor(Shape{3, 4, 4})),
               Error);
}

TEST(Model, DemandScaleIsEquivariant) {
  // Scaling the history and the demand scale together scales the forecast.
  std::mt19937_64 rng(4);
  const ArchConfig c = small_arch(6, 3, 3);
  ModelParams p = init_params(c, 5);
  p.demand_scale = 3.0;
  const Inputs in = random_inputs(c, rng);
  const Tensor base = predict_frame(p, in.history, in.series, in.features);
  p.demand_scale = 12.0;
  Tensor h = in.history;
  h *= 4.0;
  const Tensor scaled = predict_frame(p, h, in.series, in.features);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(scaled[i], 4.0 * base[i], 1e-12);
}

TEST(Model, SeedsInitializeDeterministically) {
  const ArchConfig c = small_arch(6, 3, 3);
  const ModelParams a = init_params(c, 9), b = init_params(c, 9), d = init_params(c, 10);
  EXPECT_EQ(a.tensors, b.tensors);
  EXPECT_NE(a.tensors, d.tensors);
  for (std::size_t i = 0; i < a.names.size(); ++i)
    if (a.names[i].ends_with(".b")) EXPECT_EQ(a.tensors[i], Tensor(a.tensors[i].shape()));
}

TEST(Model, CheckpointRoundTripIsExact) {
  std::mt19937_64 rng(6);
  const ArchConfig c = small_arch(6, 3, 4);
  ModelParams p = init_params(c, 11);
  p.demand_scale = 7.25;
  const auto path = std::filesystem::temp_directory_path() / "fairst_model_test" / "ck.fst";
  save_checkpoint(p, path);
  const ModelParams q = load_checkpoint(path);
  EXPECT_EQ(q.config, p.config);
  EXPECT_EQ(q.names, p.names);
  EXPECT_EQ(q.tensors, p.tensors);
  EXPECT_EQ(q.demand_scale, p.demand_scale);
  const Inputs in = random_inputs(c, rng);
  EXPECT_EQ(predict_frame(p, in.history, in.series, in.features),
            predict_frame(q, in.history, in.series, in.features));
  std::filesystem::remove_all(path.parent_path());
}

TEST(HistoricalAverage, MeansMatchingHours) {
  const UtcSeconds start = *parse_rfc3339("2018-01-01T00:00:00Z");
  DemandTensor d;
  d.start_time = start;
  d.values = Tensor(Shape{3 * 168, 1, 2});
  // Same weekday and hour in weeks 0, 1 and 2.
  for (std::size_t w = 0; w < 3; ++w) {
    d.values[(w * 168 + 10) * 2] = 3.0 * (w + 1);
    d.values[(w * 168 + 10) * 2 + 1] = 1.0;
  }
  const Tensor ha = ha_predict(d, start + (3 * 168 + 10) * 3600);
  EXPECT_DOUBLE_EQ(ha[0], 6.0);
  EXPECT_DOUBLE_EQ(ha[1], 1.0);
  // Only frames strictly before the target contribute.
  EXPECT_DOUBLE_EQ(ha_predict(d, start + (168 + 10) * 3600)[0], 3.0);
  EXPECT_THROW(ha_predict(d, start + 10 * 3600), Error);
}

}  // namespace
}  // namespace fairst
