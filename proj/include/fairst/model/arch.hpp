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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/tensor/archive.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

struct ArchConfig {
  std::size_t window = 168;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t series_count = 0;   // M, 1D features
  std::size_t feature_count = 0;  // N, 2D features
  std::vector<std::size_t> filters3d{16, 32, 1};
  std::size_t kernel = 3;
  std::size_t width3d = 8;  // C3
  std::size_t width2d = 4;  // C2
  std::size_t width1d = 4;  // C1
  std::size_t layers1d = 1;  // same-padding 1D convs before the time collapse
  std::size_t layers2d = 2;
  std::vector<std::size_t> fusion_widths{8};  // hidden head widths; head ends in 1

  void validate() const {
    require(window >= 1 && rows >= 1 && cols >= 1, ErrorKind::invalid_input,
            "architecture needs window, rows and cols >= 1");
    require(series_count >= 1 && feature_count >= 1, ErrorKind::invalid_input,
            "architecture needs at least one 1D series and one 2D feature");
    require(!filters3d.empty() && filters3d.back() == 1, ErrorKind::invalid_input,
            "3D filter list must end with the single-filter reduction layer");
    for (std::size_t f : filters3d)
      require(f >= 1, ErrorKind::invalid_input, "3D filter counts must be positive");
    require(kernel % 2 == 1, ErrorKind::invalid_input, "kernel size ", kernel,
            " is not odd");
    require(width3d >= 1 && width2d >= 1 && width1d >= 1 && layers2d >= 1,
            ErrorKind::invalid_input, "stream widths and 2D layer count must be positive");
    for (std::size_t w : fusion_widths)
      require(w >= 1, ErrorKind::invalid_input, "fusion widths must be positive");
  }

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

// Learnable tensors in a fixed order, plus the demand scale applied around
// the network (inputs divided by it, outputs multiplied by it).
struct ModelParams {
  ArchConfig config;
  double demand_scale = 1.0;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    fail(ErrorKind::invalid_input, "model has no parameter '", name, "'");
  }
  const Tensor& at(const std::string& name) const { return tensors[index(name)]; }
  Tensor& at(const std::string& name) { return tensors[index(name)]; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const Tensor& t : tensors) n += t.size();
    return n;
  }
};

namespace detail {

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in;
  bool bias;
};

inline std::vector<ParamSpec> param_specs(const ArchConfig& c) {
  std::vector<ParamSpec> specs;
  const std::size_t k = c.kernel;
  auto conv = [&](const std::string& prefix, std::size_t out, std::size_t in,
                  std::size_t rank) {
    Shape shape{out, in};
    std::size_t fan_in = in;
    for (std::size_t r = 0; r < rank; ++r) {
      shape.push_back(k);
      fan_in *= k;
    }
    specs.push_back({prefix + ".w", shape, fan_in, false});
    specs.push_back({prefix + ".b", Shape{out}, fan_in, true});
  };
  std::size_t prev = 1;
  for (std::size_t i = 0; i < c.filters3d.size(); ++i) {
    conv("s3.conv" + std::to_string(i), c.filters3d[i], prev, 3);
    prev = c.filters3d[i];
  }
  conv("s3.merge", c.width3d, c.window, 2);

  prev = c.series_count;
  for (std::size_t i = 0; i < c.layers1d; ++i) {
    conv("s1.conv" + std::to_string(i), c.width1d, prev, 1);
    prev = c.width1d;
  }
  const std::size_t collapse_in = prev * c.window;
  specs.push_back({"s1.collapse.w", Shape{c.width1d, collapse_in}, collapse_in, false});
  specs.push_back({"s1.collapse.b", Shape{c.width1d}, collapse_in, true});

  prev = c.feature_count;
  for (std::size_t i = 0; i < c.layers2d; ++i) {
    conv("s2.conv" + std::to_string(i), c.width2d, prev, 2);
    prev = c.width2d;
  }

  prev = c.width3d + c.width2d + c.width1d;
  for (std::size_t i = 0; i < c.fusion_widths.size(); ++i) {
    conv("head.conv" + std::to_string(i), c.fusion_widths[i], prev, 2);
    prev = c.fusion_widths[i];
  }
  conv("head.conv" + std::to_string(c.fusion_widths.size()), 1, prev, 2);
  return specs;
}

}  // namespace detail

// Weights ~ U(-b, b) with b = sqrt(6 / fan_in); biases zero.
inline ModelParams init_params(const ArchConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams params;
  params.config = config;
  std::mt19937_64 rng(seed);
  for (const detail::ParamSpec& spec : detail::param_specs(config)) {
    Tensor t(spec.shape);
    if (!spec.bias) {
      const double bound = std::sqrt(6.0 / static_cast<double>(spec.fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : t.values()) v = dist(rng);
    }
    params.names.push_back(spec.name);
    params.tensors.push_back(std::move(t));
  }
  return params;
}

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<std::size_t> split_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoul(item));
  return out;
}

inline std::string hex_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

inline double parse_hex_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  require(res.ec == std::errc(), ErrorKind::data, "malformed hex float '", s, "'");
  return v;
}

}  // namespace detail

inline void write_arch(TensorArchive& archive, const ArchConfig& c) {
  archive.set_meta("arch.window", std::to_string(c.window));
  archive.set_meta("arch.rows", std::to_string(c.rows));
  archive.set_meta("arch.cols", std::to_string(c.cols));
  archive.set_meta("arch.series_count", std::to_string(c.series_count));
  archive.set_meta("arch.feature_count", std::to_string(c.feature_count));
  archive.set_meta("arch.filters3d", detail::join_sizes(c.filters3d));
  archive.set_meta("arch.kernel", std::to_string(c.kernel));
  archive.set_meta("arch.width3d", std::to_string(c.width3d));
  archive.set_meta("arch.width2d", std::to_string(c.width2d));
  archive.set_meta("arch.width1d", std::to_string(c.width1d));
  archive.set_meta("arch.layers1d", std::to_string(c.layers1d));
  archive.set_meta("arch.layers2d", std::to_string(c.layers2d));
  archive.set_meta("arch.fusion_widths", detail::join_sizes(c.fusion_widths));
}

inline ArchConfig read_arch(const TensorArchive& archive) {
  ArchConfig c;
  try {
    c.window = std::stoul(archive.meta("arch.window"));
    c.rows = std::stoul(archive.meta("arch.rows"));
    c.cols = std::stoul(archive.meta("arch.cols"));
    c.series_count = std::stoul(archive.meta("arch.series_count"));
    c.feature_count = std::stoul(archive.meta("arch.feature_count"));
    c.filters3d = detail::split_sizes(archive.meta("arch.filters3d"));
    c.kernel = std::stoul(archive.meta("arch.kernel"));
    c.width3d = std::stoul(archive.meta("arch.width3d"));
    c.width2d = std::stoul(archive.meta("arch.width2d"));
    c.width1d = std::stoul(archive.meta("arch.width1d"));
    c.layers1d = std::stoul(archive.meta("arch.layers1d"));
    c.layers2d = std::stoul(archive.meta("arch.layers2d"));
    c.fusion_widths = detail::split_sizes(archive.meta("arch.fusion_widths"));
  } catch (const std::logic_error&) {
    fail(ErrorKind::data, "checkpoint architecture metadata is malformed");
  }
  c.validate();
  return c;
}

inline TensorArchive to_archive(const ModelParams& params) {
  TensorArchive archive;
  archive.set_meta("kind", "fairst-checkpoint");
  write_arch(archive, params.config);
  archive.set_meta("demand_scale", detail::hex_double(params.demand_scale));
  for (std::size_t i = 0; i < params.names.size(); ++i)
    archive.put("param." + params.names[i], params.tensors[i]);
  return archive;
}

// Rebuilds parameters and checks every tensor against the stored architecture.
inline ModelParams from_archive(const TensorArchive& archive) {
  require(archive.has_meta("kind") && archive.meta("kind") == "fairst-checkpoint",
          ErrorKind::data, "archive is not a model checkpoint");
  ModelParams params;
  params.config = read_arch(archive);
  params.demand_scale = detail::parse_hex_double(archive.meta("demand_scale"));
  std::size_t expected = 0;
  for (const detail::ParamSpec& spec : detail::param_specs(params.config)) {
    const Tensor& t = archive.get("param." + spec.name);
    require(t.shape() == spec.shape, ErrorKind::data, "checkpoint tensor ",
            spec.name, " has shape ", shape_string(t.shape()), ", architecture needs ",
            shape_string(spec.shape));
    params.names.push_back(spec.name);
    params.tensors.push_back(t);
    ++expected;
  }
  std::size_t stored = 0;
  for (const auto& entry : archive.tensors())
    if (entry.first.rfind("param.", 0) == 0) ++stored;
  require(stored == expected, ErrorKind::data, "checkpoint has ", stored,
          " parameter tensors, architecture needs ", expected);
  return params;
}

inline void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  to_archive(params).save(path);
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
  return from_archive(TensorArchive::load(path));
}

}  // namespace fairst
