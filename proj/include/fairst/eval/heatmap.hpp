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

// Heatmap export: a CSV of raw values (line r = grid row r, southmost first)
// and a binary 8-bit PGM drawn north-up.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/ingest/csv.hpp"
#include "fairst/tensor/archive.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

// Gray levels: value / max(frame) * 255, rounded half up; negatives map to 0.
inline std::vector<std::uint8_t> heatmap_pixels(const Tensor& frame) {
  require(frame.rank() == 2, ErrorKind::invalid_input, "heatmap frame must be 2D");
  require(frame.all_finite(), ErrorKind::invalid_input, "heatmap frame has non-finite values");
  const double top = frame.size() ? frame.max() : 0.0;
  std::vector<std::uint8_t> out(frame.size(), 0);
  if (!(top > 0.0)) return out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double v = std::max(0.0, frame[i]);
    out[i] = static_cast<std::uint8_t>(std::min(255.0, std::floor(v / top * 255.0 + 0.5)));
  }
  return out;
}

inline std::string frame_to_csv(const Tensor& frame) {
  std::string out;
  const std::size_t rows = frame.dim(0), cols = frame.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out += ',';
      out += csv::format_double(frame[r * cols + c]);
    }
    out += '\n';
  }
  return out;
}

inline Tensor frame_from_csv(const std::string& text) {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    require(rows == 0 || fields.size() == cols, ErrorKind::data, "frame CSV line ",
            rows + 1, ": expected ", cols, " values");
    cols = fields.size();
    for (const std::string& f : fields) {
      const auto v = csv::to_double(f);
      require(v.has_value(), ErrorKind::data, "frame CSV line ", rows + 1,
              ": malformed value '", f, "'");
      values.push_back(*v);
    }
    ++rows;
  }
  return Tensor(Shape{rows, cols}, std::move(values));
}

inline std::string frame_to_pgm(const Tensor& frame) {
  const std::vector<std::uint8_t> pixels = heatmap_pixels(frame);
  const std::size_t rows = frame.dim(0), cols = frame.dim(1);
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  for (std::size_t r = rows; r-- > 0;)
    for (std::size_t c = 0; c < cols; ++c)
      out += static_cast<char>(pixels[r * cols + c]);
  return out;
}

struct HeatmapFiles {
  std::filesystem::path csv;
  std::filesystem::path pgm;
};

// Writes <stem>.csv and <stem>.pgm. With `clamp_csv` negative values are also
// clamped to zero in the CSV.
inline HeatmapFiles export_heatmap(const Tensor& frame, const std::filesystem::path& stem,
                                   bool clamp_csv = false) {
  require(frame.rank() == 2 && frame.all_finite(), ErrorKind::invalid_input,
          "heatmap frame must be a finite 2D tensor");
  Tensor values = frame;
  if (clamp_csv)
    for (double& v : values.values()) v = std::max(0.0, v);
  HeatmapFiles files{stem, stem};
  files.csv += ".csv";
  files.pgm += ".pgm";
  write_file_atomic(files.csv, frame_to_csv(values));
  write_file_atomic(files.pgm, frame_to_pgm(frame));
  return files;
}

}  // namespace fairst
