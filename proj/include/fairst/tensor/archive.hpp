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

// Named-tensor container used for checkpoints and prepared datasets.
//
// Text layout, version 1:
//
//   fairst-archive 1
//   meta <key> <value to end of line>        (zero or more)
//   tensor <name> <rank> <d0> ... <d(rank-1)>
//   <row-major values as hex floats, space separated, single line>
//   ...
//   end
//
// Hex floats make the round trip bit-exact. Keys and names contain no
// whitespace.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst {

inline constexpr int kArchiveVersion = 1;

class TensorArchive {
 public:
  void set_meta(const std::string& key, std::string value) {
    check_token(key);
    require(value.find('\n') == std::string::npos, ErrorKind::invalid_input,
            "archive meta value for ", key, " contains a newline");
    meta_[key] = std::move(value);
  }

  bool has_meta(const std::string& key) const { return meta_.count(key) > 0; }

  const std::string& meta(const std::string& key) const {
    auto it = meta_.find(key);
    require(it != meta_.end(), ErrorKind::data, "archive has no meta key '",
            key, "'");
    return it->second;
  }

  const std::map<std::string, std::string>& all_meta() const { return meta_; }

  void put(const std::string& name, Tensor tensor) {
    check_token(name);
    for (auto& entry : tensors_) {
      if (entry.first == name) {
        entry.second = std::move(tensor);
        return;
      }
    }
    tensors_.emplace_back(name, std::move(tensor));
  }

  bool contains(const std::string& name) const {
    for (const auto& entry : tensors_)
      if (entry.first == name) return true;
    return false;
  }

  const Tensor& get(const std::string& name) const {
    for (const auto& entry : tensors_)
      if (entry.first == name) return entry.second;
    fail(ErrorKind::data, "archive has no tensor '", name, "'");
  }

  const std::vector<std::pair<std::string, Tensor>>& tensors() const {
    return tensors_;
  }

  std::string serialize() const {
    std::string out = "fairst-archive " + std::to_string(kArchiveVersion) + "\n";
    for (const auto& [key, value] : meta_) out += "meta " + key + " " + value + "\n";
    char buf[64];
    for (const auto& [name, tensor] : tensors_) {
      out += "tensor " + name + " " + std::to_string(tensor.rank());
      for (std::size_t d : tensor.shape()) out += " " + std::to_string(d);
      out += "\n";
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        auto res = std::to_chars(buf, buf + sizeof(buf), tensor[i],
                                 std::chars_format::hex);
        if (i) out += ' ';
        out.append(buf, res.ptr);
      }
      out += "\n";
    }
    out += "end\n";
    return out;
  }

  static TensorArchive parse(const std::string& text) {
    TensorArchive archive;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto next = [&](std::string& dst) {
      ++line_no;
      return static_cast<bool>(std::getline(in, dst));
    };
    require(next(line), ErrorKind::data, "archive is empty");
    {
      std::istringstream header(line);
      std::string magic;
      int version = 0;
      header >> magic >> version;
      require(magic == "fairst-archive", ErrorKind::data,
              "line 1: not a fairst archive");
      require(version == kArchiveVersion, ErrorKind::data,
              "line 1: unsupported archive version ", version);
    }
    bool ended = false;
    while (next(line)) {
      if (line == "end") {
        ended = true;
        break;
      }
      if (line.rfind("meta ", 0) == 0) {
        const std::size_t sep = line.find(' ', 5);
        require(sep != std::string::npos, ErrorKind::data, "line ", line_no,
                ": malformed meta entry");
        archive.meta_[line.substr(5, sep - 5)] = line.substr(sep + 1);
        continue;
      }
      require(line.rfind("tensor ", 0) == 0, ErrorKind::data, "line ", line_no,
              ": unexpected record '", line.substr(0, 32), "'");
      std::istringstream header(line.substr(7));
      std::string name;
      std::size_t rank = 0;
      header >> name >> rank;
      require(!header.fail() && rank <= Tensor::kMaxRank, ErrorKind::data,
              "line ", line_no, ": malformed tensor header");
      Shape shape(rank);
      for (std::size_t& d : shape) header >> d;
      require(!header.fail(), ErrorKind::data, "line ", line_no,
              ": malformed tensor shape");
      require(next(line), ErrorKind::data, "line ", line_no,
              ": missing values for tensor ", name);
      std::vector<double> values;
      values.reserve(shape_size(shape));
      const char* p = line.data();
      const char* end = line.data() + line.size();
      while (p < end) {
        while (p < end && *p == ' ') ++p;
        if (p >= end) break;
        double v = 0.0;
        auto res = std::from_chars(p, end, v, std::chars_format::hex);
        require(res.ec == std::errc(), ErrorKind::data, "line ", line_no,
                ": malformed value in tensor ", name);
        values.push_back(v);
        p = res.ptr;
      }
      require(values.size() == shape_size(shape), ErrorKind::data, "line ",
              line_no, ": tensor ", name, " has ", values.size(),
              " values, shape needs ", shape_size(shape));
      archive.tensors_.emplace_back(name, Tensor(shape, std::move(values)));
    }
    require(ended, ErrorKind::data, "archive truncated: missing 'end'");
    return archive;
  }

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

 private:
  static void check_token(const std::string& token) {
    require(!token.empty() && token.find_first_of(" \t\n") == std::string::npos,
            ErrorKind::invalid_input, "archive key '", token,
            "' must be non-empty without whitespace");
  }

  std::map<std::string, std::string> meta_;
  std::vector<std::pair<std::string, Tensor>> tensors_;
};

// Writes via a temporary sibling file and rename so readers never observe a
// partially written artifact.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open ", tmp.string(),
            " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    require(static_cast<bool>(out), ErrorKind::io, "failed writing ",
            tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::io, "cannot move ", tmp.string(), " to ",
          path.string(), ": ", ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open ", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void TensorArchive::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

inline TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

}  // namespace fairst
