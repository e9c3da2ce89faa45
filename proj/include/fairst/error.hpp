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

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace fairst {

enum class ErrorKind {
  invalid_input,
  degenerate_group,
  io,
  config,
  data,
  numeric,
  undefined_correlation,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::degenerate_group: return "degenerate_group";
    case ErrorKind::io: return "io_error";
    case ErrorKind::config: return "config_error";
    case ErrorKind::data: return "data_error";
    case ErrorKind::numeric: return "numeric_failure";
    case ErrorKind::undefined_correlation: return "undefined_correlation";
  }
  return "unknown";
}

// Process exit status for an error kind: 2 config, 3 data, 4 numeric.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::numeric: return 4;
    default: return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(ErrorKind kind, Args&&... args) {
  throw Error(kind, detail::concat(std::forward<Args>(args)...));
}

template <typename... Args>
void require(bool condition, ErrorKind kind, Args&&... args) {
  if (!condition) fail(kind, std::forward<Args>(args)...);
}

}  // namespace fairst
