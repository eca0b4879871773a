// Copyright 2026 The Panoptic Toolkit Authors.
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

#ifndef PANOPTIC_ERROR_HPP_
#define PANOPTIC_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace panoptic {

/// Thrown on precondition violations, malformed inputs and I/O failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// One validation finding. `context` names the offending entity
/// ("segment 7", "expert car", "image 3"), `message` describes the problem.
struct Violation {
  std::string context;
  std::string message;
};

/// Result of a validate_* operation. Empty means the input is consistent.
struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  void add(std::string context, std::string message) {
    violations.push_back({std::move(context), std::move(message)});
  }

  std::string to_string() const {
    if (violations.empty()) return "ok";
    std::string out;
    for (const auto& v : violations) {
      out += v.context;
      out += ": ";
      out += v.message;
      out += '\n';
    }
    return out;
  }
};

}  // namespace panoptic

#endif  // PANOPTIC_ERROR_HPP_
