// Copyright 2026 the occ-learn authors
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

#include <optional>
#include <string_view>

namespace occ {

enum class Algorithm { dpmeans, ofl, bpmeans };

constexpr std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::dpmeans: return "dpmeans";
    case Algorithm::ofl: return "ofl";
    case Algorithm::bpmeans: return "bpmeans";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  if (s == "dpmeans") return Algorithm::dpmeans;
  if (s == "ofl") return Algorithm::ofl;
  if (s == "bpmeans") return Algorithm::bpmeans;
  return std::nullopt;
}

}  // namespace occ
