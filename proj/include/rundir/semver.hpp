// Copyright 2026 The Rundir Authors
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

#include <cctype>
#include <compare>
#include <cstdint>
#include <string>

#include "rundir/errors.hpp"

namespace rundir {

/// Plain major.minor.patch version. Image tags and changelog entries are
/// ordered by this type; no prerelease or build-metadata fields.
struct SemVer {
  std::uint32_t major = 0;
  std::uint32_t minor = 0;
  std::uint32_t patch = 0;

  auto operator<=>(const SemVer&) const = default;

  std::string str() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." +
           std::to_string(patch);
  }
};

/// Parses "X.Y.Z" with decimal components and no extra characters.
inline SemVer parse_semver(const std::string& text) {
  SemVer v;
  std::uint32_t* parts[3] = {&v.major, &v.minor, &v.patch};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos]))) {
      fail(Errc::malformed_version, "'" + text + "' is not a semantic version");
    }
    std::uint64_t value = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      value = value * 10 + static_cast<std::uint64_t>(text[pos] - '0');
      if (value > 0xffffffffULL) {
        fail(Errc::malformed_version, "component overflow in '" + text + "'");
      }
      ++pos;
    }
    *parts[i] = static_cast<std::uint32_t>(value);
    if (i < 2) {
      if (pos >= text.size() || text[pos] != '.') {
        fail(Errc::malformed_version, "'" + text + "' is not a semantic version");
      }
      ++pos;
    }
  }
  if (pos != text.size()) {
    fail(Errc::malformed_version, "trailing characters in '" + text + "'");
  }
  return v;
}

}  // namespace rundir
