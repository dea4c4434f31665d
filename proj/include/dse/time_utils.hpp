// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace dse {

// UTC instant with microsecond resolution.
struct Timestamp {
  std::int64_t micros = 0;  // since the Unix epoch

  auto operator<=>(const Timestamp&) const = default;
};

// Parses "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)". Throws ParseError.
Timestamp parse_rfc3339(std::string_view text);

// Canonical form: UTC with 'Z' suffix, 6-digit fraction only when nonzero.
std::string format_rfc3339(Timestamp t);

}  // namespace dse
