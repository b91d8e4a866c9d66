// SPDX-License-Identifier: Apache-2.0
//
// Deterministic number formatting for CSV/JSON emission: shortest
// representation that round-trips to the same double.

#pragma once

#include <charconv>
#include <string>

namespace mcan {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace mcan
