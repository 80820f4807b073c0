// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_TEXTIO_HPP_
#define FVR_TEXTIO_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace fvr {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

}  // namespace fvr

#endif  // FVR_TEXTIO_HPP_
