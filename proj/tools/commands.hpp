// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_TOOLS_COMMANDS_HPP_
#define FVR_TOOLS_COMMANDS_HPP_

#include <iosfwd>

namespace fvr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses arguments and runs one subcommand. Tables go to files under the
/// output directory and to out; diagnostics go to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fvr::cli

#endif  // FVR_TOOLS_COMMANDS_HPP_
