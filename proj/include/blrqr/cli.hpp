// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: bench, dag, gen and verify subcommands.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace blrqr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // numeric failure or violated threshold
inline constexpr int kExitUsage = 2;

/// args excludes the program name.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blrqr
