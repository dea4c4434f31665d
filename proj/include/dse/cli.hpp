// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace dse {

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 config error, 2 data error, 3 internal error.
int cli_main(int argc, const char* const* argv);

// Convenience for in-process invocation; args exclude the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace dse
