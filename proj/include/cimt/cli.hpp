// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace cimt::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some images failed; see the failures sidecar
inline constexpr int kExitConfig = 2;   // configuration or I/O error, nothing usable written

/// Entry point shared by the cimt_kit binary and the integration tests.
/// `args[0]` is the program name.
int run(const std::vector<std::string>& args);

}  // namespace cimt::cli
