#pragma once

#include <string>
#include <vector>

namespace mfp::app {

/// Entry point of the `mfplan` tool. Returns the process exit code:
/// 0 success, 1 stage failure or failed verification, 2 configuration error.
int run(const std::vector<std::string>& args);

}  // namespace mfp::app
