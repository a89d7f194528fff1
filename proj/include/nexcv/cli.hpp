#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nexcv {

// Exit codes: 0 success, 1 evaluation ran but a validation check failed,
// 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

// args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nexcv
