#pragma once

#include <string>
#include <vector>

namespace d2stoch::cli {

enum ExitCode { kOk = 0, kVerificationFailure = 1, kUsageError = 2 };

// args exclude the program name.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace d2stoch::cli
