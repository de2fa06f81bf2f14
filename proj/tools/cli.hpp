#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace streamcnn::cli {

enum ExitCode : int { kOk = 0, kVerificationFailure = 1, kUsageError = 2 };

/// Runs the streamcnn command line with `args` (excluding the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace streamcnn::cli
