#pragma once

#include <string>
#include <vector>

namespace spgadmm::cli {

enum ExitCode : int {
  kOk = 0,
  kMaxIters = 1,
  kUsage = 2,
  kSlackViolation = 3,
};

// args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

std::vector<std::string> trace_columns(bool certify);

}  // namespace spgadmm::cli
