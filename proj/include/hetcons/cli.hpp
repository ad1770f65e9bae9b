#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hetcons::cli {

/// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;
inline constexpr int kNumericFailure = 2;

/// Runs one subcommand. `args` excludes the program name. Errors are
/// reported as a single JSON object on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hetcons::cli
