#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace krt::cli {

// Exit codes: 0 success, 1 internal failure, 2 configuration error,
// 3 numerical failure. Failures print {"error": {...}} on err.
[[nodiscard]] int run(int argc, char** argv);
[[nodiscard]] int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace krt::cli
