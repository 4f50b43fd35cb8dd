#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stochdrive::cli {

// Runs one command line (without the program name). Returns the process
// exit code: 0 success, 1 usage/configuration/validation error, 2 runtime
// failure.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace stochdrive::cli
