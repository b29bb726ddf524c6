#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bdsde::cli {

/// Exit codes: 0 success, 1 validation or check failure, 2 usage or config error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Same, with args[0] as the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bdsde::cli
