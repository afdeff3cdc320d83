#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phirl {

// Exit codes: 0 success, 1 input or validation error, 2 internal error.
// args excludes the program name. Reports go to out unless --out is given.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phirl
