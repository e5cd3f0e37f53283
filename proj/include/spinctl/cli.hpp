#pragma once

// spinctl {ops|optimize|simulate|squeeze|stats|wigner}
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Nothing is written
// unless every argument and config key validated.

#include <iosfwd>
#include <string>
#include <vector>

namespace spinctl {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace spinctl
