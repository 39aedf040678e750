// cli.hpp — command-line front door. The entire driver lives in the library
// so tests can invoke the exact surfaces (arguments, report bytes, exit
// codes) without spawning processes.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace elkh::cli {

// Exit codes: 10 satisfiable / not-valid, 20 unsatisfiable / valid,
// 2 usage or parse errors, 3 node budget exhausted, 1 agreement violations
// (fuzz) or internal errors, 0 otherwise.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace elkh::cli
