#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rkreco {

// Command-line front end. Returns the process exit code: 0 success,
// 1 usage problem, 2 data or numeric problem, 3 solver failed to converge
// (the best certified gap is printed).
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rkreco
