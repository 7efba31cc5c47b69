#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rrbias {

/// Runs the command line. `args` excludes the program name. Returns 0 on
/// success, 1 on a runtime or configuration error, 2 on a usage error.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_dispatch(int argc, char** argv);

}  // namespace rrbias
