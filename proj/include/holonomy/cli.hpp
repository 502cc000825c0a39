#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace holonomy {

/// Command-line entry point; `args` excludes the program name. Returns 0 when the
/// experiment passes, 1 when it fails and 2 on usage or configuration errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace holonomy
