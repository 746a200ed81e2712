#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fwmcli {

/// Runs the tool with `args` (args[0] is the program name). Returns the exit
/// code: 0 success, 1 computational failure, 2 usage or config error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fwmcli
