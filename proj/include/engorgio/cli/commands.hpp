#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace engorgio::cli {

// Entry point behind the engorgio executable. args[0] is the program name.
// Returns 0 iff every requested artifact was written; errors are reported on
// err as one line naming the offending field or file.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace engorgio::cli
