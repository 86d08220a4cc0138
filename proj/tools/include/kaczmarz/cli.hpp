#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kaczmarz {

/// Run the command-line front end. `args` excludes the program name.
/// Returns 0 on success, 1 on a runtime failure and 2 on a usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

} // namespace kaczmarz
