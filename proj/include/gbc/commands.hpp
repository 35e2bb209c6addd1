#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gbc {

/// Runs one `gbc` command. `args` excludes the program name. Reports go to
/// `out` and the output directory; failures print a JSON error object to
/// `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gbc
