#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace finedesign::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 1,
    kIo = 2,
    kNumerical = 3,
};

/// Runs one subcommand. `args` excludes the program name. Data goes to files
/// or `out`; diagnostics and usage text go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace finedesign::cli
