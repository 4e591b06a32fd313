#pragma once

#include <exception>
#include <iosfwd>

namespace mbf {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,  // unclassified internal error
    kExitParse = 2,    // unreadable or malformed input
    kExitConfig = 3,   // invalid configuration or command line
    kExitNumeric = 4,  // numerical failure inside the pipeline
};

/// Runs the tool with the given arguments and returns the exit code.
/// Results go to files or `out`; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Exit code for the innermost cause of an exception.
int classify_exception(const std::exception& e);

}  // namespace mbf
