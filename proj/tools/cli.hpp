#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace protofsm::cli {

enum ExitCode { ok = 0, usage = 1, validation = 2, bound_exceeded = 3 };

/// Runs the command line `args` (program name excluded). Summaries go to
/// `out`, diagnostics to `err`; files land under --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace protofsm::cli
