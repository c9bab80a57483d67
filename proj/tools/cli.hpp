// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arguagent::cli {

/// Runs the command line `args` (args[0] is the program name). Exit codes:
/// 0 success, 1 domain or I/O error, 2 usage error. Errors are written to
/// `err` as one line of JSON.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace arguagent::cli
