#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace automl {

/// Exit codes: 0 success, 1 validation or domain error, 2 usage error,
/// 3 backend or I/O error. Machine output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace automl
