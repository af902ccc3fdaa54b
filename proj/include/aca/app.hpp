#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aca::app {

/// Runs one CLI invocation. Returns the process exit code: 0 on success,
/// 1 on analysis errors (JSON error object on err), 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace aca::app
