#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctb::cli {

/// Runs one `ctb` invocation. Returns the process exit code; errors are
/// written to `err` as one JSON object per line.
int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

} // namespace ctb::cli
