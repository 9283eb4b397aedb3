#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rf::cli {

// Exit codes: 0 success, 1 failed command, 2 bad usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `error kind=<kind> message="<text>"` on one line, quotes and newlines escaped.
std::string error_line(const std::string& kind, const std::string& message);

}  // namespace rf::cli
