#pragma once

#include <string>
#include <vector>

namespace agrlab {

// Runs one CLI invocation (verbs: gen, train, eval, trace). Returns the
// process exit code: 0 success, 2 configuration error, 3 data error,
// 4 numeric abort, 1 anything else.
int run_cli(const std::vector<std::string>& args);

}  // namespace agrlab
