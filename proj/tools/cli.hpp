#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sympfold/common.hpp"

namespace sympfold::cli {

/// 0 ok, 2 input, 3 data insufficiency, 4 search failure, 5 certification failure.
int exit_code(ErrorCode code);

/// Runs one command line (args exclude the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sympfold::cli
