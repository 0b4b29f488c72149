#pragma once

#include <string>
#include <vector>

namespace bivboost::cli {

// Command-line entry point: fit, predict, score, simulate, effects, freqs.
// Errors print a single "ERROR: ..." line to stderr and return 1.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace bivboost::cli
