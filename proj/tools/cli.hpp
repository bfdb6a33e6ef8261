#pragma once

#include <string>
#include <vector>

namespace smcgen::cli {

// Exit codes.
constexpr int ok = 0;
constexpr int config_error = 2;
constexpr int horizon_failure = 3;
constexpr int invariant_violation = 4;

// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace smcgen::cli
