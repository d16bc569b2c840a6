#pragma once

#include <set>
#include <string>
#include <vector>

namespace trajcv::cli {

enum ExitCode { kOk = 0, kCheckFailure = 1, kConfigError = 2, kNumericError = 3 };

// Every "section.key" a config file may contain.
const std::set<std::string>& allowed_keys();

// Entry point shared by the executable and the tests; args excludes argv[0].
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace trajcv::cli
