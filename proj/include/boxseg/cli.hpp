#pragma once

#include <string>
#include <vector>

namespace boxseg {

// Command-line surface: synth, train, eval, ablate, predict.
// Returns 0 on success, 2 on usage/validation errors, 1 on runtime failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace boxseg
