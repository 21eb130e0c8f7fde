#pragma once

#include <string>
#include <vector>

#include "bf/config.hpp"

namespace bf {

// Subcommand bodies, callable directly from tests.
void cmd_gen(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_sweep(const RunConfig& config);

// Full CLI: parses args (argv[0] excluded), dispatches, and maps errors to
// exit codes: 0 ok, 2 config, 3 ingestion, 4 state, 5 training, 1 other.
int run_cli(const std::vector<std::string>& args);

int exit_code_for(ErrorKind kind);

}  // namespace bf
