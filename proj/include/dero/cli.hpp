#pragma once

#include <string>
#include <vector>

namespace dero {

// Entry point for the dero command-line tool (sim | run | eval subcommands).
// Returns a process exit code; errors are printed rather than thrown.
int cli_main(const std::vector<std::string>& args);

}  // namespace dero
