#pragma once

#include <exception>
#include <string>

namespace setinf {

// 0 ok, 2 configuration or domain error, 3 numerical failure, 4 I/O.
int exit_code_for(const std::exception& e);

// Parses argv, runs the subcommand and returns the process exit code.
// Diagnostics go to stderr; the run directory is printed on stdout.
int run_cli(int argc, char** argv);

// JSON schemas of the per-command configuration files.
std::string config_schemas();

}  // namespace setinf
