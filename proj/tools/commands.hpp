#pragma once

#include <CLI11.hpp>

namespace simgrasp::cli {

/// Registers all subcommands on the given app. Returns the exit code holder:
/// run the app, then read *exit_code.
void setup(CLI::App& app, int* exit_code);

}  // namespace simgrasp::cli
