#pragma once

namespace deltaflow {

/// Entry point of the deltaflow command-line tool: parses argv, runs the
/// requested subcommand, and returns the process exit code. All diagnostics
/// go to stderr; result files are the only outputs and are byte-deterministic
/// for a fixed seed. Errors print one line, "error: <Code>: <message>".
int run_cli(int argc, const char* const* argv);

}  // namespace deltaflow
