#pragma once

#include <iosfwd>

#include "beablesim/config.hpp"

namespace beablesim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;   // unparseable or inconsistent config
inline constexpr int kExitRuntimeError = 3;  // execution failure (e.g. ambiguous readout)
inline constexpr int kExitVerifyFailed = 4;  // coupling is not a von Neumann measurement

/// Runs the configured ensemble and writes trajectories.csv and summary.txt
/// (plus contingency.csv for measurement runs) under config.out_dir. Progress
/// notes go to `out`, failures to `err`. Returns an exit code.
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Checks the configured coupling and prints the pointer map (or the failure).
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);

} // namespace beablesim
