#pragma once

// Command implementations behind the `kflow` executable. Each returns the
// process exit status and writes human-readable output to `out` and
// diagnostics (prefixed with the error name) to `err`.

#include <cstddef>
#include <filesystem>
#include <iosfwd>

#include "kflow/acceptance.hpp"
#include "kflow/error.hpp"

namespace kflow {

enum ExitStatus : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitIo = 4,
};

int exit_status_for(ErrorCode code);

/// Worker cap for batch simulation: KFLOW_THREADS if set to a positive
/// integer, else the hardware concurrency.
unsigned batch_threads();

/// Runs one config file, or every *.json in a directory (concurrently, up to
/// `max_threads`). Writes series CSV, snapshots, report JSON and the resolved
/// config under the config's output directory.
int cmd_simulate(const std::filesystem::path& config, std::ostream& out, std::ostream& err,
                 unsigned max_threads = 1);

int cmd_analyze(const std::filesystem::path& samples, int k, std::ostream& out, std::ostream& err);

int cmd_render(const std::filesystem::path& snapshot, const std::filesystem::path& svg, std::ostream& out,
               std::ostream& err);

/// Runs the acceptance suite; exit 0 iff every criterion passes.
int cmd_verify(const AcceptanceOptions& options, std::ostream& out, std::ostream& err);

/// Writes example configs, initial snapshots and SVG renders to `dir`.
int cmd_gallery(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace kflow
