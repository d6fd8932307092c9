// Subcommand orchestration: run a configured job and write its artifacts
// (metadata record, diagnostics and error CSVs, VTK snapshots, plot data).

#ifndef HFV_RUN_COMMAND_HPP
#define HFV_RUN_COMMAND_HPP

#include "hfv/config.hpp"

#include <iosfwd>
#include <string>

namespace hfv {

struct CommandResult {
  int exit_code = 0;
  std::string message;
};

/// Full transient run (or configuration+mesh validation only when dry_run).
/// Artifacts land under config.output.dir.
CommandResult run_command(const RunConfig& config, bool dry_run, std::ostream& log);

/// Multi-level refinement study; level ell halves the base mesh spacing and
/// doubles the step count ell times.
CommandResult convergence_command(const RunConfig& config, std::ostream& log);

/// Generates (and optionally refines) the configured mesh, writes it in the
/// plain-text format plus an optional VTK view, and prints the validation
/// report.
CommandResult mesh_gen_command(const RunConfig& config, std::ostream& log);

/// Validates configuration, mesh and problem hypotheses without solving.
CommandResult check_command(const RunConfig& config, std::ostream& log);

}  // namespace hfv

#endif
