#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace patho::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, internal_error = 1, validation_error = 2, infeasible_gate = 3 };

/// Entry point of the `patho` tool. Subcommands: audit, risk,
/// holonorm-verify, game, pareto, report. Every run writes canonical JSON
/// (plus CSV summaries) and a manifest.json into the output directory, which
/// defaults to $PATHO_OUT_DIR. Existing outputs are kept unless --force.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace patho::cli
