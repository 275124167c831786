#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blochdos/lattice.hpp"
#include "blochdos/potential.hpp"

namespace blochdos::cli {

enum class Command { Bands, Ids, Window, Fraction, VerifyDecay, VerifyGradient };

inline constexpr int kSchemaVersion = 1;

std::string_view command_name(Command command);
/// Throws ValidationError for unknown names.
Command parse_command(std::string_view name);

/// Reads a JSON config file. Throws ValidationError on I/O or syntax errors.
nlohmann::json load_config(const std::filesystem::path& path);

/// Validates a raw config for `command` and returns its canonical form: every
/// parameter present with defaults and derived cutoffs filled in, `command` set,
/// `output` and `workers` removed. Unknown keys and out-of-range values throw
/// ValidationError. Resolving a resolved config returns it unchanged.
nlohmann::json resolve_config(const nlohmann::json& raw, Command command);

/// Lattice and potential described by a (raw or resolved) config.
Lattice build_lattice(const nlohmann::json& config);
PotentialSpec build_potential(const nlohmann::json& config);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int workers = 1;
  /// Record wall-clock times; off by default so artifacts are byte-reproducible.
  bool timing = false;
};

struct RunResult {
  std::string summary;
  std::vector<std::filesystem::path> artifacts;
};

/// Executes a resolved config and writes the artifacts into options.out_dir.
/// Library errors propagate.
RunResult execute(Command command, const nlohmann::json& resolved, const RunOptions& options);

/// Exit status for a library error: 2 validation, 3 solver, 4 precondition, 1 otherwise.
int exit_code_for(const std::exception& error);

/// Full command-line entry point:
///   bloch-dos <command> --config <file> [--out <dir>] [--workers N] [--timing]
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blochdos::cli
