#pragma once

#include "scop/csv.hpp"
#include "scop/experiment.hpp"
#include "scop/results_io.hpp"
#include "scop/selfcheck.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scop::cli {

enum class Mode { Simulate, RunCsv, Sweep, Selfcheck };

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kData = 3,
    kNumerical = 4,
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunSpec {
    Mode mode = Mode::Simulate;
    ExperimentConfig config;
    /// run-csv inputs.
    ExternalPaths inputs;
    /// sweep grid.
    std::optional<SweepGrid> grid;
    /// "-" writes to stdout.
    std::filesystem::path out = "-";
    Format format = Format::Json;
    /// Print a summary table to stderr.
    bool summary = false;
    /// simulate: directory receiving the data and scored units of repetition 0.
    std::filesystem::path export_dir;
    std::uint64_t selfcheck_seed = kSelfcheckSeed;
};

/// Parses and validates a command line (argv[0] is the program name). Help
/// text is written to `help` and returned as std::nullopt. Throws UsageError
/// naming the offending flag.
std::optional<RunSpec> parse_args(int argc, const char* const* argv, std::ostream& help);
std::optional<RunSpec> parse_args(const std::vector<std::string>& args, std::ostream& help);

/// Executes a spec and returns the process exit code. Diagnostics go to `err`.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// parse_args + run with exit-code mapping for every error class.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace scop::cli
