#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "rsflow/io.hpp"

namespace rsflow {

/// Malformed configuration; the message names the offending field or line.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Command { flow, singular, decompose, soliton, symmetry, sweep, laws };
std::string_view to_string(Command c);
Command command_from_string(std::string_view name);

struct RunConfig {
    Command command = Command::flow;
    InitialMetricSpec initial;
    std::optional<std::string> initial_file;  ///< metric snapshot JSON used instead of `initial`
    FlowParams flow;
    SurgeryParams surgery;
    IsometryElement isometry = IsometryElement::reflection();
    double symmetry_tol = 1e-9;
    PerturbationMode sweep_mode = PerturbationMode::profile_bump;
    double sweep_epsilon = 0.01;
    std::size_t sweep_samples = 10;
    std::uint64_t sweep_seed = 20240601;
    SolitonSuiteParams soliton;
    std::filesystem::path out_dir = "out";
    bool emit_plots = false;

    SweepConfig sweep_config() const;
};

/// Parses a configuration document.  Every key is optional; unknown keys are rejected.
/// Throws ConfigError.
RunConfig parse_config(const Json& doc, Command command);
/// Reads and parses a configuration file; JSON syntax errors are reported with line and column.
RunConfig load_config(const std::filesystem::path& path, Command command);

/// Full configuration with every default expanded; embedded in every artifact.
Json resolved_config(const RunConfig& cfg);

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitVerificationFailure = 2;

/// Executes the configured pipeline, writes its artifacts below cfg.out_dir and prints a short
/// summary to log.  Returns the process exit code.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace rsflow
