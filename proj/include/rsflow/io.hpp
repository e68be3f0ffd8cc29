#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsflow/decomposition.hpp"
#include "rsflow/experiments.hpp"

namespace rsflow {

using Json = nlohmann::ordered_json;

/// "%.17g"; non-finite values become the strings "inf", "-inf" and "nan" in JSON.
std::string format_double(double v);

/// Serialises with every floating-point number in %.17g form, so equal inputs give
/// byte-identical files and every double round-trips exactly.  A negative indent gives a
/// single line without a trailing newline.
std::string dump_json(const Json& j, int indent = 2);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Metric snapshot {topology, time, x[], phi[], psi[]}.
Json to_json(const WarpedMetric& g);
/// Inverse of to_json(WarpedMetric).  Throws InvalidArgument on malformed input.
WarpedMetric metric_from_json(const Json& j);

Json to_json(const Termination& t);
Json to_json(const StepDiagnostics& d);
Json to_json(const SurgeryEvent& e);  ///< without the parent state
Json to_json(const ComponentClassification& c);
Json to_json(const DecompositionResult& d);
Json to_json(const DecompositionMapReport& r);
Json to_json(const AutomorphismReport& r);
Json to_json(const IsometryPreservationReport& r);
Json to_json(const FunctorLawReport& r);
Json to_json(const SweepReport& r);
Json to_json(const SolitonSuiteReport& r);

/// Diagnostics table with columns t, dt, max_k, min_psi, volume, F (empty when untracked),
/// preceded by a "# config=" line holding the resolved configuration.
std::string diagnostics_csv(const std::vector<StepDiagnostics>& rows, const Json& config);

/// Writes snapshots/NNNNN.json for every slice plus diagnostics.csv and trajectory.json.
void write_trajectory(const std::filesystem::path& dir, const FlowTrajectory& tr, const Json& config);

/// Event log with columns t, parent, children (';'-separated), neck_radius.
std::string events_csv(const SingularSpacetime& st, const Json& config);

/// Writes manifest.json {config, events[], genealogy, components[], slices[]}, one snapshot file
/// per slice and component under slices/, events.csv and per-component diagnostics CSVs.
void write_spacetime(const std::filesystem::path& dir, const SingularSpacetime& st, const Json& config);

}  // namespace rsflow
