#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsflow/singular.hpp"

namespace rsflow {

enum class ComponentTag { extinct_round, converged_steady, unresolved, unsupported_geometry };
std::string_view to_string(ComponentTag t);

struct ComponentClassification {
    ComponentTag tag = ComponentTag::unresolved;
    Topology topology = Topology::closed_interval_with_poles;
    TerminationKind termination = TerminationKind::unresolved;
    std::optional<double> extinction_time;
    double roundness = 0.0;                ///< final K_max/K_min
    std::vector<double> roundness_trend;   ///< last (up to) 10 evaluated states, oldest first
    std::optional<double> fitted_lambda;   ///< converged runs only
    std::optional<double> soliton_residual;
    std::string reason;

    friend bool operator==(const ComponentClassification&, const ComponentClassification&) = default;
};

inline constexpr double kRoundnessThreshold = 1.05;
inline constexpr std::size_t kRoundnessWindow = 10;

/// Classifies a terminated trajectory.  Uses the per-step diagnostics and the final state only,
/// so the result does not depend on the snapshot stride.
ComponentClassification classify_component(const FlowTrajectory& trajectory);

/// Signature token of one classified component, e.g. "S3" or "S3[unresolved]".
std::string signature_token(const ComponentClassification& c);

struct DecompositionResult {
    std::vector<std::pair<std::size_t, ComponentClassification>> components;  ///< leaves by id
    std::string signature;
    std::size_t event_count = 0;
    std::size_t unresolved_count = 0;

    friend bool operator==(const DecompositionResult&, const DecompositionResult&) = default;
};

DecompositionResult asymptotic_decomposition(const SingularSpacetime& st);

struct DecompositionMapReport {
    bool ok = false;
    std::vector<std::pair<std::size_t, std::size_t>> leaves;  ///< (leaf in st1, leaf in st2)
    double max_final_drift = 0.0;  ///< metric_distance between a-images of final leaf states
    std::string failure;
};

/// Image of an isometry under the decomposition: the induced leaf correspondence, checked to
/// preserve classifications and final metrics.
DecompositionMapReport decomposition_map(const SingularSpacetime& st1, const SingularSpacetime& st2,
                                         IsometryElement a, double tol = 1e-9);

}  // namespace rsflow
