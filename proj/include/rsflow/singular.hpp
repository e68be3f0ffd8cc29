#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsflow/flow.hpp"

namespace rsflow {

struct SurgeryParams {
    /// Trigger radius; unset means 0.02 * initial psi_max.
    std::optional<double> rho_surg;
    double excision_margin = 2.0;
    double cap_blend = 3.0;
    double cylindricity_tol = 0.2;
    /// A closed component is resampled by arclength once its shortest grid segment falls below
    /// this fraction of the mean segment.  Zero disables resampling.
    double regrid_ratio = 0.5;
    /// Resolution target after surgery and at each resampling: grid spacing at most
    /// 1/(nodes_per_radius * sqrt(max|K|)).
    double nodes_per_radius = 10.0;

    static constexpr double kDefaultRhoRatio = 0.02;

    /// Copy with rho_surg filled in from the initial metric.
    SurgeryParams resolved(const WarpedMetric& initial) const;
    void validate(double psi_floor) const;
    NeckCriteria criteria() const;
};

struct SurgeryResult {
    std::vector<WarpedMetric> children;
    double s_lo = 0.0;  ///< excised arclength interval in the parent
    double s_hi = 0.0;
    bool dropped_left = false;   ///< a side too short to cap was discarded
    bool dropped_right = false;
};

std::optional<NeckLocation> detect_neck(const WarpedMetric& g, const SurgeryParams& sp);

/// Excises [s_min - m psi_min, s_min + m psi_min], caps each remaining side with a quarter-sine
/// cap blended over cap_blend boundary radii, and resamples the pieces onto uniform grids.
/// Throws MalformedNeck when no side can be capped.
SurgeryResult perform_surgery(const WarpedMetric& g, const NeckLocation& neck, const SurgeryParams& sp);

/// Resamples a closed metric onto n uniform nodes in arclength (phi constant).  Reflection
/// equivariant bit for bit on uniform grids.
WarpedMetric resample_by_arclength(const WarpedMetric& g, std::size_t n);

/// Shortest grid segment in arclength divided by the mean one.
double grid_compression(const WarpedMetric& g);

struct SurgeryEvent {
    double time = 0.0;
    std::size_t parent = 0;
    std::pair<double, double> neck_interval{0.0, 0.0};
    double neck_radius = 0.0;
    std::size_t neck_node = 0;
    std::vector<std::size_t> children;
    double volume_before = 0.0;
    double volume_after = 0.0;
    double max_child_curvature = 0.0;
    WarpedMetric parent_state;  ///< the parent at the moment of surgery

    friend bool operator==(const SurgeryEvent&, const SurgeryEvent&) = default;
};

struct ComponentRecord {
    std::size_t id = 0;
    std::optional<std::size_t> parent;
    double birth_time = 0.0;
    Termination termination;
    std::vector<StepDiagnostics> diagnostics;
    double psi_ref = 1.0;
    std::size_t steps = 0;
    bool unresolved = false;
    std::vector<double> regrid_times;  ///< times at which the component was resampled by arclength

    friend bool operator==(const ComponentRecord&, const ComponentRecord&) = default;
};

struct SpacetimeSlice {
    double time = 0.0;
    std::vector<std::pair<std::size_t, WarpedMetric>> components;  ///< ordered by component id

    const WarpedMetric* find(std::size_t id) const;
    friend bool operator==(const SpacetimeSlice&, const SpacetimeSlice&) = default;
};

struct SingularSpacetime {
    std::vector<SpacetimeSlice> slices;
    std::vector<SurgeryEvent> events;
    std::vector<ComponentRecord> components;  ///< indexed by id; id 0 is the root
    FlowParams flow;
    SurgeryParams surgery;

    /// component id -> child ids
    std::vector<std::vector<std::size_t>> genealogy() const;
    std::vector<std::size_t> leaves() const;
    const SurgeryEvent* event_of(std::size_t parent) const;
    /// Slices of one component assembled as a trajectory.
    FlowTrajectory component_trajectory(std::size_t id) const;
    /// Descriptions of violated spacetime invariants (empty when consistent).
    std::vector<std::string> check_invariants(double curvature_constant = 10.0) const;

    friend bool operator==(const SingularSpacetime& a, const SingularSpacetime& b);
};

SingularSpacetime run_singular_flow(const WarpedMetric& initial, const FlowParams& fp, const SurgeryParams& sp);

/// Component correspondence between two spacetimes induced by an isometry of their roots.
struct SpacetimeCorrespondence {
    bool ok = false;
    std::vector<std::pair<std::size_t, std::size_t>> components;  ///< (id in first, id in second)
    std::string failure;
};

SpacetimeCorrespondence induced_correspondence(const SingularSpacetime& st1, const SingularSpacetime& st2,
                                               IsometryElement a, double tol = 1e-9);

struct AutomorphismReport {
    bool is_automorphism = false;
    double max_drift = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> permutation;
    std::string failure;
};

/// Checks slice by slice that a (with the induced component permutation) maps st to itself.
AutomorphismReport spacetime_isometry_check(const SingularSpacetime& st, IsometryElement a, double tol = 1e-9);

}  // namespace rsflow
