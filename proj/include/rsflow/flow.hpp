#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsflow/geometry.hpp"

namespace rsflow {

enum class Scheme { explicit_rk2, semi_implicit };
std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);

struct FlowParams {
    double cfl = 0.25;
    double dt_max = 1e-2;
    double t_max = 1.0;
    std::size_t snapshot_stride = 100;
    Scheme scheme = Scheme::explicit_rk2;
    /// extinction when max interior psi < extinction_ratio * initial psi_max
    double extinction_ratio = 1e-3;
    /// converged when metric_distance between successive snapshots per unit time drops below this (0 disables)
    double conv_tol = 0.0;
    double pole_tol = kDefaultPoleTol;

    void validate() const;
};

/// Cylindricity test used to recognise a neck.
struct NeckCriteria {
    double rho = 0.02;               ///< trigger radius (absolute)
    double cylindricity_tol = 0.2;   ///< max |k1|/k2 inside the window
    double slope_tol = 0.2;          ///< max |psi_s| inside the window
    double window_half_width = 1.0;  ///< window is +-window_half_width*psi_min in arclength
};

struct NeckLocation {
    std::size_t node = 0;
    double s = 0.0;        ///< arclength position from node 0
    double psi_min = 0.0;

    friend bool operator==(const NeckLocation&, const NeckLocation&) = default;
};

/// Every interior local minimum of psi that passes the cylindricity test, ordered by position.
std::vector<NeckLocation> find_necks(const WarpedMetric& g, const CurvatureField& c, const ProfileDerivatives& d,
                                     const NeckCriteria& crit);
/// The global interior minimum of psi (leftmost on ties), if it passes the cylindricity test.
std::optional<NeckLocation> find_neck(const WarpedMetric& g, const CurvatureField& c, const ProfileDerivatives& d,
                                      const NeckCriteria& crit);
std::optional<NeckLocation> find_neck(const WarpedMetric& g, const NeckCriteria& crit);

struct RicciRhs {
    std::vector<double> dphi;
    std::vector<double> dpsi;
};

/// Pure Ricci flow dg/dt = -2 Ric in profile form:
///   dpsi/dt = psi_ss - (1 - psi_s^2)/psi,   dphi/dt = 2 phi psi_ss/psi,
/// with dpsi/dt = 0 and dphi/dt = -2 phi k_pole at the poles.
RicciRhs ricci_rhs(const WarpedMetric& g, std::optional<double> psi_floor = std::nullopt);
RicciRhs ricci_rhs(const WarpedMetric& g, const CurvatureField& c);

/// Reference metric of the Ricci-DeTurck gauge together with its coordinate derivatives.
struct GaugeBackground {
    std::vector<double> phi, psi, phi_x, psi_x;
};
GaugeBackground make_gauge_background(const WarpedMetric& g);

/// Radial component xi of the DeTurck vector field W = xi d/dx relative to the background;
/// zero at poles.
std::vector<double> deturck_field(const WarpedMetric& g, const ProfileDerivatives& d, const GaugeBackground& bg);

/// Right-hand side actually integrated: ricci_rhs plus the Lie derivative of g along W.
/// The added term is a reparametrisation of x and leaves the geometry unchanged.
struct GaugedRhs {
    RicciRhs rhs;
    CurvatureField curvature;
    ProfileDerivatives derivatives;
};
GaugedRhs gauged_rhs(const WarpedMetric& g, const GaugeBackground& bg, double psi_floor);

/// Largest stable step: min(dt_max, cfl/max|K|, cfl * ds_min^2) (twice the last term for semi_implicit).
double stable_dt(const WarpedMetric& g, const CurvatureField& c, const FlowParams& p);

/// One time step of size dt; returns nothing if the result violates a metric invariant.
std::optional<WarpedMetric> try_step(const WarpedMetric& g, double dt, const FlowParams& p, const GaugeBackground& bg,
                                     double psi_floor, const GaugedRhs* first_stage = nullptr);

/// One step with the stable dt, halving up to 20 times on invariant violations.
/// The gauge background defaults to g itself.  Throws SingularBreakdown.
WarpedMetric step(const WarpedMetric& g, const FlowParams& p);
WarpedMetric step(const WarpedMetric& g, const FlowParams& p, const GaugeBackground& bg, double psi_ref);

enum class TerminationKind { extinction, neck_singularity, max_time, converged, unresolved };
std::string_view to_string(TerminationKind k);

struct Termination {
    TerminationKind kind = TerminationKind::max_time;
    double time = 0.0;
    std::optional<NeckLocation> neck;
    std::string detail;

    friend bool operator==(const Termination&, const Termination&) = default;
};

struct StepDiagnostics {
    double t = 0.0;
    double dt = 0.0;  ///< step that produced this state (0 for the initial state)
    double max_k = 0.0;
    double min_psi = 0.0;
    double max_psi = 0.0;
    double volume = 0.0;
    double roundness = 0.0;  ///< CurvatureField::roundness of this state
    std::optional<double> F;

    friend bool operator==(const StepDiagnostics&, const StepDiagnostics&) = default;
};

struct FlowTrajectory {
    std::vector<WarpedMetric> slices;
    Termination termination;
    std::vector<StepDiagnostics> diagnostics;
    double psi_ref = 1.0;  ///< psi_max of the initial data; thresholds are relative to it
    std::size_t steps = 0;

    /// Time at which max psi^2 extrapolates linearly to zero from the last two states.
    double extinction_time_estimate() const;
};

struct EvolveOptions {
    std::optional<NeckCriteria> neck;
    std::optional<double> psi_ref;  ///< defaults to max psi of the initial metric
};

/// Integrates one component with the gauged scheme.  Used directly by evolve() and in
/// lock-step by the singular flow driver.
class FlowStepper {
public:
    FlowStepper(WarpedMetric initial, FlowParams params, EvolveOptions opts = {});

    const WarpedMetric& state() const { return state_; }
    double time() const { return state_.time; }
    const FlowParams& params() const { return params_; }
    double psi_ref() const { return psi_ref_; }
    double psi_floor() const { return psi_floor_; }
    std::size_t steps() const { return steps_; }
    const std::vector<StepDiagnostics>& diagnostics() const { return diag_; }

    /// Evaluates curvature and the first RK stage at the current state, appends a diagnostics row
    /// and returns the stable dt.  Throws DegenerateGeometry.
    double evaluate();
    const CurvatureField& current_curvature() const { return stage_->curvature; }
    const ProfileDerivatives& current_derivatives() const { return stage_->derivatives; }

    /// Extinction or neck at the current (evaluated) state.
    std::optional<Termination> check_state() const;
    /// All qualifying necks at the current evaluated state, ordered by position.
    std::vector<NeckLocation> necks() const;

    /// Advances to exactly t_target, sub-stepping with halving when a step fails.
    /// Throws SingularBreakdown after 20 halvings.
    void advance_to(double t_target);

    /// Replaces the state with a re-sampled copy of it and restarts the gauge from there.
    /// Diagnostics and the step count carry over.
    void rebase(WarpedMetric g);

    void snapshot();
    const std::vector<WarpedMetric>& slices() const { return slices_; }
    FlowTrajectory finish(Termination term);

private:
    WarpedMetric state_;
    FlowParams params_;
    EvolveOptions opts_;
    double psi_ref_;
    double psi_floor_;
    GaugeBackground bg_;
    std::optional<GaugedRhs> stage_;
    double last_dt_ = 0.0;
    std::size_t steps_ = 0;
    std::vector<WarpedMetric> slices_;
    std::vector<StepDiagnostics> diag_;
};

FlowTrajectory evolve(const WarpedMetric& g, const FlowParams& p, const EvolveOptions& opts = {});

// ---------------------------------------------------------------------------------------------
// Perelman F-functional and the coupled flow

/// Arclength derivatives of a scalar f(s) and the pieces of its Hessian and Laplacian.
struct ScalarDerivatives {
    std::vector<double> f_s;
    std::vector<double> f_ss;
    std::vector<double> hess_sphere;  ///< (psi_s/psi) f_s, i.e. the Hessian on unit sphere directions
    std::vector<double> laplacian;    ///< f_ss + 2 (psi_s/psi) f_s
};
ScalarDerivatives scalar_derivatives(const WarpedMetric& g, const ProfileDerivatives& d, std::span<const double> f);

struct PerelmanRhs {
    std::vector<double> dphi;
    std::vector<double> dpsi;
    std::vector<double> df;
};

/// dg/dt = -2(Ric + Hess f),  df/dt = -R - Lap f  (the pair that keeps e^{-f} dv fixed).
PerelmanRhs perelman_rhs(const WarpedMetric& g, std::span<const double> f,
                         std::optional<double> psi_floor = std::nullopt);

/// F(g, f) = integral of (R + f_s^2) e^{-f} dv.
double f_functional(const WarpedMetric& g, std::span<const double> f);
/// 2 * integral of |Ric + Hess f|^2 e^{-f} dv, the predicted dF/dt.
double f_dissipation(const WarpedMetric& g, std::span<const double> f);

struct CoupledFlowResult {
    std::vector<double> times;
    std::vector<WarpedMetric> metrics;
    std::vector<std::vector<double>> f;
    std::vector<double> F;
    std::vector<double> dissipation;  ///< 2 int |Ric + Hess f|^2 dm at each time
    std::vector<double> measure;      ///< int e^{-f} dv at each time
};

/// Solves the coupled system on [0, T]: the metric by the gauged Ricci flow forward in time,
/// and u = e^{-f} by the conjugate heat equation backward from f(T) = f_final.
CoupledFlowResult coupled_flow(const WarpedMetric& g0, std::span<const double> f_final, double T,
                               const FlowParams& p);

// ---------------------------------------------------------------------------------------------
// Solitons

struct SolitonData {
    WarpedMetric metric;
    std::vector<double> f;
    double lambda = 0.0;
};

void validate(const SolitonData& data);

/// max over nodes of |2k1 + f_ss - lambda| and |k1 + k2 + (psi_s/psi) f_s - lambda|.
double soliton_residual(const SolitonData& data);

/// Orientation of the diffeomorphism flow (+1: points move along +grad f / sigma).
struct SolitonSign {
    int sign = 1;
    bool degenerate = false;  ///< f constant: both orientations give the same metric
    double residual_plus = 0.0;
    double residual_minus = 0.0;
};
/// Picks the orientation for which d/dt [sigma phi_t^* g0] = -2 Ric holds numerically at t = 0.
SolitonSign select_soliton_sign(const SolitonData& data);

/// g(t) = sigma(t) phi_t^* g0 with sigma = 1 - 2 lambda t.  sign = 0 selects it automatically.
WarpedMetric soliton_trajectory(const SolitonData& data, double t, int sign = 0);

struct IsometryPreservationReport {
    double max_drift = 0.0;
    double horizon = 0.0;     ///< last compared time
    bool reached_T = true;
    std::size_t compared_slices = 0;
};

/// Evolves g and a*g to time T (in parallel) and compares them slice by slice.
/// Throws PreconditionFailed if a does not fix g within tol.
IsometryPreservationReport isometry_preservation_check(const WarpedMetric& g, IsometryElement a, const FlowParams& p,
                                                       double T, double tol = 1e-12);

}  // namespace rsflow
