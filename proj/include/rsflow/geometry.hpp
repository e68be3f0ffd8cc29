#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsflow/errors.hpp"
#include "rsflow/grid.hpp"

namespace rsflow {

/// Divisions by psi are guarded by psi_floor = kPsiFloorRatio * (reference psi_max).
inline constexpr double kPsiFloorRatio = 1e-8;
inline constexpr double kDefaultPoleTol = 1e-2;

/// Rotationally symmetric metric  g = phi(x)^2 dx^2 + psi(x)^2 g_{S^2}  sampled on a fixed grid.
struct WarpedMetric {
    ProfileGrid grid = ProfileGrid::uniform(5);
    std::vector<double> phi;
    std::vector<double> psi;
    double time = 0.0;

    std::size_t size() const noexcept { return psi.size(); }
    friend bool operator==(const WarpedMetric&, const WarpedMetric&) = default;
};

struct ValidationOptions {
    double pole_tol = kDefaultPoleTol;
};

/// Returns a description of the first violated invariant, or nothing when the metric is valid.
std::optional<std::string> find_violation(const WarpedMetric& g, const ValidationOptions& opts = {});
/// Throws InvalidMetric when find_violation reports a problem.
void validate(const WarpedMetric& g, const ValidationOptions& opts = {});

/// Arclength derivative of psi at a pole (+1 expected at x=0, -1 at x=1).
double pole_slope(const WarpedMetric& g, bool right_pole);

struct CurvatureField {
    std::vector<double> k1;          ///< sectional curvature of planes containing d/ds
    std::vector<double> k2;          ///< sectional curvature of the spherical planes
    std::vector<double> ric_ss;      ///< Ric(e_s, e_s)
    std::vector<double> ric_sphere;  ///< Ricci eigenvalue on the sphere directions
    std::vector<double> scalar;

    double max_abs() const;
    /// K_max / K_min over all sectional curvatures; +inf when some curvature is not positive.
    /// For periodic profiles only the spherical curvature k2 counts, and |k1| must stay below
    /// 5% of min k2 (a round cylinder).
    double roundness(bool closed = true) const;
};

/// Coordinate and arclength derivatives shared by curvature and the flow right-hand sides.
struct ProfileDerivatives {
    std::vector<double> phi_x;
    std::vector<double> psi_x;
    std::vector<double> psi_xx;
    std::vector<double> psi_s;
    std::vector<double> psi_ss;
};

ProfileDerivatives profile_derivatives(const WarpedMetric& g);

/// Absolute psi floor for a metric whose reference size is psi_ref.
inline double psi_floor_for(double psi_ref) { return kPsiFloorRatio * psi_ref; }

/// Curvature of g.  psi_floor defaults to kPsiFloorRatio * max(psi).
/// Throws DegenerateGeometry when an interior psi is below the floor.
CurvatureField curvature(const WarpedMetric& g, std::optional<double> psi_floor = std::nullopt);
CurvatureField curvature(const WarpedMetric& g, const ProfileDerivatives& d, double psi_floor);

/// Pole curvature from the odd Taylor expansion psi = a s + b s^3 + c s^5 fitted to the three
/// nodes next to the pole: the L'Hopital limit -psi_sss/psi_s = -6b/a.  Diagnostic only.
double pole_curvature_lhopital(const WarpedMetric& g, bool right_pole);

/// Cumulative trapezoid arclength s_i, starting at 0 on node 0.
std::vector<double> arclength(const WarpedMetric& g);
/// Total length; for periodic metrics this includes the wrap-around segment.
double total_length(const WarpedMetric& g);

/// Trapezoid quadrature of field * dv with dv = 4 pi phi psi^2 dx.
double integrate(const WarpedMetric& g, std::span<const double> field);
double volume(const WarpedMetric& g);

double max_psi(const WarpedMetric& g);
/// Smallest psi over interior nodes (all nodes for periodic metrics).
double min_interior_psi(const WarpedMetric& g);

WarpedMetric make_round_sphere(double r, std::size_t n);
WarpedMetric make_cylinder(double r, double length, std::size_t n);
/// Two spherical lobes joined through a neck by cosine blends matched to second order.
/// The asymmetric variant shrinks the right lobe to neck + 0.75 (lobe - neck).
WarpedMetric make_dumbbell(double neck_radius, double lobe_radius, std::size_t n, bool symmetric = true);
/// Human-readable name of the dumbbell family, embedded in run metadata.
std::string_view dumbbell_family();
inline constexpr double kAsymmetricLobeFraction = 0.75;

/// Element of the residual isometry group Z_2 = {identity, reflection x -> 1-x}.
class IsometryElement {
public:
    enum class Kind { identity, reflection };

    constexpr IsometryElement() = default;
    constexpr explicit IsometryElement(Kind k) : kind_(k) {}
    static constexpr IsometryElement identity() { return IsometryElement(Kind::identity); }
    static constexpr IsometryElement reflection() { return IsometryElement(Kind::reflection); }

    constexpr Kind kind() const { return kind_; }
    constexpr bool is_identity() const { return kind_ == Kind::identity; }
    /// (a * b) acts as "first b, then a"; in Z_2 the order does not matter.
    friend constexpr IsometryElement operator*(IsometryElement a, IsometryElement b) {
        return IsometryElement(a.kind_ == b.kind_ ? Kind::identity : Kind::reflection);
    }
    friend constexpr bool operator==(IsometryElement, IsometryElement) = default;

private:
    Kind kind_ = Kind::identity;
};

std::string_view to_string(IsometryElement a);
IsometryElement isometry_from_string(std::string_view name);

/// Node index that node i is sent to by a.
std::size_t isometry_node_image(const ProfileGrid& grid, IsometryElement a, std::size_t i);
/// Reorders a nodal field the same way apply_isometry reorders phi and psi.
std::vector<double> apply_isometry(const ProfileGrid& grid, std::span<const double> field, IsometryElement a);
/// Pullback a*g.  Throws InvalidArgument when the grid is not symmetric under a.
WarpedMetric apply_isometry(const WarpedMetric& g, IsometryElement a);

/// max_i |dphi|/min(phi) + |dpsi|/max(min(psi), floor); symmetric in its arguments.
double metric_distance(const WarpedMetric& a, const WarpedMetric& b, std::optional<double> psi_floor = std::nullopt);

}  // namespace rsflow
