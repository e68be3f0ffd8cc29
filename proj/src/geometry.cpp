#include "rsflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rsflow {

namespace {

constexpr double kPi = std::numbers::pi;

void check_sizes(const WarpedMetric& g) {
    if (g.phi.size() != g.grid.size() || g.psi.size() != g.grid.size())
        throw GridMismatch("metric profiles do not match grid size " + std::to_string(g.grid.size()));
}

// Arclength from a pole to the first `count` interior nodes, walking inward.
std::vector<double> pole_distances(const WarpedMetric& g, bool right_pole, std::size_t count) {
    const std::size_t n = g.size();
    std::vector<double> s(count + 1, 0.0);
    for (std::size_t k = 1; k <= count; ++k) {
        const std::size_t a = right_pole ? n - k : k - 1;
        const std::size_t b = right_pole ? n - 1 - k : k;
        s[k] = s[k - 1] + 0.5 * (g.phi[a] + g.phi[b]) * g.grid.segment_length(std::min(a, b));
    }
    return s;
}

}  // namespace

double CurvatureField::max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < k1.size(); ++i) m = std::max({m, std::fabs(k1[i]), std::fabs(k2[i])});
    return m;
}

double CurvatureField::roundness(bool closed) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double lo = inf, hi = 0.0;
    if (closed) {
        for (std::size_t i = 0; i < k1.size(); ++i) {
            lo = std::min({lo, k1[i], k2[i]});
            hi = std::max({hi, k1[i], k2[i]});
        }
    } else {
        double flat = 0.0;
        for (std::size_t i = 0; i < k2.size(); ++i) {
            lo = std::min(lo, k2[i]);
            hi = std::max(hi, k2[i]);
            flat = std::max(flat, std::fabs(k1[i]));
        }
        if (!(flat <= 0.05 * lo)) return inf;
    }
    return lo > 0.0 ? hi / lo : inf;
}

double pole_slope(const WarpedMetric& g, bool right_pole) {
    check_sizes(g);
    if (!g.grid.closed()) throw InvalidArgument("periodic metrics have no poles");
    const auto d1 = g.grid.first_derivative(g.psi, Parity::odd);
    const std::size_t i = right_pole ? g.size() - 1 : 0;
    return d1[i] / g.phi[i];
}

std::optional<std::string> find_violation(const WarpedMetric& g, const ValidationOptions& opts) {
    const std::size_t n = g.grid.size();
    if (g.phi.size() != n || g.psi.size() != n) return "profile length does not match grid";
    if (!std::isfinite(g.time)) return "non-finite time";
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g.phi[i]) || !std::isfinite(g.psi[i])) return "non-finite value at node " + std::to_string(i);
        if (!(g.phi[i] > 0.0)) return "phi not positive at node " + std::to_string(i);
    }
    if (!g.grid.closed()) {
        for (std::size_t i = 0; i < n; ++i)
            if (!(g.psi[i] > 0.0)) return "psi not positive at node " + std::to_string(i);
        return std::nullopt;
    }
    if (g.psi.front() != 0.0 || g.psi.back() != 0.0) return "psi must vanish at both poles";
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (!(g.psi[i] > 0.0)) return "psi not positive at interior node " + std::to_string(i);
    const double left = pole_slope(g, false);
    const double right = pole_slope(g, true);
    if (std::fabs(left - 1.0) > opts.pole_tol)
        return "smooth closure violated at x=0: psi_s=" + std::to_string(left);
    if (std::fabs(right + 1.0) > opts.pole_tol)
        return "smooth closure violated at x=1: psi_s=" + std::to_string(right);
    return std::nullopt;
}

void validate(const WarpedMetric& g, const ValidationOptions& opts) {
    if (auto v = find_violation(g, opts)) throw InvalidMetric(*v);
}

ProfileDerivatives profile_derivatives(const WarpedMetric& g) {
    check_sizes(g);
    ProfileDerivatives d;
    std::vector<double> phi_xx;
    g.grid.derivatives(g.phi, Parity::even, d.phi_x, phi_xx);
    g.grid.derivatives(g.psi, Parity::odd, d.psi_x, d.psi_xx);
    const std::size_t n = g.size();
    d.psi_s.resize(n);
    d.psi_ss.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = g.phi[i];
        d.psi_s[i] = d.psi_x[i] / f;
        d.psi_ss[i] = (d.psi_xx[i] - d.psi_x[i] * d.phi_x[i] / f) / (f * f);
    }
    return d;
}

CurvatureField curvature(const WarpedMetric& g, std::optional<double> psi_floor) {
    const double floor = psi_floor ? *psi_floor : psi_floor_for(max_psi(g));
    return curvature(g, profile_derivatives(g), floor);
}

CurvatureField curvature(const WarpedMetric& g, const ProfileDerivatives& d, double psi_floor) {
    const std::size_t n = g.size();
    CurvatureField c;
    c.k1.assign(n, 0.0);
    c.k2.assign(n, 0.0);
    const bool closed = g.grid.closed();
    const std::size_t lo = closed ? 1 : 0;
    const std::size_t hi = closed ? n - 1 : n;
    for (std::size_t i = lo; i < hi; ++i) {
        const double p = g.psi[i];
        if (!(p >= psi_floor)) throw DegenerateGeometry(i, p);
        c.k1[i] = -d.psi_ss[i] / p;
        c.k2[i] = (1.0 - d.psi_s[i] * d.psi_s[i]) / (p * p);
    }
    if (closed) {
        // Smooth closure makes k1 = k2 at a pole; take the common value as the s^2 -> 0
        // extrapolation of k2 from the two nearest interior nodes.
        for (bool right : {false, true}) {
            const auto s = pole_distances(g, right, 2);
            const std::size_t a = right ? n - 1 : 0;
            const std::size_t i1 = right ? n - 2 : 1;
            const std::size_t i2 = right ? n - 3 : 2;
            const double s1 = s[1] * s[1];
            const double s2 = s[2] * s[2];
            const double kp = (c.k2[i1] * s2 - c.k2[i2] * s1) / (s2 - s1);
            c.k1[a] = kp;
            c.k2[a] = kp;
        }
    }
    c.ric_ss.resize(n);
    c.ric_sphere.resize(n);
    c.scalar.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.ric_ss[i] = 2.0 * c.k1[i];
        c.ric_sphere[i] = c.k1[i] + c.k2[i];
        c.scalar[i] = 4.0 * c.k1[i] + 2.0 * c.k2[i];
    }
    return c;
}

double pole_curvature_lhopital(const WarpedMetric& g, bool right_pole) {
    check_sizes(g);
    if (!g.grid.closed()) throw InvalidArgument("periodic metrics have no poles");
    const std::size_t n = g.size();
    const auto s = pole_distances(g, right_pole, 3);
    // Solve psi_k = a s_k + b s_k^3 + c s_k^5, k = 1..3, by Gaussian elimination.
    double m[3][4];
    for (int k = 0; k < 3; ++k) {
        const double sk = s[static_cast<std::size_t>(k + 1)];
        const std::size_t node = right_pole ? n - 2 - static_cast<std::size_t>(k) : static_cast<std::size_t>(k + 1);
        m[k][0] = sk;
        m[k][1] = sk * sk * sk;
        m[k][2] = sk * sk * sk * sk * sk;
        m[k][3] = g.psi[node];
    }
    for (int col = 0; col < 3; ++col) {
        for (int row = col + 1; row < 3; ++row) {
            const double f = m[row][col] / m[col][col];
            for (int j = col; j < 4; ++j) m[row][j] -= f * m[col][j];
        }
    }
    double coef[3];
    for (int row = 2; row >= 0; --row) {
        double acc = m[row][3];
        for (int j = row + 1; j < 3; ++j) acc -= m[row][j] * coef[j];
        coef[row] = acc / m[row][row];
    }
    return -6.0 * coef[1] / coef[0];
}

std::vector<double> arclength(const WarpedMetric& g) {
    check_sizes(g);
    const std::size_t n = g.size();
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        s[i] = s[i - 1] + 0.5 * (g.phi[i - 1] + g.phi[i]) * g.grid.segment_length(i - 1);
    return s;
}

double total_length(const WarpedMetric& g) {
    const auto s = arclength(g);
    double L = s.back();
    if (!g.grid.closed()) L += 0.5 * (g.phi.back() + g.phi.front()) * g.grid.segment_length(g.size() - 1);
    return L;
}

double integrate(const WarpedMetric& g, std::span<const double> field) {
    check_sizes(g);
    if (field.size() != g.size()) throw GridMismatch("field length does not match grid");
    const std::size_t n = g.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = field[i] * 4.0 * kPi * g.phi[i] * g.psi[i] * g.psi[i];
    double acc = 0.0;
    const std::size_t m = g.grid.segment_count();
    for (std::size_t i = 0; i < m; ++i) acc += 0.5 * (w[i] + w[(i + 1) % n]) * g.grid.segment_length(i);
    return acc;
}

double volume(const WarpedMetric& g) {
    const std::vector<double> one(g.size(), 1.0);
    return integrate(g, one);
}

double max_psi(const WarpedMetric& g) {
    if (g.psi.empty()) return 0.0;
    return *std::max_element(g.psi.begin(), g.psi.end());
}

double min_interior_psi(const WarpedMetric& g) {
    if (!g.grid.closed()) return *std::min_element(g.psi.begin(), g.psi.end());
    return *std::min_element(g.psi.begin() + 1, g.psi.end() - 1);
}

WarpedMetric make_round_sphere(double r, std::size_t n) {
    if (!(r > 0.0)) throw InvalidArgument("sphere radius must be positive");
    WarpedMetric g;
    g.grid = ProfileGrid::uniform(n);
    g.phi.assign(n, r * kPi);
    g.psi.assign(n, 0.0);
    const double h = g.grid.spacing();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t j = std::min(i, n - 1 - i);
        g.psi[i] = r * std::sin(kPi * static_cast<double>(j) * h);
    }
    return g;
}

WarpedMetric make_cylinder(double r, double length, std::size_t n) {
    if (!(r > 0.0) || !(length > 0.0)) throw InvalidArgument("cylinder radius and length must be positive");
    WarpedMetric g;
    g.grid = ProfileGrid::uniform(n, Topology::periodic);
    g.phi.assign(n, length);
    g.psi.assign(n, r);
    return g;
}

std::string_view dumbbell_family() {
    return "spherical lobes joined to the neck by C2 cosine blends";
}

namespace {

// One half of the dumbbell: a round lobe of radius R on [0, pi R/2], then a blend
// down to the neck radius rho over length d.  The blend is
//   psi = rho + (R - rho) * c(tau),  c(tau) = (1 + cos(pi tau))/2 + gamma tau^2 (1-tau)^3,
// with gamma chosen so psi_ss = -1/R at the lobe junction; d is chosen so psi_ss = kappa at the
// neck, which lets two halves with different R meet with matching second derivatives.
struct DumbbellHalf {
    double R, rho, d, gamma;

    DumbbellHalf(double lobe, double neck, double kappa)
        : R(lobe), rho(neck), d(kPi * std::sqrt((lobe - neck) / (2.0 * kappa))),
          gamma(0.25 * kPi * kPi * (1.0 - 1.0 / (kappa * lobe))) {}

    double lobe_length() const { return 0.5 * kPi * R; }
    double length() const { return lobe_length() + d; }

    // s measured from this half's pole, 0 <= s <= length()
    double psi(double s) const {
        const double a = lobe_length();
        if (s <= a) return R * std::sin(s / R);
        const double tau = std::min((s - a) / d, 1.0);
        const double u = 1.0 - tau;
        const double c = 0.5 * (1.0 + std::cos(kPi * tau)) + gamma * tau * tau * u * u * u;
        return rho + (R - rho) * c;
    }
};

}  // namespace

WarpedMetric make_dumbbell(double neck_radius, double lobe_radius, std::size_t n, bool symmetric) {
    if (!(neck_radius > 0.0) || !(neck_radius < lobe_radius))
        throw InvalidArgument("dumbbell requires 0 < neck_radius < lobe_radius");
    const double right_lobe = symmetric ? lobe_radius
                                        : neck_radius + kAsymmetricLobeFraction * (lobe_radius - neck_radius);
    const double kappa = 2.0 / (lobe_radius + right_lobe);
    const DumbbellHalf left(lobe_radius, neck_radius, kappa);
    const DumbbellHalf right(right_lobe, neck_radius, kappa);
    const double L = left.length() + right.length();

    WarpedMetric g;
    g.grid = ProfileGrid::uniform(n);
    g.phi.assign(n, L);
    g.psi.assign(n, 0.0);
    const double h = g.grid.spacing();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (symmetric) {
            const std::size_t j = std::min(i, n - 1 - i);
            g.psi[i] = left.psi(static_cast<double>(j) * h * L);
        } else {
            const double s = g.grid.x()[i] * L;
            g.psi[i] = s <= left.length() ? left.psi(s) : right.psi(L - s);
        }
    }
    return g;
}

std::string_view to_string(IsometryElement a) {
    return a.is_identity() ? "identity" : "reflection";
}

IsometryElement isometry_from_string(std::string_view name) {
    if (name == "identity") return IsometryElement::identity();
    if (name == "reflection") return IsometryElement::reflection();
    throw InvalidArgument("unknown isometry '" + std::string(name) + "'");
}

std::size_t isometry_node_image(const ProfileGrid& grid, IsometryElement a, std::size_t i) {
    const std::size_t n = grid.size();
    if (a.is_identity()) return i;
    return grid.closed() ? n - 1 - i : (n - i) % n;
}

std::vector<double> apply_isometry(const ProfileGrid& grid, std::span<const double> field, IsometryElement a) {
    if (field.size() != grid.size()) throw GridMismatch("field length does not match grid");
    if (a.is_identity()) return {field.begin(), field.end()};
    if (!grid.is_reflection_symmetric()) throw InvalidArgument("grid is not symmetric under reflection");
    std::vector<double> out(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) out[isometry_node_image(grid, a, i)] = field[i];
    return out;
}

WarpedMetric apply_isometry(const WarpedMetric& g, IsometryElement a) {
    check_sizes(g);
    WarpedMetric out;
    out.grid = g.grid;
    out.time = g.time;
    out.phi = apply_isometry(g.grid, g.phi, a);
    out.psi = apply_isometry(g.grid, g.psi, a);
    return out;
}

double metric_distance(const WarpedMetric& a, const WarpedMetric& b, std::optional<double> psi_floor) {
    check_sizes(a);
    check_sizes(b);
    if (!(a.grid == b.grid)) throw GridMismatch("metric_distance requires identical grids");
    const double floor = psi_floor ? *psi_floor : psi_floor_for(std::max(max_psi(a), max_psi(b)));
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dphi = std::fabs(a.phi[i] - b.phi[i]) / std::min(a.phi[i], b.phi[i]);
        const double dpsi = std::fabs(a.psi[i] - b.psi[i]) / std::max(std::min(a.psi[i], b.psi[i]), floor);
        d = std::max(d, dphi + dpsi);
    }
    return d;
}

}  // namespace rsflow
