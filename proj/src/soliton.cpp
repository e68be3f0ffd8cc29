#include <algorithm>
#include <cmath>
#include <future>

#include "rsflow/flow.hpp"

namespace rsflow {

void validate(const SolitonData& data) {
    validate(data.metric);
    if (data.f.size() != data.metric.size()) throw GridMismatch("soliton potential does not match grid");
    for (double v : data.f)
        if (!std::isfinite(v)) throw InvalidArgument("soliton potential must be finite");
    if (!std::isfinite(data.lambda)) throw InvalidArgument("soliton constant must be finite");
}

double soliton_residual(const SolitonData& data) {
    validate(data);
    const auto& g = data.metric;
    const auto d = profile_derivatives(g);
    const auto c = curvature(g, d, psi_floor_for(max_psi(g)));
    const auto sd = scalar_derivatives(g, d, data.f);
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        r = std::max(r, std::fabs(2.0 * c.k1[i] + sd.f_ss[i] - data.lambda));
        r = std::max(r, std::fabs(c.k1[i] + c.k2[i] + sd.hess_sphere[i] - data.lambda));
    }
    return r;
}

namespace {

bool constant_potential(const std::vector<double>& f) {
    return std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); });
}

// Cubic Lagrange interpolation of a nodal profile at coordinate y, with ghost nodes
// reflected across poles (closed) or wrapped (periodic).
class Interpolator {
public:
    Interpolator(const ProfileGrid& grid, std::span<const double> v, Parity parity)
        : grid_(grid), v_(v), parity_(parity) {}

    double operator()(double y) const {
        const auto& x = grid_.x();
        const auto n = static_cast<std::ptrdiff_t>(x.size());
        if (!grid_.closed()) y = x.front() + std::fmod(std::fmod(y - x.front(), 1.0) + 1.0, 1.0);
        std::ptrdiff_t j = std::upper_bound(x.begin(), x.end(), y) - x.begin() - 1;
        j = std::clamp<std::ptrdiff_t>(j, 0, grid_.closed() ? n - 2 : n - 1);
        double acc = 0.0;
        for (std::ptrdiff_t a = j - 1; a <= j + 2; ++a) {
            double w = 1.0;
            for (std::ptrdiff_t b = j - 1; b <= j + 2; ++b)
                if (b != a) w *= (y - coord(b)) / (coord(a) - coord(b));
            acc += w * value(a);
        }
        return acc;
    }

private:
    double coord(std::ptrdiff_t j) const {
        const auto& x = grid_.x();
        const auto n = static_cast<std::ptrdiff_t>(x.size());
        if (!grid_.closed()) {
            if (j < 0) return x[static_cast<std::size_t>(j + n)] - 1.0;
            if (j >= n) return x[static_cast<std::size_t>(j - n)] + 1.0;
            return x[static_cast<std::size_t>(j)];
        }
        if (j < 0) return -x[static_cast<std::size_t>(-j)];
        if (j > n - 1) return 2.0 - x[static_cast<std::size_t>(2 * (n - 1) - j)];
        return x[static_cast<std::size_t>(j)];
    }
    double value(std::ptrdiff_t j) const {
        const auto n = static_cast<std::ptrdiff_t>(v_.size());
        if (!grid_.closed()) return v_[static_cast<std::size_t>(((j % n) + n) % n)];
        const double sign = parity_ == Parity::odd ? -1.0 : 1.0;
        if (j < 0) return sign * v_[static_cast<std::size_t>(-j)];
        if (j > n - 1) return sign * v_[static_cast<std::size_t>(2 * (n - 1) - j)];
        return v_[static_cast<std::size_t>(j)];
    }

    const ProfileGrid& grid_;
    std::span<const double> v_;
    Parity parity_;
};

// sigma(t) phi_t^* g0 for a non-constant potential.  In the coordinate x the generating field
// is X = f_x / (phi0^2 sigma) d/dx; with tau = int dt/sigma the flow is autonomous.
WarpedMetric pulled_back(const SolitonData& data, double t, int sign) {
    const auto& g0 = data.metric;
    const std::size_t n = g0.size();
    const double sigma = 1.0 - 2.0 * data.lambda * t;
    const double tau = data.lambda == 0.0 ? t : -std::log(sigma) / (2.0 * data.lambda);

    const auto fx = g0.grid.first_derivative(data.f, Parity::even);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = fx[i] / (g0.phi[i] * g0.phi[i]);
    const Interpolator vel(g0.grid, v, Parity::odd);
    const Interpolator phi0(g0.grid, g0.phi, Parity::even);
    const Interpolator psi0(g0.grid, g0.psi, Parity::odd);

    double vmax = 0.0;
    for (double a : v) vmax = std::max(vmax, std::fabs(a));
    const double h = g0.grid.min_segment();
    const auto substeps = static_cast<std::size_t>(std::max(64.0, std::ceil(8.0 * std::fabs(tau) * vmax / h)));
    const double dtau = tau / static_cast<double>(substeps);

    std::vector<double> y(g0.grid.x());
    const bool closed = g0.grid.closed();
    for (std::size_t i = 0; i < n; ++i) {
        if (closed && (i == 0 || i == n - 1)) continue;
        double yy = y[i];
        for (std::size_t k = 0; k < substeps; ++k) {
            const double k1 = sign * vel(yy);
            const double k2 = sign * vel(yy + 0.5 * dtau * k1);
            const double k3 = sign * vel(yy + 0.5 * dtau * k2);
            const double k4 = sign * vel(yy + dtau * k3);
            yy += dtau * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        }
        y[i] = yy;
    }
    std::vector<double> disp(n);
    for (std::size_t i = 0; i < n; ++i) disp[i] = y[i] - g0.grid.x()[i];
    const auto dx = g0.grid.first_derivative(disp, Parity::odd);

    WarpedMetric out;
    out.grid = g0.grid;
    out.time = g0.time + t;
    out.phi.resize(n);
    out.psi.assign(n, 0.0);
    const double scale = std::sqrt(sigma);
    for (std::size_t i = 0; i < n; ++i) {
        out.phi[i] = scale * phi0(y[i]) * (1.0 + dx[i]);
        if (closed && (i == 0 || i == n - 1)) continue;
        out.psi[i] = scale * psi0(y[i]);
    }
    return out;
}

}  // namespace

SolitonSign select_soliton_sign(const SolitonData& data) {
    validate(data);
    SolitonSign out;
    if (constant_potential(data.f)) {
        out.degenerate = true;
        return out;
    }
    const auto& g0 = data.metric;
    const auto r = ricci_rhs(g0);
    const double delta = 1e-5;
    double res[2] = {0.0, 0.0};
    for (int k = 0; k < 2; ++k) {
        const int s = k == 0 ? 1 : -1;
        const auto a = pulled_back(data, delta, s);
        const auto b = pulled_back(data, -delta, s);
        double m = 0.0;
        const bool closed = g0.grid.closed();
        for (std::size_t i = 0; i < g0.size(); ++i) {
            if (closed && (i == 0 || i == g0.size() - 1)) continue;
            const double dphi = (a.phi[i] - b.phi[i]) / (2.0 * delta);
            const double dpsi = (a.psi[i] - b.psi[i]) / (2.0 * delta);
            m = std::max(m, std::fabs(dphi - r.dphi[i]) / g0.phi[i] + std::fabs(dpsi - r.dpsi[i]) / g0.psi[i]);
        }
        res[k] = m;
    }
    out.residual_plus = res[0];
    out.residual_minus = res[1];
    out.sign = res[1] < res[0] ? -1 : 1;
    return out;
}

WarpedMetric soliton_trajectory(const SolitonData& data, double t, int sign) {
    validate(data);
    const double sigma = 1.0 - 2.0 * data.lambda * t;
    if (!(sigma > 0.0)) throw InvalidArgument("requested time lies beyond the extinction of sigma(t) = 1 - 2 lambda t");
    if (t == 0.0) return data.metric;
    if (constant_potential(data.f)) {
        WarpedMetric out = data.metric;
        const double scale = std::sqrt(sigma);
        for (auto& v : out.phi) v *= scale;
        for (auto& v : out.psi) v *= scale;
        out.time = data.metric.time + t;
        return out;
    }
    if (sign == 0) sign = select_soliton_sign(data).sign;
    if (sign != 1 && sign != -1) throw InvalidArgument("soliton sign must be +1, -1 or 0");
    return pulled_back(data, t, sign);
}

IsometryPreservationReport isometry_preservation_check(const WarpedMetric& g, IsometryElement a, const FlowParams& p,
                                                       double T, double tol) {
    validate(g, ValidationOptions{p.pole_tol});
    const WarpedMetric ag = apply_isometry(g, a);
    if (metric_distance(g, ag) > tol)
        throw PreconditionFailed("isometry does not fix the initial metric (distance " +
                                 std::to_string(metric_distance(g, ag)) + ")");
    FlowParams fp = p;
    fp.t_max = T;
    auto fa = std::async(std::launch::async, [&] { return evolve(g, fp); });
    auto fb = std::async(std::launch::async, [&] { return evolve(ag, fp); });
    const auto A = fa.get();
    const auto B = fb.get();

    IsometryPreservationReport rep;
    const std::size_t m = std::min(A.slices.size(), B.slices.size());
    for (std::size_t k = 0; k < m; ++k) {
        const auto& sa = A.slices[k];
        const auto& sb = B.slices[k];
        if (sa.time != sb.time) {
            rep.max_drift = std::numeric_limits<double>::infinity();
            rep.horizon = std::min(sa.time, sb.time);
            rep.reached_T = false;
            rep.compared_slices = k;
            return rep;
        }
        const double d = std::max(metric_distance(sa, sb), metric_distance(sa, apply_isometry(sa, a)));
        rep.max_drift = std::max(rep.max_drift, d);
        rep.horizon = sa.time;
    }
    rep.compared_slices = m;
    rep.reached_T = A.termination.kind == TerminationKind::max_time && B.termination.kind == TerminationKind::max_time;
    return rep;
}

}  // namespace rsflow
