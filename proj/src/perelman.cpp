#include <cmath>

#include "rsflow/flow.hpp"

namespace rsflow {

ScalarDerivatives scalar_derivatives(const WarpedMetric& g, const ProfileDerivatives& d, std::span<const double> f) {
    const std::size_t n = g.size();
    if (f.size() != n) throw GridMismatch("potential does not match grid");
    std::vector<double> fx, fxx;
    g.grid.derivatives(f, Parity::even, fx, fxx);
    ScalarDerivatives out;
    out.f_s.resize(n);
    out.f_ss.resize(n);
    out.hess_sphere.resize(n);
    out.laplacian.resize(n);
    const bool closed = g.grid.closed();
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = g.phi[i];
        out.f_s[i] = fx[i] / phi;
        out.f_ss[i] = (fxx[i] - fx[i] * d.phi_x[i] / phi) / (phi * phi);
        const bool pole = closed && (i == 0 || i == n - 1);
        // at a pole f_s/psi -> f_ss since both vanish linearly
        out.hess_sphere[i] = pole ? out.f_ss[i] : d.psi_s[i] * out.f_s[i] / g.psi[i];
        out.laplacian[i] = out.f_ss[i] + 2.0 * out.hess_sphere[i];
    }
    return out;
}

PerelmanRhs perelman_rhs(const WarpedMetric& g, std::span<const double> f, std::optional<double> psi_floor) {
    const auto d = profile_derivatives(g);
    const auto c = curvature(g, d, psi_floor ? *psi_floor : psi_floor_for(max_psi(g)));
    const auto sd = scalar_derivatives(g, d, f);
    const std::size_t n = g.size();
    const bool closed = g.grid.closed();
    PerelmanRhs r;
    r.dphi.resize(n);
    r.dpsi.assign(n, 0.0);
    r.df.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.dphi[i] = -g.phi[i] * (2.0 * c.k1[i] + sd.f_ss[i]);
        r.df[i] = -c.scalar[i] - sd.laplacian[i];
        if (closed && (i == 0 || i == n - 1)) continue;
        r.dpsi[i] = -g.psi[i] * (c.k1[i] + c.k2[i]) - d.psi_s[i] * sd.f_s[i];
    }
    return r;
}

double f_functional(const WarpedMetric& g, std::span<const double> f) {
    const auto d = profile_derivatives(g);
    const auto c = curvature(g, d, psi_floor_for(max_psi(g)));
    const auto sd = scalar_derivatives(g, d, f);
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (c.scalar[i] + sd.f_s[i] * sd.f_s[i]) * std::exp(-f[i]);
    return integrate(g, w);
}

double f_dissipation(const WarpedMetric& g, std::span<const double> f) {
    const auto d = profile_derivatives(g);
    const auto c = curvature(g, d, psi_floor_for(max_psi(g)));
    const auto sd = scalar_derivatives(g, d, f);
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double radial = 2.0 * c.k1[i] + sd.f_ss[i];
        const double sphere = c.k1[i] + c.k2[i] + sd.hess_sphere[i];
        w[i] = 2.0 * (radial * radial + 2.0 * sphere * sphere) * std::exp(-f[i]);
    }
    return integrate(g, w);
}

namespace {

// Conjugate heat operator in backward time tau = T - t, in the gauge of the stored metrics:
//   u_tau = Lap u - R u - xi u_x.
std::vector<double> conjugate_heat_rhs(const WarpedMetric& g, const GaugeBackground& bg, std::span<const double> u) {
    const auto d = profile_derivatives(g);
    const auto c = curvature(g, d, psi_floor_for(max_psi(g)));
    const auto sd = scalar_derivatives(g, d, u);
    const auto xi = deturck_field(g, d, bg);
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = sd.laplacian[i] - c.scalar[i] * u[i] - xi[i] * sd.f_s[i] * g.phi[i];
    return out;
}

}  // namespace

CoupledFlowResult coupled_flow(const WarpedMetric& g0, std::span<const double> f_final, double T, const FlowParams& p) {
    if (f_final.size() != g0.size()) throw GridMismatch("final potential does not match grid");
    if (!(T > 0.0)) throw InvalidArgument("coupled flow horizon must be positive");
    FlowParams fp = p;
    fp.t_max = T;
    fp.snapshot_stride = 1;
    const auto traj = evolve(g0, fp);
    if (traj.termination.kind != TerminationKind::max_time)
        throw SingularBreakdown("metric flow ended before the coupled-flow horizon: " +
                                std::string(to_string(traj.termination.kind)));
    const auto bg = make_gauge_background(g0);
    const std::size_t K = traj.slices.size();

    CoupledFlowResult out;
    out.metrics = traj.slices;
    out.times.resize(K);
    out.f.resize(K);
    std::vector<std::vector<double>> u(K);
    u[K - 1].resize(g0.size());
    for (std::size_t i = 0; i < g0.size(); ++i) u[K - 1][i] = std::exp(-f_final[i]);
    for (std::size_t k = K - 1; k-- > 0;) {
        const double dtau = out.metrics[k + 1].time - out.metrics[k].time;
        const auto a = conjugate_heat_rhs(out.metrics[k + 1], bg, u[k + 1]);
        std::vector<double> mid(u[k + 1].size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = u[k + 1][i] + dtau * a[i];
        const auto b = conjugate_heat_rhs(out.metrics[k], bg, mid);
        u[k].resize(mid.size());
        for (std::size_t i = 0; i < mid.size(); ++i) u[k][i] = u[k + 1][i] + 0.5 * dtau * (a[i] + b[i]);
    }
    for (std::size_t k = 0; k < K; ++k) {
        out.times[k] = out.metrics[k].time;
        out.f[k].resize(u[k].size());
        for (std::size_t i = 0; i < u[k].size(); ++i) {
            if (!(u[k][i] > 0.0)) throw SingularBreakdown("conjugate heat solution lost positivity");
            out.f[k][i] = -std::log(u[k][i]);
        }
        out.F.push_back(f_functional(out.metrics[k], out.f[k]));
        out.dissipation.push_back(f_dissipation(out.metrics[k], out.f[k]));
        out.measure.push_back(integrate(out.metrics[k], u[k]));
    }
    return out;
}

}  // namespace rsflow
