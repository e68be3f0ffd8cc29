#include "rsflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>

namespace rsflow {

std::string_view to_string(Scheme s) {
    return s == Scheme::semi_implicit ? "semi_implicit" : "explicit_rk2";
}

Scheme scheme_from_string(std::string_view name) {
    if (name == "explicit_rk2") return Scheme::explicit_rk2;
    if (name == "semi_implicit") return Scheme::semi_implicit;
    throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(TerminationKind k) {
    switch (k) {
        case TerminationKind::extinction: return "extinction";
        case TerminationKind::neck_singularity: return "neck_singularity";
        case TerminationKind::max_time: return "max_time";
        case TerminationKind::converged: return "converged";
        case TerminationKind::unresolved: return "unresolved";
    }
    return "unresolved";
}

void FlowParams::validate() const {
    if (!(cfl > 0.0 && cfl <= 0.5)) throw InvalidArgument("cfl must lie in (0, 0.5]");
    if (!(dt_max > 0.0)) throw InvalidArgument("dt_max must be positive");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw InvalidArgument("t_max must be finite and non-negative");
    if (snapshot_stride == 0) throw InvalidArgument("snapshot_stride must be at least 1");
    if (!(extinction_ratio > 0.0 && extinction_ratio < 1.0)) throw InvalidArgument("extinction_ratio must lie in (0,1)");
    if (!(conv_tol >= 0.0)) throw InvalidArgument("conv_tol must be non-negative");
    if (!(pole_tol > 0.0)) throw InvalidArgument("pole_tol must be positive");
}

// ---------------------------------------------------------------------------------------------
// neck recognition

namespace {

// Start nodes of runs of equal psi that are local minima, in increasing node order.
std::vector<std::size_t> local_minima(const WarpedMetric& g) {
    const auto& p = g.psi;
    const std::size_t n = p.size();
    std::vector<std::size_t> out;
    if (g.grid.closed()) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (!(p[i] < p[i - 1])) continue;
            std::size_t j = i;
            while (j + 1 < n - 1 && p[j + 1] == p[i]) ++j;
            if (p[j + 1] > p[i]) out.push_back(i);
            i = j;
        }
        return out;
    }
    const bool flat = std::all_of(p.begin(), p.end(), [&](double v) { return v == p.front(); });
    if (flat) return {0};
    for (std::size_t i = 0; i < n; ++i) {
        if (!(p[i] < p[(i + n - 1) % n])) continue;
        std::size_t j = i;
        while (p[(j + 1) % n] == p[i]) ++j;
        if (p[(j + 1) % n] > p[i]) out.push_back(i);
    }
    return out;
}

bool cylindrical_window(const WarpedMetric& g, const CurvatureField& c, const ProfileDerivatives& d,
                        const std::vector<double>& s, double L, std::size_t i, const NeckCriteria& crit) {
    const std::size_t n = g.size();
    const bool closed = g.grid.closed();
    const double half = crit.window_half_width * g.psi[i];
    auto ok = [&](std::size_t j) {
        if (closed && (j == 0 || j == n - 1)) return false;
        const double k2 = c.k2[j];
        return k2 > 0.0 && std::fabs(c.k1[j]) < crit.cylindricity_tol * k2 && std::fabs(d.psi_s[j]) < crit.slope_tol;
    };
    if (!ok(i)) return false;
    auto dist = [&](std::size_t j) {
        double dd = std::fabs(s[j] - s[i]);
        if (!closed) dd = std::min(dd, L - dd);
        return dd;
    };
    for (std::size_t step = 1; step < n; ++step) {
        bool any = false;
        for (int dir : {-1, 1}) {
            std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + dir * static_cast<std::ptrdiff_t>(step);
            if (closed && (j < 0 || j > static_cast<std::ptrdiff_t>(n - 1))) continue;
            if (!closed) j = ((j % static_cast<std::ptrdiff_t>(n)) + static_cast<std::ptrdiff_t>(n)) % static_cast<std::ptrdiff_t>(n);
            const auto jj = static_cast<std::size_t>(j);
            if (dist(jj) > half) continue;
            any = true;
            if (!ok(jj)) return false;
        }
        if (!any) break;
    }
    return true;
}

}  // namespace

std::vector<NeckLocation> find_necks(const WarpedMetric& g, const CurvatureField& c, const ProfileDerivatives& d,
                                     const NeckCriteria& crit) {
    std::vector<NeckLocation> out;
    const auto minima = local_minima(g);
    if (minima.empty()) return out;
    const auto s = arclength(g);
    const double L = total_length(g);
    for (std::size_t i : minima) {
        if (!(g.psi[i] < crit.rho)) continue;
        if (!cylindrical_window(g, c, d, s, L, i, crit)) continue;
        out.push_back({i, s[i], g.psi[i]});
    }
    return out;
}

std::optional<NeckLocation> find_neck(const WarpedMetric& g, const CurvatureField& c, const ProfileDerivatives& d,
                                      const NeckCriteria& crit) {
    const auto minima = local_minima(g);
    if (minima.empty()) return std::nullopt;
    std::size_t best = minima.front();
    for (std::size_t i : minima)
        if (g.psi[i] < g.psi[best]) best = i;
    if (!(g.psi[best] < crit.rho)) return std::nullopt;
    const auto s = arclength(g);
    if (!cylindrical_window(g, c, d, s, total_length(g), best, crit)) return std::nullopt;
    return NeckLocation{best, s[best], g.psi[best]};
}

std::optional<NeckLocation> find_neck(const WarpedMetric& g, const NeckCriteria& crit) {
    const auto d = profile_derivatives(g);
    const auto c = curvature(g, d, psi_floor_for(max_psi(g)));
    return find_neck(g, c, d, crit);
}

// ---------------------------------------------------------------------------------------------
// right-hand sides

RicciRhs ricci_rhs(const WarpedMetric& g, const CurvatureField& c) {
    const std::size_t n = g.size();
    RicciRhs r;
    r.dphi.resize(n);
    r.dpsi.assign(n, 0.0);
    const bool closed = g.grid.closed();
    for (std::size_t i = 0; i < n; ++i) {
        r.dphi[i] = -2.0 * g.phi[i] * c.k1[i];
        if (closed && (i == 0 || i == n - 1)) continue;
        r.dpsi[i] = -g.psi[i] * (c.k1[i] + c.k2[i]);
    }
    return r;
}

RicciRhs ricci_rhs(const WarpedMetric& g, std::optional<double> psi_floor) {
    return ricci_rhs(g, curvature(g, psi_floor));
}

GaugeBackground make_gauge_background(const WarpedMetric& g) {
    GaugeBackground bg;
    bg.phi = g.phi;
    bg.psi = g.psi;
    bg.phi_x = g.grid.first_derivative(g.phi, Parity::even);
    bg.psi_x = g.grid.first_derivative(g.psi, Parity::odd);
    if (g.grid.closed()) {
        // The spherical part of W is singular at a pole unless the background closes smoothly.
        // A background whose discrete pole slope is off by a small amount would pin the flow to
        // that defect, so its slope is renormalised to exactly 1 near each pole.
        const std::size_t n = g.size();
        const double left = bg.psi_x.front() / bg.phi.front();
        const double right = -bg.psi_x.back() / bg.phi.back();
        const double width = 0.25;
        const auto& x = g.grid.x();
        const double h = g.grid.is_uniform() ? g.grid.spacing() : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dl = h > 0.0 ? static_cast<double>(i) * h : x[i];
            const double dr = h > 0.0 ? static_cast<double>(n - 1 - i) * h : 1.0 - x[i];
            double c = 1.0;
            if (dl < width) c *= 1.0 + (1.0 / (left * left) - 1.0) * std::pow(std::cos(0.5 * std::numbers::pi * dl / width), 2);
            if (dr < width) c *= 1.0 + (1.0 / (right * right) - 1.0) * std::pow(std::cos(0.5 * std::numbers::pi * dr / width), 2);
            bg.psi_x[i] *= c;
        }
    }
    return bg;
}

std::vector<double> deturck_field(const WarpedMetric& g, const ProfileDerivatives& d, const GaugeBackground& bg) {
    const std::size_t n = g.size();
    if (bg.phi.size() != n) throw GridMismatch("gauge background does not match grid");
    std::vector<double> xi(n, 0.0);
    const bool closed = g.grid.closed();
    const std::size_t lo = closed ? 1 : 0;
    const std::size_t hi = closed ? n - 1 : n;
    for (std::size_t i = lo; i < hi; ++i) {
        const double f = g.phi[i];
        const double p = g.psi[i];
        const double fb = bg.phi[i];
        const double pb = bg.psi[i];
        xi[i] = (d.phi_x[i] / f - bg.phi_x[i] / fb) / (f * f) - 2.0 * d.psi_x[i] / (p * f * f) +
                2.0 * pb * bg.psi_x[i] / (p * p * fb * fb);
    }
    return xi;
}

GaugedRhs gauged_rhs(const WarpedMetric& g, const GaugeBackground& bg, double psi_floor) {
    GaugedRhs out;
    out.derivatives = profile_derivatives(g);
    out.curvature = curvature(g, out.derivatives, psi_floor);
    out.rhs = ricci_rhs(g, out.curvature);
    const auto xi = deturck_field(g, out.derivatives, bg);
    const std::size_t n = g.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = xi[i] * g.phi[i];
    auto wx = g.grid.first_derivative(w, Parity::odd);
    // The principal part (phi_x/phi^2)_x is re-evaluated with the compact second difference.
    // Differencing phi twice with the wide first-derivative stencil leaves the grid-scale
    // zigzag of phi undamped.
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = out.derivatives.phi_x[i] / (g.phi[i] * g.phi[i]);
    const auto ax = g.grid.first_derivative(a, Parity::odd);
    const auto phi_xx = g.grid.second_derivative(g.phi, Parity::even);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = g.phi[i];
        const double fx = out.derivatives.phi_x[i];
        wx[i] += phi_xx[i] / (f * f) - 2.0 * fx * fx / (f * f * f) - ax[i];
    }
    const bool closed = g.grid.closed();
    for (std::size_t i = 0; i < n; ++i) {
        out.rhs.dphi[i] += wx[i];
        if (closed && (i == 0 || i == n - 1)) continue;
        out.rhs.dpsi[i] += xi[i] * out.derivatives.psi_x[i];
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// time stepping

namespace {

double min_cell(const WarpedMetric& g) {
    const std::size_t n = g.size();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.grid.segment_count(); ++i) {
        const double f = std::min(g.phi[i], g.phi[(i + 1) % n]);
        m = std::min(m, f * g.grid.segment_length(i));
    }
    return m;
}

bool basic_positivity(const WarpedMetric& g) {
    const std::size_t n = g.size();
    const bool closed = g.grid.closed();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(g.phi[i] > 0.0) || !std::isfinite(g.phi[i]) || !std::isfinite(g.psi[i])) return false;
        if (closed && (i == 0 || i == n - 1)) continue;
        if (!(g.psi[i] > 0.0)) return false;
    }
    return true;
}

// Solves a (possibly cyclic) tridiagonal system  a_i u_{i-1} + b_i u_i + c_i u_{i+1} = r_i.
std::vector<double> solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                      std::vector<double> r, bool cyclic) {
    const std::size_t n = b.size();
    auto thomas = [n](const std::vector<double>& aa, std::vector<double> bb, const std::vector<double>& cc,
                      std::vector<double> rr) {
        for (std::size_t i = 1; i < n; ++i) {
            const double m = aa[i] / bb[i - 1];
            bb[i] -= m * cc[i - 1];
            rr[i] -= m * rr[i - 1];
        }
        std::vector<double> u(n);
        u[n - 1] = rr[n - 1] / bb[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) u[i] = (rr[i] - cc[i] * u[i + 1]) / bb[i];
        return u;
    };
    if (!cyclic) return thomas(a, b, c, r);
    // Sherman-Morrison correction for the corner entries a_0 and c_{n-1}.
    const double alpha = c[n - 1];
    const double beta = a[0];
    const double gamma = -b[0];
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    a[0] = 0.0;
    c[n - 1] = 0.0;
    const auto x = thomas(a, b, c, r);
    std::vector<double> uu(n, 0.0);
    uu[0] = gamma;
    uu[n - 1] = alpha;
    const auto z = thomas(a, b, c, uu);
    const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
    return out;
}

// Linearly implicit Euler: the diffusive parts psi_xx/phi^2 and phi_xx/phi^2 are taken
// implicitly with a three-point operator, the remainder explicitly.
std::optional<WarpedMetric> semi_implicit_step(const WarpedMetric& g, double dt, const GaugedRhs& stage) {
    const std::size_t n = g.size();
    const bool closed = g.grid.closed();
    WarpedMetric out = g;
    for (int field = 0; field < 2; ++field) {
        const bool is_psi = field == 1;
        const auto& u = is_psi ? g.psi : g.phi;
        const auto& f = is_psi ? stage.rhs.dpsi : stage.rhs.dphi;
        std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), r(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const bool pole = closed && (i == 0 || i == n - 1);
            if (pole && is_psi) {
                r[i] = 0.0;
                continue;
            }
            double hl, hr;
            if (closed && i == 0) {
                hl = hr = g.grid.segment_length(0);
            } else if (closed && i == n - 1) {
                hl = hr = g.grid.segment_length(n - 2);
            } else {
                hl = g.grid.segment_length((i + n - 1) % n);
                hr = g.grid.segment_length(i);
            }
            const double k = 2.0 / ((hl + hr) * g.phi[i] * g.phi[i]);
            double wl = k / hl;
            double wr = k / hr;
            const double wc = -(wl + wr);
            // even ghosts at the poles fold the missing neighbour onto the existing one
            if (closed && i == 0) {
                wr += wl;
                wl = 0.0;
            } else if (closed && i == n - 1) {
                wl += wr;
                wr = 0.0;
            }
            const double ul = (closed && i == 0) ? 0.0 : u[(i + n - 1) % n];
            const double ur = (closed && i == n - 1) ? 0.0 : u[(i + 1) % n];
            const double au = wl * ul + wc * u[i] + wr * ur;
            a[i] = -dt * wl;
            b[i] = 1.0 - dt * wc;
            c[i] = -dt * wr;
            r[i] = u[i] + dt * (f[i] - au);
            if (closed && is_psi && i == 1) a[i] = 0.0;
            if (closed && is_psi && i == n - 2) c[i] = 0.0;
        }
        auto sol = solve_tridiagonal(a, b, c, r, !closed);
        if (is_psi && closed) {
            sol.front() = 0.0;
            sol.back() = 0.0;
        }
        (is_psi ? out.psi : out.phi) = std::move(sol);
    }
    out.time = g.time + dt;
    return out;
}

}  // namespace

double stable_dt(const WarpedMetric& g, const CurvatureField& c, const FlowParams& p) {
    const double kmax = c.max_abs();
    double dt = p.dt_max;
    if (kmax > 0.0) dt = std::min(dt, p.cfl / kmax);
    const double ds = min_cell(g);
    const double diffusive = (p.scheme == Scheme::semi_implicit ? 2.0 : 1.0) * std::min(p.cfl, 0.3) * ds * ds;
    return std::min(dt, diffusive);
}

std::optional<WarpedMetric> try_step(const WarpedMetric& g, double dt, const FlowParams& p, const GaugeBackground& bg,
                                     double psi_floor, const GaugedRhs* first_stage) {
    std::optional<GaugedRhs> own;
    try {
        if (!first_stage) {
            own = gauged_rhs(g, bg, psi_floor);
            first_stage = &*own;
        }
        const std::size_t n = g.size();
        std::optional<WarpedMetric> result;
        if (p.scheme == Scheme::semi_implicit) {
            result = semi_implicit_step(g, dt, *first_stage);
        } else {
            WarpedMetric mid = g;
            for (std::size_t i = 0; i < n; ++i) {
                mid.phi[i] = g.phi[i] + dt * first_stage->rhs.dphi[i];
                mid.psi[i] = g.psi[i] + dt * first_stage->rhs.dpsi[i];
            }
            mid.time = g.time + dt;
            if (!basic_positivity(mid)) return std::nullopt;
            const auto second = gauged_rhs(mid, bg, psi_floor);
            WarpedMetric out = g;
            for (std::size_t i = 0; i < n; ++i) {
                out.phi[i] = g.phi[i] + 0.5 * dt * (first_stage->rhs.dphi[i] + second.rhs.dphi[i]);
                out.psi[i] = g.psi[i] + 0.5 * dt * (first_stage->rhs.dpsi[i] + second.rhs.dpsi[i]);
            }
            out.time = g.time + dt;
            result = std::move(out);
        }
        if (!basic_positivity(*result)) return std::nullopt;
        if (find_violation(*result, ValidationOptions{p.pole_tol})) return std::nullopt;
        return result;
    } catch (const DegenerateGeometry&) {
        return std::nullopt;
    }
}

WarpedMetric step(const WarpedMetric& g, const FlowParams& p) {
    return step(g, p, make_gauge_background(g), max_psi(g));
}

WarpedMetric step(const WarpedMetric& g, const FlowParams& p, const GaugeBackground& bg, double psi_ref) {
    p.validate();
    validate(g, ValidationOptions{p.pole_tol});
    const double floor = psi_floor_for(psi_ref);
    const auto stage = gauged_rhs(g, bg, floor);
    double dt = stable_dt(g, stage.curvature, p);
    for (int halvings = 0; halvings <= 20; ++halvings) {
        if (auto out = try_step(g, dt, p, bg, floor, halvings == 0 ? &stage : nullptr)) return *out;
        dt *= 0.5;
    }
    throw SingularBreakdown("step failed after 20 halvings at t=" + std::to_string(g.time));
}

// ---------------------------------------------------------------------------------------------
// FlowStepper / evolve

double FlowTrajectory::extinction_time_estimate() const {
    if (diagnostics.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (diagnostics.size() < 2) return diagnostics.back().t;
    const auto& a = diagnostics[diagnostics.size() - 2];
    const auto& b = diagnostics.back();
    const double A = a.max_psi * a.max_psi;
    const double B = b.max_psi * b.max_psi;
    if (!(A > B)) return b.t;
    return b.t + B * (b.t - a.t) / (A - B);
}

FlowStepper::FlowStepper(WarpedMetric initial, FlowParams params, EvolveOptions opts)
    : state_(std::move(initial)), params_(params), opts_(std::move(opts)) {
    params_.validate();
    validate(state_, ValidationOptions{params_.pole_tol});
    psi_ref_ = opts_.psi_ref ? *opts_.psi_ref : max_psi(state_);
    psi_floor_ = psi_floor_for(psi_ref_);
    bg_ = make_gauge_background(state_);
}

double FlowStepper::evaluate() {
    stage_ = gauged_rhs(state_, bg_, psi_floor_);
    StepDiagnostics row;
    row.t = state_.time;
    row.dt = last_dt_;
    row.max_k = stage_->curvature.max_abs();
    row.min_psi = min_interior_psi(state_);
    row.max_psi = max_psi(state_);
    row.volume = volume(state_);
    row.roundness = stage_->curvature.roundness(state_.grid.closed());
    diag_.push_back(row);
    return stable_dt(state_, stage_->curvature, params_);
}

std::optional<Termination> FlowStepper::check_state() const {
    if (max_psi(state_) < params_.extinction_ratio * psi_ref_)
        return Termination{TerminationKind::extinction, state_.time, std::nullopt, {}};
    if (opts_.neck && stage_) {
        if (auto neck = find_neck(state_, stage_->curvature, stage_->derivatives, *opts_.neck))
            return Termination{TerminationKind::neck_singularity, state_.time, neck, {}};
    }
    return std::nullopt;
}

std::vector<NeckLocation> FlowStepper::necks() const {
    if (!opts_.neck || !stage_) return {};
    return find_necks(state_, stage_->curvature, stage_->derivatives, *opts_.neck);
}

void FlowStepper::advance_to(double t_target) {
    const double t0 = state_.time;
    double dt = t_target - t0;
    if (!(dt > 0.0)) return;
    int halvings = 0;
    bool first = true;
    while (state_.time < t_target) {
        const bool last = state_.time + dt >= t_target;
        const double h = last ? t_target - state_.time : dt;
        const GaugedRhs* stage = (first && stage_) ? &*stage_ : nullptr;
        auto next = try_step(state_, h, params_, bg_, psi_floor_, stage);
        first = false;
        if (!next) {
            if (++halvings > 20)
                throw SingularBreakdown("step failed after 20 halvings at t=" + std::to_string(state_.time));
            dt = 0.5 * h;
            continue;
        }
        if (last) next->time = t_target;
        state_ = std::move(*next);
    }
    stage_.reset();
    last_dt_ = t_target - t0;
    ++steps_;
}

void FlowStepper::rebase(WarpedMetric g) {
    validate(g, ValidationOptions{params_.pole_tol});
    state_ = std::move(g);
    bg_ = make_gauge_background(state_);
    stage_.reset();
}

void FlowStepper::snapshot() {
    if (slices_.empty() || state_.time > slices_.back().time) slices_.push_back(state_);
}

FlowTrajectory FlowStepper::finish(Termination term) {
    snapshot();
    FlowTrajectory t;
    t.slices = std::move(slices_);
    t.termination = std::move(term);
    t.diagnostics = std::move(diag_);
    t.psi_ref = psi_ref_;
    t.steps = steps_;
    slices_.clear();
    diag_.clear();
    return t;
}

FlowTrajectory evolve(const WarpedMetric& g, const FlowParams& p, const EvolveOptions& opts) {
    FlowStepper st(g, p, opts);
    st.snapshot();
    Termination term;
    for (;;) {
        double dt = 0.0;
        try {
            dt = st.evaluate();
        } catch (const DegenerateGeometry& e) {
            term = {TerminationKind::unresolved, st.time(), std::nullopt, e.what()};
            break;
        }
        if (auto s = st.check_state()) {
            term = *s;
            break;
        }
        if (st.time() >= p.t_max) {
            term = {TerminationKind::max_time, st.time(), std::nullopt, {}};
            break;
        }
        const double target = st.time() + dt >= p.t_max ? p.t_max : st.time() + dt;
        try {
            st.advance_to(target);
        } catch (const SingularBreakdown& e) {
            term = {TerminationKind::unresolved, st.time(), std::nullopt, e.what()};
            break;
        }
        if (st.steps() % p.snapshot_stride == 0) {
            const WarpedMetric prev = st.slices().back();
            st.snapshot();
            if (p.conv_tol > 0.0) {
                const double rate = metric_distance(prev, st.state()) / (st.time() - prev.time);
                if (rate < p.conv_tol) {
                    st.evaluate();
                    term = {TerminationKind::converged, st.time(), std::nullopt, {}};
                    break;
                }
            }
        }
    }
    return st.finish(std::move(term));
}

}  // namespace rsflow
