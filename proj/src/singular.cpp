#include "rsflow/singular.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <numbers>

namespace rsflow {

SurgeryParams SurgeryParams::resolved(const WarpedMetric& initial) const {
    SurgeryParams out = *this;
    if (!out.rho_surg) out.rho_surg = kDefaultRhoRatio * max_psi(initial);
    return out;
}

void SurgeryParams::validate(double psi_floor) const {
    if (!rho_surg) throw InvalidArgument("rho_surg has not been resolved");
    if (!(*rho_surg > psi_floor)) throw InvalidArgument("rho_surg must exceed the psi floor");
    if (!(excision_margin >= 2.0)) throw InvalidArgument("excision_margin must be at least 2");
    if (!(cap_blend > 0.0)) throw InvalidArgument("cap_blend must be positive");
    if (!(cylindricity_tol > 0.0 && cylindricity_tol < 1.0)) throw InvalidArgument("cylindricity_tol must lie in (0,1)");
    if (!(regrid_ratio >= 0.0 && regrid_ratio < 1.0)) throw InvalidArgument("regrid_ratio must lie in [0,1)");
    if (!(nodes_per_radius > 0.0)) throw InvalidArgument("nodes_per_radius must be positive");
}

NeckCriteria SurgeryParams::criteria() const {
    NeckCriteria c;
    c.rho = rho_surg.value_or(0.0);
    c.cylindricity_tol = cylindricity_tol;
    return c;
}

std::optional<NeckLocation> detect_neck(const WarpedMetric& g, const SurgeryParams& sp) {
    return find_neck(g, sp.resolved(g).criteria());
}

// ---------------------------------------------------------------------------------------------
// surgery

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kParallelNodes = 4000;  // below this, threads cost more than they save

// psi and its arclength slope sampled along one side of the neck, with s measured from the
// start of the side.
struct Samples {
    std::vector<double> s, psi, slope;

    // cubic Hermite interpolation in s
    double operator()(double sigma) const {
        const std::size_t m = s.size();
        std::size_t k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), sigma) - s.begin());
        k = std::clamp<std::size_t>(k, 1, m - 1) - 1;
        const double h = s[k + 1] - s[k];
        const double t = (sigma - s[k]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * psi[k] + (t3 - 2 * t2 + t) * h * slope[k] + (-2 * t3 + 3 * t2) * psi[k + 1] +
               (t3 - t2) * h * slope[k + 1];
    }
};

std::size_t odd_node_count(double n) {
    auto m = static_cast<std::size_t>(std::max(101.0, std::round(n)));
    return m % 2 == 0 ? m + 1 : m;
}

// Builds a closed child from the piece [lo, hi] of a side.  cap_lo / cap_hi glue a quarter-sine
// cap at that end; otherwise the end is an existing pole.  Returns nothing when the piece is too
// short to carry its blends.
std::optional<WarpedMetric> build_child(const Samples& S, double lo, double hi, bool cap_lo, bool cap_hi,
                                        const SurgeryParams& sp, double density) {
    const double psi_lo = cap_lo ? S(lo) : 0.0;
    const double psi_hi = cap_hi ? S(hi) : 0.0;
    if ((cap_lo && !(psi_lo > 0.0)) || (cap_hi && !(psi_hi > 0.0))) return std::nullopt;
    const double b_lo = cap_lo ? sp.cap_blend * psi_lo : 0.0;
    const double b_hi = cap_hi ? sp.cap_blend * psi_hi : 0.0;
    const double keep = hi - lo - b_lo - b_hi;
    if (!(keep >= std::max(psi_lo, psi_hi))) return std::nullopt;

    const double c_lo = cap_lo ? 0.5 * kPi * psi_lo : 0.0;
    const double c_hi = cap_hi ? 0.5 * kPi * psi_hi : 0.0;
    const double Lc = c_lo + (hi - lo) + c_hi;
    const double r_min = std::min(cap_lo ? psi_lo : Lc, cap_hi ? psi_hi : Lc);
    const std::size_t n = odd_node_count(std::max(density, sp.nodes_per_radius / r_min) * Lc);

    WarpedMetric child;
    child.grid = ProfileGrid::uniform(n);
    child.phi.assign(n, Lc);
    child.psi.assign(n, 0.0);
    const double h = child.grid.spacing();
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double u = static_cast<double>(j) * h * Lc;
        double v;
        if (cap_lo && u <= c_lo) {
            v = psi_lo * std::sin(u / psi_lo);
        } else if (cap_hi && u >= Lc - c_hi) {
            v = psi_hi * std::sin((Lc - u) / psi_hi);
        } else {
            const double sigma = lo + (u - c_lo);
            v = S(sigma);
            if (cap_lo && sigma < lo + b_lo) {
                const double w = 0.5 * (1.0 + std::cos(kPi * (sigma - lo) / b_lo));
                v = (1.0 - w) * v + w * psi_lo;
            }
            if (cap_hi && sigma > hi - b_hi) {
                const double w = 0.5 * (1.0 + std::cos(kPi * (hi - sigma) / b_hi));
                v = (1.0 - w) * v + w * psi_hi;
            }
        }
        child.psi[j] = v;
    }
    if (find_violation(child)) return std::nullopt;
    return child;
}

// New node count when a closed component needs resampling: its grid is compressed, too coarse
// for the current curvature, or far finer than needed.
std::optional<std::size_t> regrid_size(const WarpedMetric& g, double max_k, double base_density,
                                       const SurgeryParams& sp) {
    if (!g.grid.closed()) return std::nullopt;
    const double L = total_length(g);
    const double wanted = std::max(base_density, sp.nodes_per_radius * std::sqrt(max_k)) * L;
    const std::size_t target = odd_node_count(wanted);
    const std::size_t n = g.size();
    const bool compressed = grid_compression(g) < sp.regrid_ratio;
    const bool coarse = 2 * target > 3 * n;
    const bool fine = 2 * target < n;
    if (!compressed && !coarse && !fine) return std::nullopt;
    return target;
}

Samples side_samples(const WarpedMetric& g, const ProfileDerivatives& d, bool from_right) {
    const std::size_t n = g.size();
    Samples S;
    S.s.assign(n, 0.0);
    S.psi.resize(n);
    S.slope.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = from_right ? n - 1 - j : j;
        S.psi[j] = g.psi[i];
        S.slope[j] = from_right ? -d.psi_s[i] : d.psi_s[i];
        if (j > 0) {
            const std::size_t prev = from_right ? i + 1 : i - 1;
            const std::size_t seg = from_right ? i : i - 1;
            S.s[j] = S.s[j - 1] + 0.5 * (g.phi[prev] + g.phi[i]) * g.grid.segment_length(seg);
        }
    }
    return S;
}

}  // namespace

WarpedMetric resample_by_arclength(const WarpedMetric& g, std::size_t n) {
    validate(g);
    if (!g.grid.closed()) throw InvalidArgument("arclength resampling needs a closed component");
    if (n < 5) throw InvalidArgument("resampling needs at least 5 nodes");
    const auto d = profile_derivatives(g);
    const Samples left = side_samples(g, d, false);
    const Samples right = side_samples(g, d, true);
    const double L = 0.5 * (left.s.back() + right.s.back());
    const double h = L / static_cast<double>(n - 1);

    WarpedMetric out;
    out.grid = ProfileGrid::uniform(n);
    out.phi.assign(n, L);
    out.psi.assign(n, 0.0);
    out.time = g.time;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const std::size_t jr = n - 1 - j;
        if (j < jr) {
            out.psi[j] = left(static_cast<double>(j) * h);
        } else if (j > jr) {
            out.psi[j] = right(static_cast<double>(jr) * h);
        } else {
            out.psi[j] = 0.5 * (left(static_cast<double>(j) * h) + right(static_cast<double>(jr) * h));
        }
    }
    return out;
}

double grid_compression(const WarpedMetric& g) {
    validate(g);
    const std::size_t n = g.size();
    const std::size_t m = g.grid.segment_count();
    std::vector<double> seg(m);
    for (std::size_t i = 0; i < m; ++i) seg[i] = 0.5 * (g.phi[i] + g.phi[(i + 1) % n]) * g.grid.segment_length(i);
    // summing from both ends keeps the result identical under reflection
    double fwd = 0.0, bwd = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        fwd += seg[i];
        bwd += seg[m - 1 - i];
    }
    const double L = 0.5 * (fwd + bwd);
    return *std::min_element(seg.begin(), seg.end()) / (L / static_cast<double>(m));
}

SurgeryResult perform_surgery(const WarpedMetric& g, const NeckLocation& neck, const SurgeryParams& sp) {
    validate(g);
    const std::size_t n = g.size();
    if (neck.node >= n) throw MalformedNeck("neck node outside the grid");
    const auto d = profile_derivatives(g);
    const double half = sp.excision_margin * neck.psi_min;
    const double L = total_length(g);
    const double density = static_cast<double>(g.grid.segment_count()) / L;
    const auto s = arclength(g);

    SurgeryResult out;
    out.s_lo = s[neck.node] - half;
    out.s_hi = s[neck.node] + half;

    if (g.grid.closed()) {
        if (neck.node == 0 || neck.node == n - 1) throw MalformedNeck("neck located at a pole");
        const Samples left = side_samples(g, d, false);
        const Samples right = side_samples(g, d, true);
        const double cut_left = left.s[neck.node] - half;
        const double cut_right = right.s[n - 1 - neck.node] - half;
        std::optional<WarpedMetric> a, b;
        if (cut_left > 0.0) a = build_child(left, 0.0, cut_left, false, true, sp, density);
        if (cut_right > 0.0) b = build_child(right, 0.0, cut_right, false, true, sp, density);
        if (!a && !b) throw MalformedNeck("neck too close to both poles to cap either side");
        out.dropped_left = !a;
        out.dropped_right = !b;
        if (a) out.children.push_back(std::move(*a));
        if (b) {
            std::reverse(b->psi.begin(), b->psi.end());
            out.children.push_back(std::move(*b));
        }
    } else {
        // periodic: the complement of the excised interval is one piece with two new caps
        Samples S;
        for (std::size_t j = 0; j <= n; ++j) {
            const std::size_t i = (neck.node + j) % n;
            S.psi.push_back(g.psi[i]);
            S.slope.push_back(d.psi_s[i]);
            if (j == 0) {
                S.s.push_back(0.0);
            } else {
                const std::size_t prev = (i + n - 1) % n;
                S.s.push_back(S.s.back() + 0.5 * (g.phi[prev] + g.phi[i]) * g.grid.segment_length(prev));
            }
        }
        auto c = build_child(S, half, S.s.back() - half, true, true, sp, density);
        if (!c) throw MalformedNeck("periodic component too short to cap");
        out.children.push_back(std::move(*c));
    }
    for (auto& c : out.children) c.time = g.time;
    return out;
}

// ---------------------------------------------------------------------------------------------
// spacetime

const WarpedMetric* SpacetimeSlice::find(std::size_t id) const {
    for (const auto& [cid, m] : components)
        if (cid == id) return &m;
    return nullptr;
}

std::vector<std::vector<std::size_t>> SingularSpacetime::genealogy() const {
    std::vector<std::vector<std::size_t>> g(components.size());
    for (const auto& c : components)
        if (c.parent) g[*c.parent].push_back(c.id);
    return g;
}

std::vector<std::size_t> SingularSpacetime::leaves() const {
    const auto g = genealogy();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i].empty()) out.push_back(i);
    return out;
}

const SurgeryEvent* SingularSpacetime::event_of(std::size_t parent) const {
    for (const auto& e : events)
        if (e.parent == parent) return &e;
    return nullptr;
}

FlowTrajectory SingularSpacetime::component_trajectory(std::size_t id) const {
    if (id >= components.size()) throw InvalidArgument("unknown component id " + std::to_string(id));
    FlowTrajectory t;
    for (const auto& s : slices)
        if (const auto* m = s.find(id)) t.slices.push_back(*m);
    const auto& c = components[id];
    t.termination = c.termination;
    t.diagnostics = c.diagnostics;
    t.psi_ref = c.psi_ref;
    t.steps = c.steps;
    return t;
}

std::vector<std::string> SingularSpacetime::check_invariants(double curvature_constant) const {
    std::vector<std::string> bad;
    for (std::size_t k = 1; k < slices.size(); ++k)
        if (!(slices[k].time > slices[k - 1].time)) bad.push_back("slice times not strictly increasing at " + std::to_string(k));
    for (const auto& s : slices) {
        for (const auto& [id, m] : s.components) {
            if (id >= components.size()) {
                bad.push_back("slice references unknown component " + std::to_string(id));
                continue;
            }
            std::size_t c = id;
            std::size_t guard = 0;
            while (components[c].parent && guard++ < components.size()) c = *components[c].parent;
            if (c != 0) bad.push_back("component " + std::to_string(id) + " does not trace to the root");
        }
    }
    for (const auto& e : events) {
        if (e.children.empty() || e.children.size() > 2) bad.push_back("event with invalid child count");
        const SpacetimeSlice* first = nullptr;
        for (const auto& s : slices)
            if (s.time >= e.time) {
                first = &s;
                break;
            }
        for (std::size_t c : e.children)
            if (!first || !first->find(c)) bad.push_back("child " + std::to_string(c) + " missing from first post-event slice");
        for (const auto& s : slices)
            if (s.time >= e.time && s.find(e.parent)) bad.push_back("parent " + std::to_string(e.parent) + " survives its surgery");
        if (!(e.volume_after < e.volume_before)) bad.push_back("surgery did not remove volume at t=" + std::to_string(e.time));
        const double rho = surgery.rho_surg.value_or(e.neck_radius);
        if (e.max_child_curvature > curvature_constant / (rho * rho))
            bad.push_back("child curvature exceeds C/rho^2 after event at t=" + std::to_string(e.time));
    }
    // each component occupies a contiguous run of slices
    for (const auto& c : components) {
        bool seen = false, ended = false;
        for (const auto& s : slices) {
            const bool here = s.find(c.id) != nullptr;
            if (here && ended) bad.push_back("component " + std::to_string(c.id) + " reappears after leaving");
            if (here) seen = true;
            if (!here && seen) ended = true;
        }
    }
    return bad;
}

bool operator==(const SingularSpacetime& a, const SingularSpacetime& b) {
    return a.slices == b.slices && a.events == b.events && a.components == b.components;
}

SingularSpacetime run_singular_flow(const WarpedMetric& initial, const FlowParams& fp, const SurgeryParams& sp_in) {
    fp.validate();
    validate(initial, ValidationOptions{fp.pole_tol});
    const double psi_ref = max_psi(initial);
    const SurgeryParams sp = sp_in.resolved(initial);
    sp.validate(psi_floor_for(psi_ref));
    const double rho = *sp.rho_surg;

    SingularSpacetime st;
    st.flow = fp;
    st.surgery = sp;
    EvolveOptions eo;
    eo.neck = sp.criteria();
    eo.psi_ref = psi_ref;

    double density = 0.0;
    struct Live {
        std::size_t id;
        std::unique_ptr<FlowStepper> stepper;
        double density;  ///< nodes per unit length of the root
        double dt = std::numeric_limits<double>::infinity();
        bool done = false;
    };
    std::vector<Live> live;

    auto spawn = [&](WarpedMetric m, std::optional<std::size_t> parent) {
        const std::size_t id = st.components.size();
        ComponentRecord rec;
        rec.id = id;
        rec.parent = parent;
        rec.birth_time = m.time;
        rec.psi_ref = psi_ref;
        st.components.push_back(rec);
        if (!parent) density = static_cast<double>(m.grid.segment_count()) / total_length(m);
        live.push_back(Live{id, std::make_unique<FlowStepper>(std::move(m), fp, eo), density});
        return id;
    };
    auto finish = [&](Live& l, Termination term) {
        auto traj = l.stepper->finish(term);
        auto& rec = st.components[l.id];
        rec.termination = std::move(term);
        rec.diagnostics = std::move(traj.diagnostics);
        rec.steps = traj.steps;
        rec.unresolved = rec.termination.kind == TerminationKind::unresolved;
        l.done = true;
    };
    auto record_slice = [&](double t, std::vector<std::pair<std::size_t, WarpedMetric>> comps) {
        std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (!st.slices.empty() && st.slices.back().time == t) {
            st.slices.back().components = std::move(comps);
        } else {
            st.slices.push_back(SpacetimeSlice{t, std::move(comps)});
        }
    };

    spawn(initial, std::nullopt);
    double t = initial.time;
    std::size_t step = 0;
    for (;;) {
        bool force_slice = step == 0;
        std::vector<std::pair<std::size_t, WarpedMetric>> finals;
        for (std::size_t k = 0; k < live.size(); ++k) {
            if (live[k].done) continue;
            if (sp.regrid_ratio > 0.0 && st.components[live[k].id].parent && !live[k].stepper->diagnostics().empty()) {
                const auto& cur = live[k].stepper->state();
                if (auto m = regrid_size(cur, live[k].stepper->diagnostics().back().max_k, live[k].density, sp)) {
                    live[k].stepper->rebase(resample_by_arclength(cur, *m));
                    st.components[live[k].id].regrid_times.push_back(t);
                }
            }
            try {
                live[k].dt = live[k].stepper->evaluate();
            } catch (const DegenerateGeometry& e) {
                finals.emplace_back(live[k].id, live[k].stepper->state());
                finish(live[k], Termination{TerminationKind::unresolved, t, std::nullopt, e.what()});
                force_slice = true;
                continue;
            }
            auto term = live[k].stepper->check_state();
            if (!term) continue;
            force_slice = true;
            const WarpedMetric state = live[k].stepper->state();
            if (term->kind != TerminationKind::neck_singularity) {
                finals.emplace_back(live[k].id, state);
                finish(live[k], *term);
                continue;
            }
            if (max_psi(state) < rho) {
                finals.emplace_back(live[k].id, state);
                finish(live[k], Termination{TerminationKind::extinction, t, term->neck,
                                            "entire component below the surgery radius"});
                continue;
            }
            const auto necks = live[k].stepper->necks();
            const NeckLocation neck = necks.empty() ? *term->neck : necks.front();
            SurgeryResult res;
            try {
                res = perform_surgery(state, neck, sp);
            } catch (const MalformedNeck& e) {
                finals.emplace_back(live[k].id, state);
                finish(live[k], Termination{TerminationKind::unresolved, t, neck, e.what()});
                continue;
            }
            SurgeryEvent ev;
            ev.time = t;
            ev.parent = live[k].id;
            ev.neck_interval = {res.s_lo, res.s_hi};
            ev.neck_radius = neck.psi_min;
            ev.neck_node = neck.node;
            ev.volume_before = volume(state);
            ev.parent_state = state;
            finish(live[k], Termination{TerminationKind::neck_singularity, t, neck, {}});
            for (auto& child : res.children) {
                ev.volume_after += volume(child);
                try {
                    ev.max_child_curvature = std::max(ev.max_child_curvature, curvature(child, psi_floor_for(psi_ref)).max_abs());
                } catch (const DegenerateGeometry&) {
                    ev.max_child_curvature = std::numeric_limits<double>::infinity();
                }
                ev.children.push_back(spawn(std::move(child), ev.parent));
            }
            st.events.push_back(std::move(ev));
        }
        if (t >= fp.t_max) {
            for (auto& l : live) {
                if (l.done) continue;
                finish(l, Termination{TerminationKind::max_time, t, std::nullopt, {}});
                finals.emplace_back(l.id, l.stepper->state());
            }
            force_slice = true;
        }
        std::vector<Live> still;
        std::vector<std::pair<std::size_t, WarpedMetric>> current = std::move(finals);
        for (auto& l : live) {
            if (l.done) continue;
            current.emplace_back(l.id, l.stepper->state());
            still.push_back(std::move(l));
        }
        live = std::move(still);
        if (force_slice || live.empty() || step % fp.snapshot_stride == 0) record_slice(t, std::move(current));
        if (live.empty()) break;

        double dt = std::numeric_limits<double>::infinity();
        for (const auto& l : live) dt = std::min(dt, l.dt);
        const double target = t + dt >= fp.t_max ? fp.t_max : t + dt;

        std::vector<WarpedMetric> before;
        before.reserve(live.size());
        for (const auto& l : live) before.push_back(l.stepper->state());
        std::vector<std::string> failure(live.size());
        auto advance = [&](std::size_t k) {
            try {
                live[k].stepper->advance_to(target);
            } catch (const SingularBreakdown& e) {
                failure[k] = e.what();
            }
        };
        std::size_t total_nodes = 0;
        for (const auto& l : live) total_nodes += l.stepper->state().size();
        if (live.size() == 1 || total_nodes < kParallelNodes) {
            for (std::size_t k = 0; k < live.size(); ++k) advance(k);
        } else {
            std::vector<std::future<void>> jobs;
            for (std::size_t k = 0; k < live.size(); ++k) jobs.push_back(std::async(std::launch::async, advance, k));
            for (auto& j : jobs) j.get();
        }
        bool any_failed = false;
        for (std::size_t k = 0; k < live.size(); ++k) any_failed = any_failed || !failure[k].empty();
        if (any_failed) {
            // keep the last valid state of the failed components in a slice at the current time
            std::vector<std::pair<std::size_t, WarpedMetric>> at_t;
            for (std::size_t k = 0; k < live.size(); ++k) at_t.emplace_back(live[k].id, before[k]);
            record_slice(t, std::move(at_t));
            for (std::size_t k = 0; k < live.size(); ++k)
                if (!failure[k].empty()) finish(live[k], Termination{TerminationKind::unresolved, t, std::nullopt, failure[k]});
            std::erase_if(live, [](const Live& l) { return l.done; });
            if (live.empty()) break;
        }
        t = target;
        ++step;
    }
    return st;
}

// ---------------------------------------------------------------------------------------------
// isometry checks

SpacetimeCorrespondence induced_correspondence(const SingularSpacetime& st1, const SingularSpacetime& st2,
                                               IsometryElement a, double tol) {
    SpacetimeCorrespondence out;
    if (st1.slices.empty() || st2.slices.empty()) {
        out.failure = "empty spacetime";
        return out;
    }
    const auto* r1 = st1.slices.front().find(0);
    const auto* r2 = st2.slices.front().find(0);
    if (!r1 || !r2) {
        out.failure = "root component missing from the first slice";
        return out;
    }
    if (!(r1->grid == r2->grid)) {
        out.failure = "root slices live on different grids";
        return out;
    }
    const double d = metric_distance(apply_isometry(*r1, a), *r2);
    if (d > tol) {
        out.failure = "isometry does not map the root slice (distance " + std::to_string(d) + ")";
        return out;
    }
    std::vector<std::pair<std::size_t, std::size_t>> queue{{0, 0}};
    for (std::size_t q = 0; q < queue.size(); ++q) {
        const auto [c1, c2] = queue[q];
        out.components.push_back({c1, c2});
        const auto* e1 = st1.event_of(c1);
        const auto* e2 = st2.event_of(c2);
        if (!e1 && !e2) continue;
        if (!e1 || !e2) {
            out.failure = "event structure differs at component " + std::to_string(c1);
            return out;
        }
        if (std::fabs(e1->time - e2->time) > tol * std::max(1.0, std::fabs(e1->time))) {
            out.failure = "surgery times differ at component " + std::to_string(c1);
            return out;
        }
        if (e1->children.size() != e2->children.size()) {
            out.failure = "child counts differ at the event of component " + std::to_string(c1);
            return out;
        }
        const bool swap = !a.is_identity() && e1->parent_state.grid.closed();
        const std::size_t m = e1->children.size();
        for (std::size_t j = 0; j < m; ++j) queue.push_back({e1->children[j], e2->children[swap ? m - 1 - j : j]});
    }
    std::sort(out.components.begin(), out.components.end());
    out.ok = true;
    return out;
}

AutomorphismReport spacetime_isometry_check(const SingularSpacetime& st, IsometryElement a, double tol) {
    AutomorphismReport rep;
    const auto corr = induced_correspondence(st, st, a, tol);
    rep.permutation = corr.components;
    if (!corr.ok) {
        rep.failure = corr.failure;
        return rep;
    }
    for (const auto& s : st.slices) {
        for (const auto& [id, m] : s.components) {
            auto it = std::find_if(corr.components.begin(), corr.components.end(),
                                   [&](const auto& p) { return p.first == id; });
            if (it == corr.components.end()) {
                rep.failure = "component " + std::to_string(id) + " has no image";
                return rep;
            }
            const auto* img = s.find(it->second);
            if (!img) {
                rep.failure = "image of component " + std::to_string(id) + " missing at t=" + std::to_string(s.time);
                return rep;
            }
            if (!(img->grid == m.grid)) {
                rep.failure = "image of component " + std::to_string(id) + " lives on a different grid";
                return rep;
            }
            rep.max_drift = std::max(rep.max_drift, metric_distance(m, apply_isometry(*img, a)));
        }
    }
    rep.is_automorphism = rep.max_drift <= tol;
    if (!rep.is_automorphism) rep.failure = "slices drift under the isometry (" + std::to_string(rep.max_drift) + ")";
    return rep;
}

}  // namespace rsflow
