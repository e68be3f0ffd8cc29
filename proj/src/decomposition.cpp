#include "rsflow/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsflow {

std::string_view to_string(ComponentTag t) {
    switch (t) {
        case ComponentTag::extinct_round: return "extinct_round";
        case ComponentTag::converged_steady: return "converged_steady";
        case ComponentTag::unresolved: return "unresolved";
        case ComponentTag::unsupported_geometry: return "unsupported_geometry";
    }
    return "unresolved";
}

namespace {

// Mesh size entering the steady-state tolerance.
double mesh_size(const ProfileGrid& grid) {
    if (grid.is_uniform()) return grid.spacing();
    double h = 0.0;
    for (std::size_t i = 0; i < grid.segment_count(); ++i) h = std::max(h, grid.segment_length(i));
    return h;
}

// Constant-f soliton fit: lambda is the midrange of the Ricci eigenvalues, so the residual
// is half their spread.
void fit_steady(const WarpedMetric& g, ComponentClassification& out) {
    const auto c = curvature(g);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (double v : {2.0 * c.k1[i], c.k1[i] + c.k2[i]}) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    out.fitted_lambda = 0.5 * (lo + hi);
    out.soliton_residual = 0.5 * (hi - lo);
}

}  // namespace

ComponentClassification classify_component(const FlowTrajectory& trajectory) {
    ComponentClassification out;
    out.termination = trajectory.termination.kind;
    if (!trajectory.slices.empty()) out.topology = trajectory.slices.back().grid.topology();

    const auto& diag = trajectory.diagnostics;
    const std::size_t first = diag.size() > kRoundnessWindow ? diag.size() - kRoundnessWindow : 0;
    for (std::size_t i = first; i < diag.size(); ++i) out.roundness_trend.push_back(diag[i].roundness);
    out.roundness = diag.empty() ? std::numeric_limits<double>::infinity() : diag.back().roundness;

    switch (trajectory.termination.kind) {
        case TerminationKind::extinction: {
            out.extinction_time = trajectory.termination.time;
            if (out.roundness_trend.empty()) {
                out.reason = "extinction without diagnostics";
                return out;
            }
            if (!(out.roundness <= kRoundnessThreshold)) {
                out.reason = "final roundness " + std::to_string(out.roundness) + " above threshold";
                return out;
            }
            for (std::size_t i = 1; i < out.roundness_trend.size(); ++i) {
                if (!(out.roundness_trend[i] <= out.roundness_trend[i - 1] * kRoundnessThreshold)) {
                    out.reason = "roundness not settling over the final states";
                    return out;
                }
            }
            out.tag = ComponentTag::extinct_round;
            return out;
        }
        case TerminationKind::converged: {
            if (trajectory.slices.empty()) {
                out.reason = "converged without a final state";
                return out;
            }
            const auto& g = trajectory.slices.back();
            fit_steady(g, out);
            const double h = mesh_size(g.grid);
            const double scale = std::max(std::fabs(*out.fitted_lambda), std::numeric_limits<double>::min());
            if (*out.soliton_residual / scale >= 10.0 * h * h) {
                out.reason = "steady state is not Einstein within 10 h^2";
                return out;
            }
            if (*out.fitted_lambda < 0.0) {
                out.tag = ComponentTag::unsupported_geometry;
                out.reason = "negative Einstein constant";
                return out;
            }
            out.tag = ComponentTag::converged_steady;
            return out;
        }
        case TerminationKind::max_time: out.reason = "time horizon reached before a limit"; return out;
        case TerminationKind::neck_singularity: out.reason = "neck singularity without surgery"; return out;
        case TerminationKind::unresolved:
            out.reason = "numerical breakdown: " + trajectory.termination.detail;
            return out;
    }
    return out;
}

std::string signature_token(const ComponentClassification& c) {
    std::string base = c.topology == Topology::periodic ? "S2xS1" : "S3";
    switch (c.tag) {
        case ComponentTag::extinct_round: return base;
        case ComponentTag::converged_steady: return base + "[steady]";
        case ComponentTag::unresolved: return base + "[unresolved]";
        case ComponentTag::unsupported_geometry: return base + "[unsupported]";
    }
    return base;
}

DecompositionResult asymptotic_decomposition(const SingularSpacetime& st) {
    DecompositionResult res;
    res.event_count = st.events.size();
    std::vector<std::string> tokens;
    for (std::size_t id : st.leaves()) {
        auto c = classify_component(st.component_trajectory(id));
        if (st.components[id].unresolved && c.tag != ComponentTag::unresolved) {
            c.tag = ComponentTag::unresolved;
            c.reason = "flagged unresolved by the flow driver";
        }
        if (c.tag == ComponentTag::unresolved) ++res.unresolved_count;
        tokens.push_back(signature_token(c));
        res.components.emplace_back(id, std::move(c));
    }
    std::sort(tokens.begin(), tokens.end());
    for (std::size_t i = 0; i < tokens.size(); ++i) res.signature += (i ? "+" : "") + tokens[i];
    return res;
}

DecompositionMapReport decomposition_map(const SingularSpacetime& st1, const SingularSpacetime& st2,
                                         IsometryElement a, double tol) {
    DecompositionMapReport rep;
    const auto corr = induced_correspondence(st1, st2, a, tol);
    if (!corr.ok) {
        rep.failure = corr.failure;
        return rep;
    }
    const auto leaves1 = st1.leaves();
    const auto leaves2 = st2.leaves();
    const auto d1 = asymptotic_decomposition(st1);
    const auto d2 = asymptotic_decomposition(st2);
    auto classification = [](const DecompositionResult& d, std::size_t id) -> const ComponentClassification* {
        for (const auto& [cid, c] : d.components)
            if (cid == id) return &c;
        return nullptr;
    };
    auto last_state = [](const SingularSpacetime& st, std::size_t id) -> const WarpedMetric* {
        for (auto it = st.slices.rbegin(); it != st.slices.rend(); ++it)
            if (const auto* m = it->find(id)) return m;
        return nullptr;
    };

    for (const auto& [c1, c2] : corr.components) {
        const bool leaf1 = std::find(leaves1.begin(), leaves1.end(), c1) != leaves1.end();
        const bool leaf2 = std::find(leaves2.begin(), leaves2.end(), c2) != leaves2.end();
        if (leaf1 != leaf2) {
            rep.failure = "component " + std::to_string(c1) + " is a leaf on one side only";
            return rep;
        }
        if (!leaf1) continue;
        const auto* k1 = classification(d1, c1);
        const auto* k2 = classification(d2, c2);
        if (!k1 || !k2 || k1->tag != k2->tag || k1->topology != k2->topology) {
            rep.failure = "classification of leaf " + std::to_string(c1) + " is not preserved";
            return rep;
        }
        const auto* m1 = last_state(st1, c1);
        const auto* m2 = last_state(st2, c2);
        if (!m1 || !m2 || !(m1->grid == m2->grid)) {
            rep.failure = "final states of leaf " + std::to_string(c1) + " are not comparable";
            return rep;
        }
        double d = 0.0;
        try {
            d = metric_distance(apply_isometry(*m1, a), *m2);
        } catch (const InvalidArgument& e) {
            rep.failure = e.what();
            return rep;
        }
        rep.max_final_drift = std::max(rep.max_final_drift, d);
        rep.leaves.emplace_back(c1, c2);
    }
    if (rep.leaves.size() != leaves1.size() || leaves1.size() != leaves2.size()) {
        rep.failure = "leaf correspondence is not a bijection";
        return rep;
    }
    if (rep.max_final_drift > tol) {
        rep.failure = "final leaf metrics differ under the isometry (" + std::to_string(rep.max_final_drift) + ")";
        return rep;
    }
    rep.ok = true;
    return rep;
}

}  // namespace rsflow
