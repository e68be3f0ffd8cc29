#include "rsflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace rsflow {

std::string_view to_string(InitialMetricSpec::Kind k) {
    switch (k) {
        case InitialMetricSpec::Kind::round_sphere: return "round_sphere";
        case InitialMetricSpec::Kind::cylinder: return "cylinder";
        case InitialMetricSpec::Kind::dumbbell: return "dumbbell";
    }
    return "dumbbell";
}

InitialMetricSpec::Kind initial_kind_from_string(std::string_view name) {
    if (name == "round_sphere") return InitialMetricSpec::Kind::round_sphere;
    if (name == "cylinder") return InitialMetricSpec::Kind::cylinder;
    if (name == "dumbbell") return InitialMetricSpec::Kind::dumbbell;
    throw InvalidArgument("unknown initial metric kind '" + std::string(name) + "'");
}

WarpedMetric InitialMetricSpec::build() const {
    switch (kind) {
        case Kind::round_sphere: return make_round_sphere(radius, n);
        case Kind::cylinder: return make_cylinder(radius, length, n);
        case Kind::dumbbell: return make_dumbbell(neck, lobe, n, symmetric);
    }
    throw InvalidArgument("unknown initial metric kind");
}

// ---------------------------------------------------------------------------------------------

namespace {

std::optional<std::size_t> first_differing_slice(const SingularSpacetime& a, const SingularSpacetime& b) {
    const std::size_t m = std::min(a.slices.size(), b.slices.size());
    for (std::size_t k = 0; k < m; ++k)
        if (!(a.slices[k] == b.slices[k])) return k;
    if (a.slices.size() != b.slices.size()) return m;
    return std::nullopt;
}

using Correspondence = std::vector<std::pair<std::size_t, std::size_t>>;

// Slice-by-slice check that a carries st1 onto st2 under the component correspondence.
// Returns the index of the first slice that is not carried over bit for bit.
std::optional<std::size_t> map_mismatch(const SingularSpacetime& st1, const SingularSpacetime& st2, IsometryElement a,
                                        const Correspondence& corr) {
    if (st1.slices.size() != st2.slices.size()) return std::min(st1.slices.size(), st2.slices.size());
    for (std::size_t k = 0; k < st1.slices.size(); ++k) {
        const auto& s1 = st1.slices[k];
        const auto& s2 = st2.slices[k];
        if (s1.time != s2.time || s1.components.size() != s2.components.size()) return k;
        for (const auto& [id, m] : s1.components) {
            auto it = std::find_if(corr.begin(), corr.end(), [&](const auto& p) { return p.first == id; });
            if (it == corr.end()) return k;
            const auto* img = s2.find(it->second);
            if (!img || !(img->grid == m.grid) || !(apply_isometry(m, a) == *img)) return k;
        }
    }
    return std::nullopt;
}

Correspondence compose(const Correspondence& second, const Correspondence& first) {
    Correspondence out;
    for (const auto& [a, b] : first) {
        auto it = std::find_if(second.begin(), second.end(), [&](const auto& p) { return p.first == b; });
        if (it != second.end()) out.emplace_back(a, it->second);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool is_identity_map(const Correspondence& c) {
    return std::all_of(c.begin(), c.end(), [](const auto& p) { return p.first == p.second; });
}

void note_divergence(FunctorLawReport& rep, std::optional<std::size_t> k) {
    if (k && (!rep.first_divergent_slice || *k < *rep.first_divergent_slice)) rep.first_divergent_slice = k;
}

}  // namespace

FunctorLawReport functor_law_suite(const WarpedMetric& base, const FlowParams& fp, const SurgeryParams& sp) {
    const auto r = IsometryElement::reflection();
    const auto id = IsometryElement::identity();
    if (!base.grid.is_reflection_symmetric() || metric_distance(apply_isometry(base, r), base) > 1e-12)
        throw PreconditionFailed("functor laws need a reflection-symmetric base metric");

    FunctorLawReport rep;
    const auto st = run_singular_flow(base, fp, sp);
    rep.signature = asymptotic_decomposition(st).signature;

    const auto st_id = run_singular_flow(apply_isometry(base, id), fp, sp);
    const auto corr_id = induced_correspondence(st, st_id, id, 0.0);
    const auto div_id = first_differing_slice(st, st_id);
    note_divergence(rep, div_id);
    rep.identity_ok = !div_id && corr_id.ok && is_identity_map(corr_id.components);
    if (!rep.identity_ok)
        rep.failures.push_back(!corr_id.ok ? "identity: " + corr_id.failure
                                           : "identity: pulled-back run differs from the base run");

    const auto base_r = apply_isometry(base, r);
    const auto st_r = run_singular_flow(base_r, fp, sp);
    const auto st_rr = run_singular_flow(apply_isometry(base_r, r), fp, sp);
    const auto corr_r = induced_correspondence(st, st_r, r, 0.0);
    const auto corr_rr = induced_correspondence(st_r, st_rr, r, 0.0);
    const auto corr_direct = induced_correspondence(st, st_rr, id, 0.0);
    rep.reflection_permutation = corr_r.components;
    if (!corr_r.ok || !corr_rr.ok || !corr_direct.ok) {
        rep.failures.push_back("composition: " + (!corr_r.ok ? corr_r.failure
                                                  : !corr_rr.ok ? corr_rr.failure
                                                                : corr_direct.failure));
    } else {
        const auto m1 = map_mismatch(st, st_r, r, corr_r.components);
        const auto m2 = map_mismatch(st_r, st_rr, r, corr_rr.components);
        const auto m3 = map_mismatch(st, st_rr, id, corr_direct.components);
        note_divergence(rep, m1);
        note_divergence(rep, m2);
        note_divergence(rep, m3);
        const bool same_map = compose(corr_rr.components, corr_r.components) == corr_direct.components &&
                              is_identity_map(corr_direct.components);
        rep.composition_ok = same_map && !m1 && !m2 && !m3;
        if (!same_map) rep.failures.push_back("composition: reflection twice does not induce the identity");
        if (m1 || m2 || m3) rep.failures.push_back("composition: a slice is not carried over by the induced map");
    }

    if (corr_r.ok && is_identity_map(corr_r.components)) {
        rep.injectivity_skipped = true;
        rep.skip_reason = "reflection fixes every component and its slices, so it induces the same spacetime map "
                          "as the identity";
    } else if (corr_r.ok && corr_id.ok) {
        rep.injectivity_ok = corr_r.components != corr_id.components;
        if (!rep.injectivity_ok) rep.failures.push_back("injectivity: reflection and identity induce the same map");
    } else {
        rep.failures.push_back("injectivity: correspondences unavailable");
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------

std::string_view to_string(PerturbationMode m) {
    switch (m) {
        case PerturbationMode::neck_radius: return "neck_radius";
        case PerturbationMode::lobe_radius: return "lobe_radius";
        case PerturbationMode::profile_bump: return "profile_bump";
    }
    return "profile_bump";
}

PerturbationMode perturbation_from_string(std::string_view name) {
    if (name == "neck_radius") return PerturbationMode::neck_radius;
    if (name == "lobe_radius") return PerturbationMode::lobe_radius;
    if (name == "profile_bump") return PerturbationMode::profile_bump;
    throw InvalidArgument("unknown perturbation mode '" + std::string(name) + "'");
}

void SweepConfig::validate() const {
    if (!(epsilon >= 0.0) || !(epsilon < 1.0)) throw InvalidArgument("sweep epsilon must lie in [0, 1)");
    if (samples < 2) throw InvalidArgument("sweep needs at least 2 samples");
}

std::vector<std::array<double, 3>> perturbation_directions(std::uint64_t seed, std::size_t samples) {
    // The engine output is portable; the conversion to [-1, 1) is done by hand because the
    // standard distributions are implementation defined.
    std::mt19937_64 rng(seed);
    std::vector<std::array<double, 3>> out(samples);
    for (auto& c : out) {
        double total = 0.0;
        do {
            total = 0.0;
            for (double& v : c) {
                v = 2.0 * std::ldexp(static_cast<double>(rng() >> 11), -53) - 1.0;
                total += std::fabs(v);
            }
        } while (total == 0.0);
    }
    return out;
}

WarpedMetric perturb(const WarpedMetric& base, PerturbationMode mode, double epsilon, const std::array<double, 3>& c) {
    constexpr double pi = std::numbers::pi;
    const double norm = std::fabs(c[0]) + std::fabs(c[1]) + std::fabs(c[2]);
    if (!(norm > 0.0)) throw InvalidArgument("perturbation direction must be nonzero");
    // amplitude eta keeps the relative change eta / (1 - eta) at or below epsilon
    const double eta = epsilon / (1.0 + epsilon);
    WarpedMetric g = base;
    const auto& x = base.grid.x();
    for (std::size_t i = 0; i < g.size(); ++i) {
        double b = 0.0;
        for (int j = 1; j <= 3; ++j) {
            const double s = std::sin(j * pi * x[i]);
            b += c[j - 1] * s * s;
        }
        b /= norm;
        const double s1 = std::sin(pi * x[i]);
        const double s2 = std::sin(2.0 * pi * x[i]);
        double w = 1.0;
        if (mode == PerturbationMode::neck_radius) w = std::pow(s1, 8);
        if (mode == PerturbationMode::lobe_radius) w = s2 * s2;
        g.psi[i] = base.psi[i] * (1.0 + eta * w * b);
    }
    return g;
}

SweepReport stratification_experiment(const SweepConfig& cfg, const FlowParams& fp, const SurgeryParams& sp) {
    cfg.validate();
    SweepReport rep;
    rep.config = cfg;
    const WarpedMetric base = cfg.base.build();
    const auto dirs = perturbation_directions(cfg.seed, cfg.samples);

    std::vector<SweepSample> samples(cfg.samples + 1);  // slot 0 holds the base run
    auto run_one = [&](std::size_t k) {
        SweepSample& out = samples[k];
        WarpedMetric g = base;
        if (k > 0) {
            out.index = k - 1;
            out.direction = dirs[k - 1];
            g = perturb(base, cfg.mode, cfg.epsilon, out.direction);
            out.epsilon_used = metric_distance(g, base);
        }
        try {
            const auto st = run_singular_flow(g, fp, sp);
            const auto d = asymptotic_decomposition(st);
            out.signature = d.signature;
            out.event_count = d.event_count;
            out.unresolved = d.unresolved_count > 0;
        } catch (const Error& e) {
            out.unresolved = true;
            out.failure = e.what();
        }
    };

    const std::size_t jobs = samples.size();
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, jobs);
    if (workers == 1) {
        for (std::size_t k = 0; k < jobs; ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < jobs; k = next++) run_one(k);
            });
    }

    rep.base_signature = samples.front().signature;
    const bool base_ok = !samples.front().unresolved;
    rep.samples.assign(samples.begin() + 1, samples.end());
    rep.all_equal = base_ok;
    for (const auto& s : rep.samples) {
        rep.epsilon_used = std::max(rep.epsilon_used, s.epsilon_used);
        if (s.unresolved) {
            ++rep.unresolved_count;
            continue;
        }
        rep.signatures.push_back(s.signature);
        if (s.signature != rep.base_signature) rep.all_equal = false;
    }
    std::sort(rep.signatures.begin(), rep.signatures.end());
    return rep;
}

// ---------------------------------------------------------------------------------------------

void SolitonSuiteParams::validate() const {
    if (!(radius > 0.0)) throw InvalidArgument("soliton radius must be positive");
    if (n_coarse < 5 || n_fine <= n_coarse) throw InvalidArgument("soliton suite needs 5 <= n_coarse < n_fine");
    if (!(t >= 0.0)) throw InvalidArgument("soliton time must be nonnegative");
    const double sigma = 1.0 - 2.0 * (2.0 / (radius * radius)) * t;
    if (!(sigma > 0.0)) throw InvalidArgument("sigma(t) = 1 - 2 lambda t must stay positive");
}

SolitonSuiteReport soliton_suite(const SolitonSuiteParams& params) {
    params.validate();
    SolitonSuiteReport rep;
    rep.lambda = 2.0 / (params.radius * params.radius);
    rep.sigma = 1.0 - 2.0 * rep.lambda * params.t;
    FlowParams fp = params.flow;
    fp.t_max = params.t;
    fp.snapshot_stride = std::numeric_limits<std::size_t>::max();
    fp.validate();

    rep.within_bounds = true;
    for (std::size_t n : {params.n_coarse, params.n_fine}) {
        SolitonData data{make_round_sphere(params.radius, n), std::vector<double>(n, 0.0), rep.lambda};
        SolitonResolution run;
        run.n = n;
        run.h = data.metric.grid.spacing();
        WarpedMetric flowed = data.metric;
        if (params.t > 0.0) {
            const auto tr = evolve(data.metric, fp);
            if (tr.termination.kind != TerminationKind::max_time)
                throw SingularBreakdown("soliton run stopped early: " + std::string(to_string(tr.termination.kind)));
            flowed = tr.slices.back();
            run.steps = tr.steps;
            for (const auto& d : tr.diagnostics) run.dt = std::max(run.dt, d.dt);
        }
        run.error = metric_distance(flowed, soliton_trajectory(data, flowed.time));
        run.bound = params.error_constant * (run.h * run.h + run.dt);
        rep.within_bounds = rep.within_bounds && run.error <= run.bound;
        rep.runs.push_back(run);
    }
    const double ec = rep.runs[0].error;
    const double ef = rep.runs[1].error;
    if (ef > 0.0) {
        rep.ratio = ec / ef;
        rep.order = std::log(rep.ratio) /
                    std::log(static_cast<double>(params.n_fine - 1) / static_cast<double>(params.n_coarse - 1));
    } else {
        rep.ratio = ec > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
        rep.order = ec > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    // an exact match at both resolutions (t = 0) needs no convergence
    const bool exact = ec == 0.0 && ef == 0.0;
    rep.passed = rep.within_bounds && (exact || rep.ratio >= params.min_ratio);
    return rep;
}

}  // namespace rsflow
