#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsflow/decomposition.hpp"

namespace rsflow {

/// Constructor parameters of an initial metric.
struct InitialMetricSpec {
    enum class Kind { round_sphere, cylinder, dumbbell };

    Kind kind = Kind::dumbbell;
    std::size_t n = 801;
    double radius = 1.0;  ///< round_sphere, cylinder
    double length = 1.0;  ///< cylinder period
    double neck = 0.15;   ///< dumbbell
    double lobe = 1.0;    ///< dumbbell
    bool symmetric = true;

    WarpedMetric build() const;
    friend bool operator==(const InitialMetricSpec&, const InitialMetricSpec&) = default;
};

std::string_view to_string(InitialMetricSpec::Kind k);
InitialMetricSpec::Kind initial_kind_from_string(std::string_view name);

// ---------------------------------------------------------------------------------------------
// Functor laws

struct FunctorLawReport {
    bool identity_ok = false;
    bool composition_ok = false;
    bool injectivity_ok = false;
    bool injectivity_skipped = false;
    std::string skip_reason;
    /// Index of the first slice at which a law check diverged.
    std::optional<std::size_t> first_divergent_slice;
    std::vector<std::string> failures;
    std::vector<std::pair<std::size_t, std::size_t>> reflection_permutation;
    std::string signature;

    bool passed() const { return identity_ok && composition_ok && (injectivity_ok || injectivity_skipped); }
};

/// Runs the singular flow from base, id*base, r*base and r*(r*base) and checks
///   identity:     the spacetime of id*base equals that of base bit for bit, with the identity
///                 component correspondence;
///   composition:  the correspondence induced by r followed by r equals the one induced by id,
///                 and r applied twice to every slice returns it unchanged;
///   injectivity:  r and id induce different spacetime maps whenever r permutes components.
/// Throws PreconditionFailed when base is not reflection symmetric.
FunctorLawReport functor_law_suite(const WarpedMetric& base, const FlowParams& fp, const SurgeryParams& sp);

// ---------------------------------------------------------------------------------------------
// Stratification

enum class PerturbationMode { neck_radius, lobe_radius, profile_bump };
std::string_view to_string(PerturbationMode m);
PerturbationMode perturbation_from_string(std::string_view name);

struct SweepConfig {
    InitialMetricSpec base;
    PerturbationMode mode = PerturbationMode::profile_bump;
    double epsilon = 0.01;
    std::size_t samples = 10;
    std::uint64_t seed = 20240601;

    void validate() const;
};

/// Coefficients of the first three sine modes for every sample.  Depends only on seed and
/// sample count.
std::vector<std::array<double, 3>> perturbation_directions(std::uint64_t seed, std::size_t samples);

/// psi -> psi (1 + eta w(x) B(x)) with B = sum_j c_j sin^2(j pi x) / sum_j |c_j|, a mode window w
/// and eta = epsilon / (1 + epsilon), which keeps metric_distance to the base at most epsilon.
/// Every factor is smooth and equals 1 to second order at the poles, so the closure conditions
/// survive.  Windows: 1 (profile_bump), sin^8(pi x) (neck_radius), sin^2(2 pi x) (lobe_radius).
WarpedMetric perturb(const WarpedMetric& base, PerturbationMode mode, double epsilon, const std::array<double, 3>& c);

struct SweepSample {
    std::size_t index = 0;
    std::array<double, 3> direction{};
    double epsilon_used = 0.0;  ///< metric_distance from the base
    std::string signature;
    std::size_t event_count = 0;
    bool unresolved = false;
    std::string failure;  ///< exception text when the pipeline threw

    friend bool operator==(const SweepSample&, const SweepSample&) = default;
};

struct SweepReport {
    SweepConfig config;
    std::string base_signature;
    std::vector<SweepSample> samples;
    std::vector<std::string> signatures;  ///< sorted multiset over resolved samples
    bool all_equal = false;               ///< every resolved sample has the base signature
    std::size_t unresolved_count = 0;
    double epsilon_used = 0.0;            ///< largest measured distance

    friend bool operator==(const SweepReport& a, const SweepReport& b) {
        return a.base_signature == b.base_signature && a.samples == b.samples && a.signatures == b.signatures &&
               a.all_equal == b.all_equal && a.unresolved_count == b.unresolved_count &&
               a.epsilon_used == b.epsilon_used;
    }
};

/// Runs the full pipeline on the base and on every perturbed sample.  Samples run on a thread
/// pool; the report is assembled by sample index.
SweepReport stratification_experiment(const SweepConfig& cfg, const FlowParams& fp, const SurgeryParams& sp);

// ---------------------------------------------------------------------------------------------
// Soliton fixed point

struct SolitonSuiteParams {
    double radius = 1.0;
    std::size_t n_coarse = 201;
    std::size_t n_fine = 401;
    double t = 0.1;
    double error_constant = 5.0;  ///< bound is error_constant * (h^2 + dt)
    double min_ratio = 3.6;       ///< required coarse/fine error ratio
    FlowParams flow;              ///< t_max is overridden by t

    void validate() const;
};

struct SolitonResolution {
    std::size_t n = 0;
    double h = 0.0;
    double dt = 0.0;  ///< largest step taken
    double error = 0.0;
    double bound = 0.0;
    std::size_t steps = 0;
};

struct SolitonSuiteReport {
    double lambda = 0.0;
    double sigma = 0.0;
    std::vector<SolitonResolution> runs;
    double ratio = 0.0;
    double order = 0.0;
    bool within_bounds = false;
    bool passed = false;
};

/// Flows the Einstein round sphere of the given radius (lambda = 2 / r^2, f = 0) to time t at
/// two resolutions and compares with the closed-form trajectory sigma(t) g0.
/// Throws InvalidArgument when sigma(t) <= 0.
SolitonSuiteReport soliton_suite(const SolitonSuiteParams& params);

}  // namespace rsflow
