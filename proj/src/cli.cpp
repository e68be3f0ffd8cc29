#include "rsflow/cli.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <ostream>

#include "rsflow/svg.hpp"

namespace rsflow {

std::string_view to_string(Command c) {
    switch (c) {
        case Command::flow: return "flow";
        case Command::singular: return "singular";
        case Command::decompose: return "decompose";
        case Command::soliton: return "soliton";
        case Command::symmetry: return "symmetry";
        case Command::sweep: return "sweep";
        case Command::laws: return "laws";
    }
    return "flow";
}

Command command_from_string(std::string_view name) {
    for (Command c : {Command::flow, Command::singular, Command::decompose, Command::soliton, Command::symmetry,
                      Command::sweep, Command::laws})
        if (to_string(c) == name) return c;
    throw ConfigError("unknown command '" + std::string(name) + "'");
}

SweepConfig RunConfig::sweep_config() const {
    SweepConfig s;
    s.base = initial;
    s.mode = sweep_mode;
    s.epsilon = sweep_epsilon;
    s.samples = sweep_samples;
    s.seed = sweep_seed;
    return s;
}

namespace {

// Strict reader over one JSON object: typed getters plus rejection of unknown keys.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        for (const auto& [k, v] : j_.items()) {
            (void)v;
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
                throw ConfigError("unknown field '" + field(k) + "'");
        }
    }
    bool has(const char* key) const { return j_.contains(key); }
    const Json& raw(const char* key) const { return j_.at(key); }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void number(const char* key, double& out) const {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError("field '" + field(key) + "' must be a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError("field '" + field(key) + "' must be finite");
    }
    void count(const char* key, std::size_t& out) const {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
            throw ConfigError("field '" + field(key) + "' must be a nonnegative integer");
        out = v.get<std::size_t>();
    }
    void seed(const char* key, std::uint64_t& out) const {
        std::size_t s = out;
        count(key, s);
        out = s;
    }
    void flag(const char* key, bool& out) const {
        if (!has(key)) return;
        if (!j_.at(key).is_boolean()) throw ConfigError("field '" + field(key) + "' must be true or false");
        out = j_.at(key).get<bool>();
    }
    std::optional<std::string> text(const char* key) const {
        if (!has(key)) return std::nullopt;
        if (!j_.at(key).is_string()) throw ConfigError("field '" + field(key) + "' must be a string");
        return j_.at(key).get<std::string>();
    }
    template <class F>
    auto choice(const char* key, F&& convert) const -> std::optional<decltype(convert(std::string_view{}))> {
        auto t = text(key);
        if (!t) return std::nullopt;
        try {
            return convert(*t);
        } catch (const Error& e) {
            throw ConfigError("field '" + field(key) + "': " + e.what());
        }
    }

private:
    std::string where() const { return path_.empty() ? "configuration" : "field '" + path_ + "'"; }
    const Json& j_;
    std::string path_;
};

template <class F>
void check(const std::string& section, F&& validate) {
    try {
        validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("section '" + section + "': " + e.what());
    }
}

}  // namespace

RunConfig parse_config(const Json& doc, Command command) {
    RunConfig cfg;
    cfg.command = command;
    const Section top(doc, "");
    top.allow({"command", "initial", "flow", "surgery", "symmetry", "sweep", "soliton", "out", "plots"});
    if (auto c = top.choice("command", command_from_string); c && *c != command)
        throw ConfigError("field 'command' is '" + std::string(to_string(*c)) + "' but the subcommand is '" +
                          std::string(to_string(command)) + "'");
    if (auto o = top.text("out")) cfg.out_dir = *o;
    top.flag("plots", cfg.emit_plots);

    if (top.has("initial")) {
        const Section s(top.raw("initial"), "initial");
        s.allow({"kind", "file", "n", "radius", "length", "neck", "lobe", "symmetric", "family"});
        if (auto k = s.choice("kind", initial_kind_from_string)) cfg.initial.kind = *k;
        // node count defaults depend on the kind
        if (cfg.initial.kind == InitialMetricSpec::Kind::round_sphere) cfg.initial.n = 401;
        if (cfg.initial.kind == InitialMetricSpec::Kind::cylinder) cfg.initial.n = 64;
        s.count("n", cfg.initial.n);
        s.number("radius", cfg.initial.radius);
        s.number("length", cfg.initial.length);
        s.number("neck", cfg.initial.neck);
        s.number("lobe", cfg.initial.lobe);
        s.flag("symmetric", cfg.initial.symmetric);
        cfg.initial_file = s.text("file");
        // echoed by resolved configs; accepted only when it names the built-in family
        if (auto fam = s.text("family"); fam && *fam != dumbbell_family())
            throw ConfigError("field 'initial.family' does not match the built-in dumbbell family");
        if (cfg.initial_file && s.has("kind"))
            throw ConfigError("field 'initial.file' cannot be combined with 'initial.kind'");
    }

    if (top.has("flow")) {
        const Section s(top.raw("flow"), "flow");
        s.allow({"cfl", "dt_max", "t_max", "snapshot_stride", "scheme", "extinction_ratio", "conv_tol", "pole_tol"});
        s.number("cfl", cfg.flow.cfl);
        s.number("dt_max", cfg.flow.dt_max);
        s.number("t_max", cfg.flow.t_max);
        s.count("snapshot_stride", cfg.flow.snapshot_stride);
        if (auto sc = s.choice("scheme", scheme_from_string)) cfg.flow.scheme = *sc;
        s.number("extinction_ratio", cfg.flow.extinction_ratio);
        s.number("conv_tol", cfg.flow.conv_tol);
        s.number("pole_tol", cfg.flow.pole_tol);
    }
    check("flow", [&] { cfg.flow.validate(); });

    if (top.has("surgery")) {
        const Section s(top.raw("surgery"), "surgery");
        s.allow({"rho_surg", "excision_margin", "cap_blend", "cylindricity_tol", "regrid_ratio", "nodes_per_radius"});
        if (s.has("rho_surg") && !s.raw("rho_surg").is_null()) {
            double rho = 0.0;
            s.number("rho_surg", rho);
            cfg.surgery.rho_surg = rho;
        }
        s.number("excision_margin", cfg.surgery.excision_margin);
        s.number("cap_blend", cfg.surgery.cap_blend);
        s.number("cylindricity_tol", cfg.surgery.cylindricity_tol);
        s.number("regrid_ratio", cfg.surgery.regrid_ratio);
        s.number("nodes_per_radius", cfg.surgery.nodes_per_radius);
    }
    check("surgery", [&] {
        SurgeryParams probe = cfg.surgery;
        if (!probe.rho_surg) probe.rho_surg = 1.0;  // filled in from the initial metric at run time
        probe.validate(0.0);
    });

    if (top.has("symmetry")) {
        const Section s(top.raw("symmetry"), "symmetry");
        s.allow({"isometry", "tol"});
        if (auto a = s.choice("isometry", isometry_from_string)) cfg.isometry = *a;
        s.number("tol", cfg.symmetry_tol);
        if (!(cfg.symmetry_tol >= 0.0)) throw ConfigError("field 'symmetry.tol' must be nonnegative");
    }

    if (top.has("sweep")) {
        const Section s(top.raw("sweep"), "sweep");
        s.allow({"mode", "epsilon", "samples", "seed"});
        if (auto m = s.choice("mode", perturbation_from_string)) cfg.sweep_mode = *m;
        s.number("epsilon", cfg.sweep_epsilon);
        s.count("samples", cfg.sweep_samples);
        s.seed("seed", cfg.sweep_seed);
    }
    check("sweep", [&] { cfg.sweep_config().validate(); });

    if (top.has("soliton")) {
        const Section s(top.raw("soliton"), "soliton");
        s.allow({"radius", "n_coarse", "n_fine", "t", "error_constant", "min_ratio"});
        s.number("radius", cfg.soliton.radius);
        s.count("n_coarse", cfg.soliton.n_coarse);
        s.count("n_fine", cfg.soliton.n_fine);
        s.number("t", cfg.soliton.t);
        s.number("error_constant", cfg.soliton.error_constant);
        s.number("min_ratio", cfg.soliton.min_ratio);
    }
    cfg.soliton.flow = cfg.flow;
    check("soliton", [&] { cfg.soliton.validate(); });
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, Command command) {
    if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
    const std::string text = read_text(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON syntax error");
    }
    RunConfig cfg = parse_config(doc, command);
    if (cfg.initial_file && std::filesystem::path(*cfg.initial_file).is_relative())
        cfg.initial_file = (path.parent_path() / *cfg.initial_file).string();
    return cfg;
}

Json resolved_config(const RunConfig& cfg) {
    Json j;
    j["command"] = to_string(cfg.command);
    Json init;
    if (cfg.initial_file) {
        init["file"] = *cfg.initial_file;
    } else {
        init["kind"] = to_string(cfg.initial.kind);
        init["n"] = cfg.initial.n;
        switch (cfg.initial.kind) {
            case InitialMetricSpec::Kind::round_sphere: init["radius"] = cfg.initial.radius; break;
            case InitialMetricSpec::Kind::cylinder:
                init["radius"] = cfg.initial.radius;
                init["length"] = cfg.initial.length;
                break;
            case InitialMetricSpec::Kind::dumbbell:
                init["neck"] = cfg.initial.neck;
                init["lobe"] = cfg.initial.lobe;
                init["symmetric"] = cfg.initial.symmetric;
                init["family"] = dumbbell_family();
                break;
        }
    }
    j["initial"] = init;
    const auto& f = cfg.flow;
    j["flow"] = {{"cfl", f.cfl},
                 {"dt_max", f.dt_max},
                 {"t_max", f.t_max},
                 {"snapshot_stride", f.snapshot_stride},
                 {"scheme", to_string(f.scheme)},
                 {"extinction_ratio", f.extinction_ratio},
                 {"conv_tol", f.conv_tol},
                 {"pole_tol", f.pole_tol}};
    const auto& s = cfg.surgery;
    j["surgery"] = {{"rho_surg", s.rho_surg ? Json(*s.rho_surg) : Json(nullptr)},
                    {"excision_margin", s.excision_margin},
                    {"cap_blend", s.cap_blend},
                    {"cylindricity_tol", s.cylindricity_tol},
                    {"regrid_ratio", s.regrid_ratio},
                    {"nodes_per_radius", s.nodes_per_radius}};
    j["symmetry"] = {{"isometry", to_string(cfg.isometry)}, {"tol", cfg.symmetry_tol}};
    j["sweep"] = {{"mode", to_string(cfg.sweep_mode)},
                  {"epsilon", cfg.sweep_epsilon},
                  {"samples", cfg.sweep_samples},
                  {"seed", cfg.sweep_seed}};
    j["soliton"] = {{"radius", cfg.soliton.radius},
                    {"n_coarse", cfg.soliton.n_coarse},
                    {"n_fine", cfg.soliton.n_fine},
                    {"t", cfg.soliton.t},
                    {"error_constant", cfg.soliton.error_constant},
                    {"min_ratio", cfg.soliton.min_ratio}};
    j["out"] = cfg.out_dir.string();
    j["plots"] = cfg.emit_plots;
    return j;
}

namespace {

std::string padded(std::size_t k, int width) {
    std::string s = std::to_string(k);
    return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

WarpedMetric initial_metric(const RunConfig& cfg) {
    if (cfg.initial_file) {
        Json doc;
        try {
            doc = Json::parse(read_text(*cfg.initial_file));
        } catch (const Json::parse_error&) {
            throw ConfigError("initial metric file " + *cfg.initial_file + " is not valid JSON");
        }
        auto g = metric_from_json(doc);
        validate(g, {cfg.flow.pole_tol});
        return g;
    }
    auto g = cfg.initial.build();
    validate(g, {cfg.flow.pole_tol});
    return g;
}

void plot_spacetime(const std::filesystem::path& dir, const SingularSpacetime& st) {
    for (std::size_t k = 0; k < st.slices.size(); ++k)
        for (const auto& [id, m] : st.slices[k].components)
            write_text(dir / "plots" / ("slice_" + padded(k, 5) + "_c" + padded(id, 3) + ".svg"),
                       profile_svg(m, "component " + std::to_string(id)));
    for (const auto& c : st.components)
        write_text(dir / "plots" / ("summary_c" + padded(c.id, 3) + ".svg"),
                   summary_svg(c.diagnostics, "component " + std::to_string(c.id)));
}

int finish_spacetime(const RunConfig& cfg, const SingularSpacetime& st, const Json& conf, std::ostream& log) {
    write_spacetime(cfg.out_dir, st, conf);
    if (cfg.emit_plots) plot_spacetime(cfg.out_dir, st);
    const auto bad = st.check_invariants();
    log << "events " << st.events.size() << ", components " << st.components.size() << ", leaves "
        << st.leaves().size() << "\n";
    for (const auto& b : bad) log << "invariant violated: " << b << "\n";
    return bad.empty() ? kExitOk : kExitVerificationFailure;
}

int run_pipeline(const RunConfig& cfg, std::ostream& log) {
    const Json conf = resolved_config(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    switch (cfg.command) {
        case Command::flow: {
            const auto tr = evolve(initial_metric(cfg), cfg.flow);
            write_trajectory(cfg.out_dir, tr, conf);
            if (cfg.emit_plots) {
                for (std::size_t k = 0; k < tr.slices.size(); ++k)
                    write_text(cfg.out_dir / "plots" / ("profile_" + padded(k, 5) + ".svg"),
                               profile_svg(tr.slices[k], "profile"));
                write_text(cfg.out_dir / "plots" / "summary.svg", summary_svg(tr.diagnostics, "flow summary"));
            }
            log << "termination " << to_string(tr.termination.kind) << " at t=" << format_double(tr.termination.time)
                << " after " << tr.steps << " steps\n";
            return kExitOk;
        }
        case Command::singular: {
            const auto st = run_singular_flow(initial_metric(cfg), cfg.flow, cfg.surgery);
            return finish_spacetime(cfg, st, conf, log);
        }
        case Command::decompose: {
            const auto st = run_singular_flow(initial_metric(cfg), cfg.flow, cfg.surgery);
            const int code = finish_spacetime(cfg, st, conf, log);
            const auto d = asymptotic_decomposition(st);
            Json j = to_json(d);
            j["config"] = conf;
            write_text(cfg.out_dir / "decomposition.json", dump_json(j));
            log << "signature " << d.signature << " (" << d.unresolved_count << " unresolved)\n";
            return code;
        }
        case Command::soliton: {
            const auto rep = soliton_suite(cfg.soliton);
            Json j = to_json(rep);
            j["config"] = conf;
            write_text(cfg.out_dir / "soliton.json", dump_json(j));
            for (const auto& r : rep.runs)
                log << "n=" << r.n << " error " << format_double(r.error) << " bound " << format_double(r.bound) << "\n";
            log << "ratio " << format_double(rep.ratio) << (rep.passed ? " pass\n" : " FAIL\n");
            return rep.passed ? kExitOk : kExitVerificationFailure;
        }
        case Command::symmetry: {
            const auto st = run_singular_flow(initial_metric(cfg), cfg.flow, cfg.surgery);
            const auto aut = spacetime_isometry_check(st, cfg.isometry, cfg.symmetry_tol);
            const auto map = decomposition_map(st, st, cfg.isometry, cfg.symmetry_tol);
            Json j;
            j["config"] = conf;
            j["isometry"] = to_string(cfg.isometry);
            j["automorphism"] = to_json(aut);
            j["decomposition_map"] = to_json(map);
            j["decomposition"] = to_json(asymptotic_decomposition(st));
            j["passed"] = aut.is_automorphism && map.ok;
            write_text(cfg.out_dir / "symmetry.json", dump_json(j));
            if (cfg.emit_plots) plot_spacetime(cfg.out_dir, st);
            log << "automorphism " << (aut.is_automorphism ? "yes" : "no") << ", drift "
                << format_double(aut.max_drift) << ", decomposition map " << (map.ok ? "ok" : map.failure) << "\n";
            return aut.is_automorphism && map.ok ? kExitOk : kExitVerificationFailure;
        }
        case Command::sweep: {
            if (cfg.initial_file) throw ConfigError("sweep needs a constructor-based 'initial' section");
            const auto rep = stratification_experiment(cfg.sweep_config(), cfg.flow, cfg.surgery);
            Json j = to_json(rep);
            j["config"] = conf;
            write_text(cfg.out_dir / "sweep.json", dump_json(j));
            log << "base " << rep.base_signature << ", all_equal " << (rep.all_equal ? "true" : "false")
                << ", unresolved " << rep.unresolved_count << "\n";
            return rep.all_equal ? kExitOk : kExitVerificationFailure;
        }
        case Command::laws: {
            Json j;
            int code = kExitOk;
            try {
                const auto rep = functor_law_suite(initial_metric(cfg), cfg.flow, cfg.surgery);
                j = to_json(rep);
                code = rep.passed() ? kExitOk : kExitVerificationFailure;
                log << "identity " << rep.identity_ok << ", composition " << rep.composition_ok << ", injectivity "
                    << (rep.injectivity_skipped ? "skipped" : rep.injectivity_ok ? "1" : "0") << "\n";
            } catch (const PreconditionFailed& e) {
                j["passed"] = false;
                j["precondition"] = e.what();
                code = kExitVerificationFailure;
                log << "precondition rejected: " << e.what() << "\n";
            }
            j["config"] = conf;
            write_text(cfg.out_dir / "laws.json", dump_json(j));
            return code;
        }
    }
    return kExitInputError;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
    try {
        return run_pipeline(cfg, log);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const InvalidArgument& e) {
        log << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const InvalidMetric& e) {
        log << "invalid initial metric: " << e.what() << "\n";
        return kExitInputError;
    } catch (const PreconditionFailed& e) {
        log << "precondition failed: " << e.what() << "\n";
        return kExitVerificationFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        log << "output error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const Error& e) {
        log << "pipeline failed: " << e.what() << "\n";
        return kExitVerificationFailure;
    }
}

}  // namespace rsflow
