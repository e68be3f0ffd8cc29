#include "rsflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rsflow {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

bool is_scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

void dump_value(const Json& j, int indent, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(std::max(indent, 0) * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(std::max(indent, 0) * depth), ' ');
    switch (j.type()) {
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? format_double(v) : "\"" + format_double(v) + "\"";
            return;
        }
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            if (indent < 0) {
                out += "{";
                bool first = true;
                for (const auto& [k, v] : j.items()) {
                    if (!first) out += ",";
                    first = false;
                    out += Json(k).dump() + ":";
                    dump_value(v, indent, depth + 1, out);
                }
                out += "}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad + Json(k).dump() + ": ";
                dump_value(v, indent, depth + 1, out);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            const bool flat = indent < 0 || std::all_of(j.begin(), j.end(), is_scalar);
            if (flat) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += indent < 0 ? "," : ", ";
                    dump_value(j[i], indent, depth + 1, out);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += pad;
                dump_value(j[i], indent, depth + 1, out);
            }
            out += "\n" + close_pad + "]";
            return;
        }
        default: out += j.dump(); return;
    }
}

Json number(double v) { return Json(v); }

std::vector<double> number_array(const Json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_array())
        throw InvalidArgument(std::string("metric snapshot: field '") + field + "' must be an array");
    std::vector<double> out;
    for (const auto& v : j.at(field)) {
        if (!v.is_number()) throw InvalidArgument(std::string("metric snapshot: non-numeric entry in '") + field + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Json pairs_json(const std::vector<std::pair<std::size_t, std::size_t>>& v) {
    Json a = Json::array();
    for (const auto& [x, y] : v) a.push_back(Json::array({x, y}));
    return a;
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    dump_value(j, indent, 0, out);
    if (indent >= 0) out += "\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path.string());
    f << text;
    if (!f) throw InvalidArgument("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Json to_json(const WarpedMetric& g) {
    Json j;
    j["topology"] = to_string(g.grid.topology());
    j["time"] = number(g.time);
    j["x"] = g.grid.x();
    j["phi"] = g.phi;
    j["psi"] = g.psi;
    return j;
}

WarpedMetric metric_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("metric snapshot must be a JSON object");
    if (!j.contains("topology") || !j.at("topology").is_string())
        throw InvalidArgument("metric snapshot: field 'topology' must be a string");
    const Topology topo = topology_from_string(j.at("topology").get<std::string>());
    auto x = number_array(j, "x");
    WarpedMetric g;
    g.phi = number_array(j, "phi");
    g.psi = number_array(j, "psi");
    if (j.contains("time")) {
        if (!j.at("time").is_number()) throw InvalidArgument("metric snapshot: field 'time' must be a number");
        g.time = j.at("time").get<double>();
    }
    if (x.size() < 5) throw InvalidArgument("metric snapshot: at least 5 nodes required");
    const auto uniform = ProfileGrid::uniform(x.size(), topo);
    g.grid = uniform.x() == x ? uniform : ProfileGrid::from_nodes(std::move(x), topo);
    if (g.phi.size() != g.size() || g.grid.size() != g.size())
        throw InvalidArgument("metric snapshot: x, phi and psi must have equal lengths");
    return g;
}

Json to_json(const Termination& t) {
    Json j;
    j["kind"] = to_string(t.kind);
    j["time"] = number(t.time);
    if (t.neck) j["neck"] = {{"node", t.neck->node}, {"s", t.neck->s}, {"psi_min", t.neck->psi_min}};
    j["detail"] = t.detail;
    return j;
}

Json to_json(const StepDiagnostics& d) {
    return {{"t", d.t},          {"dt", d.dt},         {"max_k", d.max_k},         {"min_psi", d.min_psi},
            {"max_psi", d.max_psi}, {"volume", d.volume}, {"roundness", d.roundness}, {"F", optional_json(d.F)}};
}

Json to_json(const SurgeryEvent& e) {
    Json j;
    j["time"] = number(e.time);
    j["parent"] = e.parent;
    j["children"] = e.children;
    j["neck_interval"] = Json::array({e.neck_interval.first, e.neck_interval.second});
    j["neck_radius"] = number(e.neck_radius);
    j["neck_node"] = e.neck_node;
    j["volume_before"] = number(e.volume_before);
    j["volume_after"] = number(e.volume_after);
    j["max_child_curvature"] = number(e.max_child_curvature);
    return j;
}

Json to_json(const ComponentClassification& c) {
    Json j;
    j["tag"] = to_string(c.tag);
    j["topology"] = to_string(c.topology);
    j["termination"] = to_string(c.termination);
    j["extinction_time"] = optional_json(c.extinction_time);
    j["roundness"] = number(c.roundness);
    j["roundness_trend"] = c.roundness_trend;
    j["fitted_lambda"] = optional_json(c.fitted_lambda);
    j["soliton_residual"] = optional_json(c.soliton_residual);
    j["reason"] = c.reason;
    return j;
}

Json to_json(const DecompositionResult& d) {
    Json j;
    j["signature"] = d.signature;
    j["event_count"] = d.event_count;
    j["unresolved_count"] = d.unresolved_count;
    Json comps = Json::array();
    for (const auto& [id, c] : d.components) {
        Json cj = to_json(c);
        Json entry;
        entry["id"] = id;
        for (const auto& [k, v] : cj.items()) entry[k] = v;
        comps.push_back(entry);
    }
    j["components"] = comps;
    return j;
}

Json to_json(const DecompositionMapReport& r) {
    return {{"ok", r.ok}, {"leaves", pairs_json(r.leaves)}, {"max_final_drift", r.max_final_drift},
            {"failure", r.failure}};
}

Json to_json(const AutomorphismReport& r) {
    return {{"is_automorphism", r.is_automorphism}, {"max_drift", r.max_drift},
            {"permutation", pairs_json(r.permutation)}, {"failure", r.failure}};
}

Json to_json(const IsometryPreservationReport& r) {
    return {{"max_drift", r.max_drift}, {"horizon", r.horizon}, {"reached_T", r.reached_T},
            {"compared_slices", r.compared_slices}};
}

Json to_json(const FunctorLawReport& r) {
    Json j;
    j["passed"] = r.passed();
    j["identity_ok"] = r.identity_ok;
    j["composition_ok"] = r.composition_ok;
    j["injectivity_ok"] = r.injectivity_ok;
    j["injectivity_skipped"] = r.injectivity_skipped;
    j["skip_reason"] = r.skip_reason;
    j["first_divergent_slice"] = optional_json(r.first_divergent_slice);
    j["reflection_permutation"] = pairs_json(r.reflection_permutation);
    j["signature"] = r.signature;
    j["failures"] = r.failures;
    return j;
}

Json to_json(const SweepReport& r) {
    Json j;
    j["tested_invariant"] = "same decomposition signature as the base";
    j["base_signature"] = r.base_signature;
    j["all_equal"] = r.all_equal;
    j["unresolved_count"] = r.unresolved_count;
    j["epsilon_used"] = number(r.epsilon_used);
    j["signatures"] = r.signatures;
    Json samples = Json::array();
    for (const auto& s : r.samples) {
        Json sj;
        sj["index"] = s.index;
        sj["direction"] = s.direction;
        sj["epsilon_used"] = number(s.epsilon_used);
        sj["signature"] = s.signature;
        sj["event_count"] = s.event_count;
        sj["unresolved"] = s.unresolved;
        sj["matches_base"] = !s.unresolved && s.signature == r.base_signature;
        sj["failure"] = s.failure;
        samples.push_back(sj);
    }
    j["samples"] = samples;
    return j;
}

Json to_json(const SolitonSuiteReport& r) {
    Json j;
    j["lambda"] = number(r.lambda);
    j["sigma"] = number(r.sigma);
    Json runs = Json::array();
    for (const auto& run : r.runs)
        runs.push_back({{"n", run.n}, {"h", run.h}, {"dt", run.dt}, {"steps", run.steps}, {"error", run.error},
                        {"bound", run.bound}, {"within_bound", run.error <= run.bound}});
    j["runs"] = runs;
    j["ratio"] = number(r.ratio);
    j["order"] = number(r.order);
    j["within_bounds"] = r.within_bounds;
    j["passed"] = r.passed;
    return j;
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& rows, const Json& config) {
    std::string out = "# config=" + dump_json(config, -1) + "\n";
    out += "t,dt,max_k,min_psi,volume,F\n";
    for (const auto& d : rows) {
        out += format_double(d.t) + "," + format_double(d.dt) + "," + format_double(d.max_k) + "," +
               format_double(d.min_psi) + "," + format_double(d.volume) + "," + (d.F ? format_double(*d.F) : "") +
               "\n";
    }
    return out;
}

namespace {

std::string padded(std::size_t k, int width) {
    std::string s = std::to_string(k);
    return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

}  // namespace

void write_trajectory(const std::filesystem::path& dir, const FlowTrajectory& tr, const Json& config) {
    Json manifest;
    manifest["config"] = config;
    manifest["termination"] = to_json(tr.termination);
    manifest["steps"] = tr.steps;
    manifest["psi_ref"] = number(tr.psi_ref);
    Json files = Json::array();
    for (std::size_t k = 0; k < tr.slices.size(); ++k) {
        const std::string name = "snapshots/" + padded(k, 5) + ".json";
        Json snap = to_json(tr.slices[k]);
        snap["config"] = config;
        write_text(dir / name, dump_json(snap));
        files.push_back({{"time", tr.slices[k].time}, {"file", name}});
    }
    manifest["snapshots"] = files;
    write_text(dir / "trajectory.json", dump_json(manifest));
    write_text(dir / "diagnostics.csv", diagnostics_csv(tr.diagnostics, config));
}

std::string events_csv(const SingularSpacetime& st, const Json& config) {
    std::string out = "# config=" + dump_json(config, -1) + "\n";
    out += "t,parent,children,neck_radius\n";
    for (const auto& e : st.events) {
        std::string kids;
        for (std::size_t i = 0; i < e.children.size(); ++i) kids += (i ? ";" : "") + std::to_string(e.children[i]);
        out += format_double(e.time) + "," + std::to_string(e.parent) + "," + kids + "," +
               format_double(e.neck_radius) + "\n";
    }
    return out;
}

void write_spacetime(const std::filesystem::path& dir, const SingularSpacetime& st, const Json& config) {
    Json manifest;
    manifest["config"] = config;
    Json events = Json::array();
    for (const auto& e : st.events) events.push_back(to_json(e));
    manifest["events"] = events;
    Json genealogy = Json::array();
    const auto kids = st.genealogy();
    for (std::size_t id = 0; id < kids.size(); ++id) genealogy.push_back({{"id", id}, {"children", kids[id]}});
    manifest["genealogy"] = genealogy;
    manifest["leaves"] = st.leaves();
    Json comps = Json::array();
    for (const auto& c : st.components) {
        Json cj;
        cj["id"] = c.id;
        cj["parent"] = optional_json(c.parent);
        cj["birth_time"] = number(c.birth_time);
        cj["termination"] = to_json(c.termination);
        cj["steps"] = c.steps;
        cj["unresolved"] = c.unresolved;
        cj["regrid_times"] = c.regrid_times;
        cj["diagnostics"] = "diagnostics/component_" + padded(c.id, 3) + ".csv";
        comps.push_back(cj);
        write_text(dir / cj["diagnostics"].get<std::string>(), diagnostics_csv(c.diagnostics, config));
    }
    manifest["components"] = comps;
    Json slices = Json::array();
    for (std::size_t k = 0; k < st.slices.size(); ++k) {
        Json sj;
        sj["index"] = k;
        sj["time"] = number(st.slices[k].time);
        Json files = Json::array();
        for (const auto& [id, m] : st.slices[k].components) {
            const std::string name = "slices/" + padded(k, 5) + "_c" + padded(id, 3) + ".json";
            Json snap = to_json(m);
            snap["config"] = config;
            write_text(dir / name, dump_json(snap));
            files.push_back({{"component", id}, {"file", name}});
        }
        sj["components"] = files;
        slices.push_back(sj);
    }
    manifest["slices"] = slices;
    write_text(dir / "manifest.json", dump_json(manifest));
    write_text(dir / "events.csv", events_csv(st, config));
}

}  // namespace rsflow
