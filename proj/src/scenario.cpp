#include "gvp/scenario.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gvp/diagnostics.hpp"
#include "gvp/energy.hpp"
#include "gvp/errors.hpp"
#include "gvp/geometry.hpp"
#include "gvp/projection.hpp"
#include "gvp/simd.hpp"
#include "gvp/version.hpp"

namespace gvp {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Serialization. Every floating-point number is printed with 17 significant
// digits so regression fixtures are exact; the stock dumper prints shortest
// round-trip forms instead.

std::string format_double(double v) {
    if (std::isnan(v))
        return "null";
    if (std::isinf(v))
        return v > 0 ? "1e999" : "-1e999"; // never expected; keeps JSON valid
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    out += '"';
}

void dump_17(const json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
    const std::string pad1(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        std::size_t k = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++k) {
            out += pad1;
            append_escaped(out, it.key());
            out += ": ";
            dump_17(it.value(), out, indent, depth + 1);
            if (k + 1 < j.size())
                out += ',';
            out += '\n';
        }
        out += pad + "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        bool flat = true;
        for (const auto& v : j)
            if (v.is_structured())
                flat = false;
        if (flat) {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i)
                    out += ", ";
                dump_17(j[i], out, indent, depth + 1);
            }
            out += ']';
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            out += pad1;
            dump_17(j[i], out, indent, depth + 1);
            if (i + 1 < j.size())
                out += ',';
            out += '\n';
        }
        out += pad + "]";
        return;
    }
    case json::value_t::string:
        append_escaped(out, j.get_ref<const std::string&>());
        return;
    case json::value_t::boolean:
        out += j.get<bool>() ? "true" : "false";
        return;
    case json::value_t::number_integer: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%" PRId64, j.get<std::int64_t>());
        out += buf;
        return;
    }
    case json::value_t::number_unsigned: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%" PRIu64, j.get<std::uint64_t>());
        out += buf;
        return;
    }
    case json::value_t::number_float:
        out += format_double(j.get<double>());
        return;
    default:
        out += "null";
        return;
    }
}

std::string dump_17(const json& j) {
    std::string out;
    dump_17(j, out, 2, 0);
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Strict schema helpers. Every failure names the JSON path.

[[noreturn]] void schema_error(const std::string& code, const std::string& path,
                               const std::string& what) {
    throw ValidationError(code, path + ": " + what);
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object())
        schema_error("schema_wrong_type", path, "expected an object");
}

const json& need(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end())
        schema_error("schema_missing_field", path + "/" + key,
                     "required field is missing");
    return *it;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k)
                ok = true;
        if (!ok)
            schema_error("schema_unknown_field", path + "/" + it.key(),
                         "unknown field");
    }
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number())
        schema_error("schema_wrong_type", path, "expected a number");
    return j.get<double>();
}

long as_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        schema_error("schema_wrong_type", path, "expected an integer");
    return j.get<long>();
}

bool as_boolean(const json& j, const std::string& path) {
    if (!j.is_boolean())
        schema_error("schema_wrong_type", path, "expected a boolean");
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string())
        schema_error("schema_wrong_type", path, "expected a string");
    return j.get<std::string>();
}

Point as_point(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty())
        schema_error("schema_wrong_type", path,
                     "expected a nonempty array of numbers");
    Point p;
    for (std::size_t i = 0; i < j.size(); ++i)
        p.push_back(as_number(j[i], path + "/" + std::to_string(i)));
    return p;
}

// ---------------------------------------------------------------------------
// Scenario parsing.

ProfileSpec parse_profile(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, {"kind", "s"}, path);
    ProfileSpec profile;
    const std::string kind = as_string(need(j, "kind", path), path + "/kind");
    if (kind == "power")
        profile.kind = ProfileSpec::Kind::power;
    else if (kind == "exponential")
        profile.kind = ProfileSpec::Kind::exponential;
    else
        schema_error("schema_bad_value", path + "/kind",
                     "expected \"power\" or \"exponential\"");
    profile.s = as_number(need(j, "s", path), path + "/s");
    profile.check();
    return profile;
}

ShapeSpec parse_shape(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, {"kind", "center", "radius", "a", "b", "q", "profile"},
                   path);
    ShapeSpec shape;
    const std::string kind = as_string(need(j, "kind", path), path + "/kind");
    if (kind == "sphere_shell" || kind == "ball") {
        shape.kind = kind == "ball" ? ShapeSpec::Kind::ball
                                    : ShapeSpec::Kind::sphere_shell;
        shape.center = as_point(need(j, "center", path), path + "/center");
        shape.radius = as_number(need(j, "radius", path), path + "/radius");
    } else if (kind == "segment") {
        shape.kind = ShapeSpec::Kind::segment;
        shape.seg_a = as_point(need(j, "a", path), path + "/a");
        shape.seg_b = as_point(need(j, "b", path), path + "/b");
    } else if (kind == "rotational_body") {
        shape.kind = ShapeSpec::Kind::rotational_body;
        shape.q = as_number(need(j, "q", path), path + "/q");
        shape.profile = parse_profile(need(j, "profile", path),
                                      path + "/profile");
    } else {
        schema_error("schema_bad_value", path + "/kind",
                     "unknown shape kind \"" + kind + "\"");
    }
    return shape;
}

json shape_echo(const ShapeSpec& shape) {
    json out;
    switch (shape.kind) {
    case ShapeSpec::Kind::sphere_shell:
    case ShapeSpec::Kind::ball:
        out["kind"] = shape.kind == ShapeSpec::Kind::ball ? "ball"
                                                          : "sphere_shell";
        out["center"] = shape.center;
        out["radius"] = shape.radius;
        break;
    case ShapeSpec::Kind::segment:
        out["kind"] = "segment";
        out["a"] = shape.seg_a;
        out["b"] = shape.seg_b;
        break;
    case ShapeSpec::Kind::rotational_body:
        out["kind"] = "rotational_body";
        out["q"] = shape.q;
        out["profile"] = {
            {"kind", shape.profile.kind == ProfileSpec::Kind::power
                         ? "power"
                         : "exponential"},
            {"s", shape.profile.s}};
        break;
    }
    return out;
}

Scenario parse_scenario_impl(const json& root, long long seed_override) {
    expect_object(root, "");
    reject_unknown(root,
                   {"spec_version", "seed", "kernel", "plates", "chi", "a",
                    "g", "solver", "sweep", "min_gap", "target_plate"},
                   "");

    Scenario sc;
    const std::string version =
        as_string(need(root, "spec_version", ""), "/spec_version");
    if (version != kSchemaVersion)
        schema_error("schema_bad_value", "/spec_version",
                     "unsupported version \"" + version + "\"");

    if (auto it = root.find("seed"); it != root.end())
        sc.seed = static_cast<std::uint64_t>(as_integer(*it, "/seed"));
    if (seed_override >= 0)
        sc.seed = static_cast<std::uint64_t>(seed_override);

    {
        const json& jk = need(root, "kernel", "");
        expect_object(jk, "/kernel");
        reject_unknown(jk, {"alpha", "dim", "h"}, "/kernel");
        sc.kernel.alpha = as_number(need(jk, "alpha", "/kernel"),
                                    "/kernel/alpha");
        sc.kernel.dim = static_cast<int>(
            as_integer(need(jk, "dim", "/kernel"), "/kernel/dim"));
        if (auto it = jk.find("h"); it != jk.end())
            sc.kernel.h = as_number(*it, "/kernel/h");
        sc.kernel.check();
    }

    const json& jplates = need(root, "plates", "");
    if (!jplates.is_array() || jplates.empty())
        schema_error("schema_wrong_type", "/plates",
                     "expected a nonempty array");
    for (std::size_t i = 0; i < jplates.size(); ++i) {
        const std::string path = "/plates/" + std::to_string(i);
        const json& jp = jplates[i];
        expect_object(jp, path);
        reject_unknown(jp,
                       {"shape", "sign", "node_count", "unbounded",
                        "truncation_radius", "seed"},
                       path);
        Plate plate;
        plate.shape = parse_shape(need(jp, "shape", path), path + "/shape");
        plate.sign = static_cast<int>(
            as_integer(need(jp, "sign", path), path + "/sign"));
        if (plate.sign != 1 && plate.sign != -1)
            schema_error("schema_bad_value", path + "/sign",
                         "expected 1 or -1");
        plate.shape.node_count = static_cast<int>(as_integer(
            need(jp, "node_count", path), path + "/node_count"));
        if (auto it = jp.find("unbounded"); it != jp.end())
            plate.unbounded = as_boolean(*it, path + "/unbounded");
        if (auto it = jp.find("truncation_radius"); it != jp.end())
            plate.truncation_radius =
                as_number(*it, path + "/truncation_radius");
        if (auto it = jp.find("seed"); it != jp.end())
            plate.shape.seed = static_cast<std::uint64_t>(
                as_integer(*it, path + "/seed"));
        else
            plate.shape.seed = sc.seed + i;
        if (plate.shape.kind == ShapeSpec::Kind::rotational_body) {
            if (!plate.truncation_radius)
                schema_error("schema_missing_field",
                             path + "/truncation_radius",
                             "rotational bodies need a truncation radius");
            plate.shape.truncation_radius = *plate.truncation_radius;
        }
        if (plate.shape.dim() != sc.kernel.dim)
            schema_error("schema_bad_value", path + "/shape",
                         "shape dimension differs from the kernel dimension");
        plate.shape.check();
        plate.nodes = generate_nodes(plate.shape);
        sc.condenser.plates.push_back(std::move(plate));
    }

    if (auto it = root.find("chi"); it != root.end()) {
        if (!it->is_array())
            schema_error("schema_wrong_type", "/chi", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = "/chi/" + std::to_string(i);
            const json& ja = (*it)[i];
            expect_object(ja, path);
            reject_unknown(ja, {"position", "weight"}, path);
            SignedAtom atom;
            atom.position = as_point(need(ja, "position", path),
                                     path + "/position");
            if (static_cast<int>(atom.position.size()) != sc.kernel.dim)
                schema_error("schema_bad_value", path + "/position",
                             "dimension differs from the kernel dimension");
            atom.weight = as_number(need(ja, "weight", path),
                                    path + "/weight");
            sc.condenser.chi.atoms.push_back(std::move(atom));
        }
    }

    {
        const json& ja = need(root, "a", "");
        if (!ja.is_array())
            schema_error("schema_wrong_type", "/a", "expected an array");
        if (ja.size() != sc.condenser.plates.size())
            schema_error("a_size_mismatch", "/a",
                         "expected one entry per plate");
        for (std::size_t i = 0; i < ja.size(); ++i) {
            const std::string path = "/a/" + std::to_string(i);
            const double v = as_number(ja[i], path);
            if (!(v > 0.0))
                schema_error("a_positive_violated", path,
                             "moments must be positive");
            sc.condenser.a.push_back(v);
        }
    }

    {
        sc.condenser.g_values.resize(sc.condenser.plates.size());
        auto constant_g = [&](double value) {
            for (std::size_t i = 0; i < sc.condenser.plates.size(); ++i)
                sc.condenser.g_values[i].assign(
                    sc.condenser.plates[i].nodes.size(), value);
        };
        auto it = root.find("g");
        if (it == root.end()) {
            constant_g(1.0);
        } else if (it->is_string()) {
            const std::string s = it->get<std::string>();
            const std::string prefix = "constant:";
            if (s.rfind(prefix, 0) != 0)
                schema_error("schema_bad_value", "/g",
                             "expected \"constant:<value>\" or an array");
            char* end = nullptr;
            const double v = std::strtod(s.c_str() + prefix.size(), &end);
            if (end == nullptr || *end != '\0')
                schema_error("schema_bad_value", "/g",
                             "could not parse the constant");
            constant_g(v);
        } else if (it->is_array()) {
            if (it->size() != sc.condenser.plates.size())
                schema_error("g_size_mismatch", "/g",
                             "expected one entry per plate");
            for (std::size_t i = 0; i < it->size(); ++i) {
                const std::string path = "/g/" + std::to_string(i);
                const json& jg = (*it)[i];
                const std::size_t n = sc.condenser.plates[i].nodes.size();
                if (jg.is_number()) {
                    sc.condenser.g_values[i].assign(n, jg.get<double>());
                } else if (jg.is_array()) {
                    if (jg.size() != n)
                        schema_error("g_size_mismatch", path,
                                     "expected one value per node");
                    for (std::size_t k = 0; k < n; ++k)
                        sc.condenser.g_values[i].push_back(as_number(
                            jg[k], path + "/" + std::to_string(k)));
                } else {
                    schema_error("schema_wrong_type", path,
                                 "expected a number or an array");
                }
            }
        } else {
            schema_error("schema_wrong_type", "/g",
                         "expected a string or an array");
        }
    }

    if (auto it = root.find("min_gap"); it != root.end())
        sc.condenser.min_gap = as_number(*it, "/min_gap");

    if (auto it = root.find("solver"); it != root.end()) {
        const json& js = *it;
        expect_object(js, "/solver");
        reject_unknown(js,
                       {"gap_tol", "max_iterations", "sigma",
                        "full_identity_check", "aux_method", "constrained"},
                       "/solver");
        if (auto f = js.find("gap_tol"); f != js.end())
            sc.solver.gap_tol = as_number(*f, "/solver/gap_tol");
        if (auto f = js.find("max_iterations"); f != js.end())
            sc.solver.max_iterations =
                as_integer(*f, "/solver/max_iterations");
        if (auto f = js.find("sigma"); f != js.end())
            sc.solver.sigma = as_number(*f, "/solver/sigma");
        if (auto f = js.find("full_identity_check"); f != js.end())
            sc.solver.full_identity_check =
                as_boolean(*f, "/solver/full_identity_check");
        if (auto f = js.find("aux_method"); f != js.end()) {
            const std::string m = as_string(*f, "/solver/aux_method");
            if (m == "nested")
                sc.solver.aux_method = AuxiliaryMethod::nested;
            else if (m == "direct")
                sc.solver.aux_method = AuxiliaryMethod::direct_bound;
            else
                schema_error("schema_bad_value", "/solver/aux_method",
                             "expected \"nested\" or \"direct\"");
        }
        if (auto f = js.find("constrained"); f != js.end()) {
            if (!f->is_array())
                schema_error("schema_wrong_type", "/solver/constrained",
                             "expected an array of plate indices");
            for (std::size_t i = 0; i < f->size(); ++i)
                sc.solver.constrained.push_back(static_cast<int>(as_integer(
                    (*f)[i],
                    "/solver/constrained/" + std::to_string(i))));
        }
        if (!(sc.solver.gap_tol > 0.0))
            schema_error("schema_bad_value", "/solver/gap_tol",
                         "must be positive");
        if (!(sc.solver.sigma > 0.0) || sc.solver.sigma >= 1.0)
            schema_error("schema_bad_value", "/solver/sigma",
                         "must lie in (0, 1)");
    }

    if (auto it = root.find("sweep"); it != root.end()) {
        const json& jw = *it;
        expect_object(jw, "/sweep");
        reject_unknown(jw, {"radii", "window_radius", "ell"}, "/sweep");
        const json& jr = need(jw, "radii", "/sweep");
        if (!jr.is_array() || jr.empty())
            schema_error("schema_wrong_type", "/sweep/radii",
                         "expected a nonempty array");
        for (std::size_t i = 0; i < jr.size(); ++i)
            sc.sweep.radii.push_back(
                as_number(jr[i], "/sweep/radii/" + std::to_string(i)));
        for (std::size_t i = 1; i < sc.sweep.radii.size(); ++i)
            if (!(sc.sweep.radii[i] > sc.sweep.radii[i - 1]))
                schema_error("schema_bad_value",
                             "/sweep/radii/" + std::to_string(i),
                             "radii must be strictly increasing");
        if (auto f = jw.find("window_radius"); f != jw.end())
            sc.sweep.window_radius = as_number(*f, "/sweep/window_radius");
        if (auto f = jw.find("ell"); f != jw.end())
            sc.sweep.ell =
                static_cast<int>(as_integer(*f, "/sweep/ell"));
    }

    if (auto it = root.find("target_plate"); it != root.end())
        sc.target_plate =
            static_cast<int>(as_integer(*it, "/target_plate"));
    if (sc.target_plate < 0 ||
        static_cast<std::size_t>(sc.target_plate) >=
            sc.condenser.plates.size())
        schema_error("schema_bad_value", "/target_plate", "out of range");

    const ValidationReport vr = validate(sc.condenser);
    if (!vr.ok)
        throw ValidationError(vr.failure, vr.detail);

    // Normalized echo: every default materialized, per-plate seeds pinned.
    json echo;
    echo["spec_version"] = kSchemaVersion;
    echo["seed"] = sc.seed;
    echo["kernel"] = {{"alpha", sc.kernel.alpha}, {"dim", sc.kernel.dim}};
    if (sc.kernel.h)
        echo["kernel"]["h"] = *sc.kernel.h;
    echo["plates"] = json::array();
    for (const Plate& plate : sc.condenser.plates) {
        json jp;
        jp["shape"] = shape_echo(plate.shape);
        jp["sign"] = plate.sign;
        jp["node_count"] = plate.shape.node_count;
        jp["seed"] = plate.shape.seed;
        if (plate.unbounded)
            jp["unbounded"] = true;
        if (plate.truncation_radius)
            jp["truncation_radius"] = *plate.truncation_radius;
        echo["plates"].push_back(std::move(jp));
    }
    echo["chi"] = json::array();
    for (const SignedAtom& atom : sc.condenser.chi.atoms)
        echo["chi"].push_back(
            {{"position", atom.position}, {"weight", atom.weight}});
    echo["a"] = sc.condenser.a;
    echo["g"] = sc.condenser.g_values;
    echo["min_gap"] = sc.condenser.min_gap;
    echo["solver"] = {
        {"gap_tol", sc.solver.gap_tol},
        {"max_iterations", sc.solver.max_iterations},
        {"sigma", sc.solver.sigma},
        {"full_identity_check", sc.solver.full_identity_check},
        {"aux_method", sc.solver.aux_method == AuxiliaryMethod::nested
                           ? "nested"
                           : "direct"}};
    if (!sc.solver.constrained.empty())
        echo["solver"]["constrained"] = sc.solver.constrained;
    if (!sc.sweep.radii.empty()) {
        echo["sweep"] = {{"radii", sc.sweep.radii}};
        if (sc.sweep.window_radius > 0.0)
            echo["sweep"]["window_radius"] = sc.sweep.window_radius;
        if (sc.sweep.ell >= 0)
            echo["sweep"]["ell"] = sc.sweep.ell;
    }
    echo["target_plate"] = sc.target_plate;
    sc.echo_json = dump_17(echo);
    return sc;
}

int pick_ell(const Scenario& sc) {
    if (sc.sweep.ell >= 0) {
        if (static_cast<std::size_t>(sc.sweep.ell) >=
            sc.condenser.plates.size())
            throw ValidationError("schema_bad_value", "/sweep/ell: out of range");
        return sc.sweep.ell;
    }
    int ell = -1;
    for (std::size_t i = 0; i < sc.condenser.plates.size(); ++i) {
        if (!sc.condenser.plates[i].unbounded)
            continue;
        if (ell >= 0)
            throw ValidationError("ambiguous_unbounded_plate",
                                  "several plates carry the unbounded flag; "
                                  "set sweep.ell");
        ell = static_cast<int>(i);
    }
    if (ell < 0)
        throw ValidationError("no_unbounded_plate",
                              "no plate carries the unbounded flag");
    return ell;
}

std::vector<int> default_constrained(const Scenario& sc) {
    if (!sc.solver.constrained.empty())
        return sc.solver.constrained;
    std::vector<int> out;
    for (std::size_t i = 0; i < sc.condenser.plates.size(); ++i)
        if (!sc.condenser.plates[i].unbounded)
            out.push_back(static_cast<int>(i));
    return out;
}

// ---------------------------------------------------------------------------
// Result rendering.

json kkt_json(const KktReport& kkt) {
    return {{"eta", kkt.eta},
            {"lower_violation", kkt.lower_violation},
            {"support_violation", kkt.support_violation},
            {"potential_scale", kkt.potential_scale},
            {"moment_scale", kkt.moment_scale},
            {"sum_rule_residual", kkt.sum_rule_residual}};
}

json solve_json(const SolveReport& rep) {
    json weights = json::array();
    for (const DiscreteMeasure& c : rep.minimizer.components)
        weights.push_back(c.weights);
    return {{"value", rep.value},
            {"duality_gap", rep.duality_gap},
            {"iterations", rep.iterations},
            {"converged", rep.converged},
            {"identity_residual", rep.identity_residual},
            {"feasibility_residuals", rep.feasibility_residuals},
            {"kkt", kkt_json(rep.kkt)},
            {"wallclock_seconds", rep.wallclock_seconds},
            {"minimizer", std::move(weights)}};
}

std::vector<std::size_t> plate_targets(const EnergyContext& ctx, int plate) {
    std::vector<std::size_t> out;
    for (std::size_t k : ctx.plate_index[plate])
        out.push_back(k);
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_failed", "cannot open " + path);
    out << text;
    if (!out)
        throw IoError("write_failed", "cannot write " + path);
}

std::string sweep_csv(const std::vector<ExhaustionRecord>& records) {
    std::string csv = "R,value,aux_value,sigma_ell,a_ell,window_mass,verdict\n";
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const ExhaustionRecord& rec : records) {
        csv += num(rec.truncation_radius) + "," + num(rec.value) + "," +
               num(rec.aux_value) + "," + num(rec.sigma_estimate) + "," +
               num(rec.a_ell) + "," + num(rec.window_mass) + "," +
               rec.verdict + "\n";
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Selftest: one self-checking example per module, no scenario needed.

struct SelfCheck {
    std::string name;
    bool pass = false;
    std::string note;
};

Condenser two_point_condenser(double separation, double a0, double a1) {
    Condenser cond;
    Plate p0, p1;
    p0.nodes = {{0.0, 0.0, 0.0}};
    p0.sign = 1;
    p1.nodes = {{separation, 0.0, 0.0}};
    p1.sign = -1;
    cond.plates = {p0, p1};
    cond.a = {a0, a1};
    cond.g_values = {{1.0}, {1.0}};
    return cond;
}

std::vector<SelfCheck> run_selftest() {
    std::vector<SelfCheck> checks;
    auto add = [&](const std::string& name, bool pass,
                   const std::string& note = "") {
        checks.push_back({name, pass, note});
    };
    KernelSpec kernel;
    kernel.alpha = 2.0;
    kernel.dim = 3;

    try {
        std::vector<Point> pts = {{0.0}, {1.0}, {3.0}};
        auto d = nearest_neighbor_distances(pts);
        add("geometry_nearest_neighbor",
            d == std::vector<double>({1.0, 1.0, 2.0}));
    } catch (const Error& e) {
        add("geometry_nearest_neighbor", false, e.what());
    }

    try {
        // Two unit-separated points: off-diagonal 1/|x-y| = 1, diagonal
        // 1/(0.5 * 1) = 2.
        std::vector<Point> pts = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
        EnergyForm form = assemble_gram(kernel, pts,
                                        nearest_neighbor_distances(pts), 0.5);
        add("kernel_gram_rule",
            std::abs(form.row(0)[1] - 1.0) < 1e-9 &&
                std::abs(form.row(0)[0] - 2.0) < 1e-6);
    } catch (const Error& e) {
        add("kernel_gram_rule", false, e.what());
    }

    try {
        Condenser cond = two_point_condenser(2.0, 1.0, 1.0);
        cond.a[0] = 0.0;
        add("measures_validation",
            validate(cond).failure == "a_positive_violated");
    } catch (const Error& e) {
        add("measures_validation", false, e.what());
    }

    try {
        // Unit atoms two apart: mutual energy 1/2.
        Condenser cond = two_point_condenser(2.0, 1.0, 1.0);
        EnergyContext ctx = build_context(kernel, cond);
        SignedMeasure nu0, nu1;
        nu0.atoms = {{{0.0, 0.0, 0.0}, 1.0}};
        nu1.atoms = {{{2.0, 0.0, 0.0}, 1.0}};
        add("energy_mutual",
            std::abs(mutual_energy(ctx, nu0, nu1) - 0.5) < 1e-12);
    } catch (const Error& e) {
        add("energy_mutual", false, e.what());
    }

    try {
        // A nonnegative measure already on the plate projects to itself.
        Condenser cond = two_point_condenser(2.0, 1.0, 1.0);
        EnergyContext ctx = build_context(kernel, cond);
        SignedMeasure nu;
        nu.atoms = {{{0.0, 0.0, 0.0}, 1.0}};
        ProjectionResult pr = balayage(ctx, nu, 0);
        add("projection_fixed_point",
            std::abs(pr.projected.weights[0] - 1.0) < 1e-9 &&
                pr.distance < 1e-7);
    } catch (const Error& e) {
        add("projection_fixed_point", false, e.what());
    }

    try {
        // Single node: capacity = 1 / G_00.
        Condenser cond = two_point_condenser(2.0, 1.0, 1.0);
        EnergyContext ctx = build_context(kernel, cond);
        EquilibriumResult eq =
            equilibrium_measure(ctx, plate_targets(ctx, 0));
        const double expected = 1.0 / ctx.form.row(0)[0];
        add("equilibrium_single_node",
            std::abs(eq.capacity - expected) < 1e-9);
    } catch (const Error& e) {
        add("equilibrium_single_node", false, e.what());
    }

    try {
        // Two single-node plates: weights forced to 1, value known.
        Condenser cond = two_point_condenser(2.0, 1.0, 1.0);
        EnergyContext ctx = build_context(kernel, cond);
        SolveReport rep = solve_gauss(ctx);
        const double g00 = ctx.form.row(0)[0];
        const double g01 = ctx.form.row(0)[1];
        const double expected = 2.0 * g00 - 2.0 * g01;
        add("solver_forced_value",
            rep.converged && std::abs(rep.value - expected) < 1e-9);
    } catch (const Error& e) {
        add("solver_forced_value", false, e.what());
    }

    try {
        // a_ell equal to the threshold lands in the boundary band.
        Condenser cond = two_point_condenser(4.0, 1.0, 1.0);
        EnergyContext ctx = build_context(kernel, cond);
        SolvabilityReport first = sigma_threshold(ctx, 1);
        cond.a[1] = first.sigma_ell;
        EnergyContext ctx2 = build_context(kernel, cond);
        SolvabilityReport second = sigma_threshold(ctx2, 1);
        add("diagnostics_boundary_band", second.verdict == "boundary");
    } catch (const Error& e) {
        add("diagnostics_boundary_band", false, e.what());
    }

    try {
        const std::string minimal = R"({
            "spec_version": "1",
            "kernel": {"alpha": 2.0, "dim": 3},
            "plates": [
                {"shape": {"kind": "sphere_shell", "center": [0,0,0], "radius": 1.0},
                 "sign": 1, "node_count": 16},
                {"shape": {"kind": "sphere_shell", "center": [4,0,0], "radius": 1.0},
                 "sign": -1, "node_count": 16}
            ],
            "a": [1.0, 1.0]
        })";
        Scenario sc = parse_scenario_text(minimal);
        add("scenario_defaults",
            sc.solver.gap_tol == 1e-9 && sc.solver.sigma == 0.5 &&
                sc.condenser.g_values[0] ==
                    std::vector<double>(16, 1.0));
    } catch (const Error& e) {
        add("scenario_defaults", false, e.what());
    }

    return checks;
}

} // namespace

Scenario parse_scenario_text(const std::string& text,
                             long long seed_override) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("schema_invalid_json", e.what());
    }
    return parse_scenario_impl(root, seed_override);
}

Scenario parse_scenario(const std::string& path, long long seed_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("read_failed", "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_text(buffer.str(), seed_override);
}

int run_command(const RunArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    json report;
    report["spec_version"] = kSchemaVersion;
    report["command"] = args.command;
    report["versions"] = {{"gvp", kVersion},
                          {"simd_backend", simd::backend_name()}};

    std::error_code mkdir_ec;
    std::filesystem::create_directories(args.out_dir, mkdir_ec);

    auto finish = [&](int code) {
        report["wallclock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t0)
                .count();
        report["exit_code"] = code;
        const std::string path = args.out_dir + "/report.json";
        try {
            write_text_file(path, dump_17(report));
        } catch (const IoError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return code == 0 ? 4 : code;
        }
        return code;
    };
    auto fail = [&](const Error& e, int code) {
        report["error"] = {{"code", e.code()}, {"message", e.what()}};
        std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
        return finish(code);
    };

    try {
        static const std::set<std::string> commands = {
            "solve",    "project", "equilibrium", "capacity",
            "diagnose", "sweep",   "selftest"};
        if (!commands.count(args.command))
            throw ValidationError("unknown_command",
                                  "unknown command \"" + args.command + "\"");

        if (args.command == "selftest") {
            const std::vector<SelfCheck> checks = run_selftest();
            int passed = 0;
            json list = json::array();
            for (const SelfCheck& c : checks) {
                passed += c.pass ? 1 : 0;
                std::printf("%-28s %s\n", c.name.c_str(),
                            c.pass ? "pass" : "FAIL");
                json entry = {{"name", c.name}, {"pass", c.pass}};
                if (!c.note.empty())
                    entry["note"] = c.note;
                list.push_back(std::move(entry));
            }
            const int failed = static_cast<int>(checks.size()) - passed;
            std::printf("%d passed, %d failed\n", passed, failed);
            report["results"] = {{"passed", passed},
                                 {"failed", failed},
                                 {"checks", std::move(list)}};
            return finish(failed == 0 ? 0 : 1);
        }

        if (args.scenario_path.empty())
            throw ValidationError("scenario_missing",
                                  "the command needs --scenario");
        Scenario sc = parse_scenario(args.scenario_path, args.seed);
        if (args.gap_tol > 0.0)
            sc.solver.gap_tol = args.gap_tol;
        if (args.max_iterations >= 0)
            sc.solver.max_iterations = args.max_iterations;
        report["seed"] = sc.seed;
        report["scenario"] = json::parse(sc.echo_json);

        EnergyContext ctx =
            build_context(sc.kernel, sc.condenser, sc.solver.sigma);
        SolveOptions base;
        base.gap_tol = sc.solver.gap_tol;
        base.max_iterations = sc.solver.max_iterations;
        base.full_identity_check = sc.solver.full_identity_check;

        int code = 0;
        if (args.command == "solve") {
            SolveReport rep;
            if (args.mode == "aux") {
                AuxiliaryOptions options;
                static_cast<SolveOptions&>(options) = base;
                options.method = sc.solver.aux_method;
                options.constrained = default_constrained(sc);
                rep = solve_auxiliary(ctx, options);
                report["results"] = solve_json(rep);
                report["results"]["mode"] = "aux";
                report["results"]["constrained"] = options.constrained;
            } else if (args.mode == "full") {
                rep = solve_gauss(ctx, base);
                report["results"] = solve_json(rep);
                report["results"]["mode"] = "full";
            } else {
                throw ValidationError("unknown_mode",
                                      "--mode must be full or aux");
            }
            std::printf("value %.17g  gap %.17g  iterations %ld%s\n",
                        rep.value, rep.duality_gap, rep.iterations,
                        rep.converged ? "" : "  (not converged)");
            if (!rep.converged)
                code = 3;
        } else if (args.command == "project") {
            ProjectionResult pr =
                balayage(ctx, sc.condenser.chi, sc.target_plate);
            double min_residual = 0.0;
            for (double r : pr.kkt_residuals)
                min_residual = std::min(min_residual, r);
            report["results"] = {
                {"plate", sc.target_plate},
                {"swept_mass", pr.swept_mass},
                {"distance", pr.distance},
                {"complementarity_residual", pr.complementarity_residual},
                {"min_kkt_residual", min_residual},
                {"iterations", pr.iterations},
                {"weights", pr.projected.weights}};
            if (pr.mass_bound)
                report["results"]["mass_bound"] = *pr.mass_bound;
            std::printf("swept mass %.17g  distance %.17g\n", pr.swept_mass,
                        pr.distance);
        } else if (args.command == "equilibrium" ||
                   args.command == "capacity") {
            EquilibriumResult eq =
                equilibrium_measure(ctx, plate_targets(ctx, sc.target_plate));
            if (args.command == "capacity") {
                report["results"] = {{"plate", sc.target_plate},
                                     {"capacity", eq.capacity}};
            } else {
                double deficit = 0.0, support_dev = 0.0;
                for (std::size_t t = 0; t < eq.potential_at_nodes.size();
                     ++t) {
                    deficit = std::max(deficit,
                                       1.0 - eq.potential_at_nodes[t]);
                    if (eq.measure.weights[t] > 0.0)
                        support_dev =
                            std::max(support_dev,
                                     std::abs(eq.potential_at_nodes[t] - 1.0));
                }
                report["results"] = {{"plate", sc.target_plate},
                                     {"capacity", eq.capacity},
                                     {"energy", eq.energy},
                                     {"iterations", eq.iterations},
                                     {"max_potential_deficit", deficit},
                                     {"support_potential_deviation",
                                      support_dev},
                                     {"weights", eq.measure.weights}};
            }
            std::printf("capacity %.17g\n", eq.capacity);
        } else if (args.command == "diagnose") {
            const int ell = pick_ell(sc);
            SolvabilityOptions options;
            static_cast<SolveOptions&>(options) = base;
            options.method = sc.solver.aux_method;
            SolvabilityReport sr = sigma_threshold(ctx, ell, options);
            CoarseBound cb = coarse_bound_check(ctx, ell);
            report["results"] = {{"ell", sr.ell},
                                 {"sigma_ell", sr.sigma_ell},
                                 {"a_ell", sr.a_ell},
                                 {"verdict", sr.verdict},
                                 {"verdict_tol", sr.verdict_tol},
                                 {"aux_value", sr.aux_value},
                                 {"aux_converged", sr.converged},
                                 {"truncation_radius", sr.truncation_radius},
                                 {"swept_mass", sr.swept_measure.mass()},
                                 {"coarse_bound", cb.bound},
                                 {"coarse_triggered", cb.triggered}};
            std::printf("sigma_ell %.17g  a_ell %.17g  verdict %s\n",
                        sr.sigma_ell, sr.a_ell, sr.verdict.c_str());
            if (!sr.converged)
                code = 3;
        } else if (args.command == "sweep") {
            const int ell = pick_ell(sc);
            if (sc.sweep.radii.empty())
                throw ValidationError("sweep_missing",
                                      "the sweep command needs sweep.radii");
            const auto& g_ell = sc.condenser.g_values[ell];
            for (double gv : g_ell)
                if (gv != g_ell.front())
                    throw ValidationError(
                        "sweep_needs_constant_g",
                        "plate " + std::to_string(ell) +
                            " must carry a constant g across the sweep");
            if (sc.condenser.plates[ell].truncation_radius &&
                sc.sweep.radii.back() >
                    *sc.condenser.plates[ell].truncation_radius *
                        (1.0 + 1e-12))
                throw ValidationError(
                    "sweep_radii_exceed_truncation",
                    "the largest radius exceeds the plate truncation");
            SolvabilityOptions options;
            static_cast<SolveOptions&>(options) = base;
            options.method = sc.solver.aux_method;
            options.window_radius = sc.sweep.window_radius;
            const std::vector<ExhaustionRecord> records =
                exhaustion_sweep(ctx, ell, sc.sweep.radii, options);
            write_text_file(args.out_dir + "/results.csv",
                            sweep_csv(records));
            json list = json::array();
            bool all_ok = true;
            for (const ExhaustionRecord& rec : records) {
                json entry = {{"truncation_radius", rec.truncation_radius},
                              {"value", rec.value},
                              {"aux_value", rec.aux_value},
                              {"sigma_estimate", rec.sigma_estimate},
                              {"a_ell", rec.a_ell},
                              {"window_mass", rec.window_mass},
                              {"verdict", rec.verdict},
                              {"solver_converged", rec.solver_converged}};
                if (!rec.error.empty())
                    entry["error"] = rec.error;
                all_ok = all_ok && rec.error.empty() && rec.solver_converged;
                list.push_back(std::move(entry));
                std::printf("R %-8.4g value %-22.17g sigma %-22.17g %s\n",
                            rec.truncation_radius, rec.value,
                            rec.sigma_estimate, rec.verdict.c_str());
            }
            report["results"] = {{"ell", ell},
                                 {"window_radius",
                                  options.window_radius > 0.0
                                      ? options.window_radius
                                      : sc.sweep.radii.front()},
                                 {"records", std::move(list)}};
            if (!all_ok)
                code = 3;
        }
        return finish(code);
    } catch (const IoError& e) {
        return fail(e, 4);
    } catch (const ConvergenceError& e) {
        return fail(e, 3);
    } catch (const ValidationError& e) {
        return fail(e, 2);
    } catch (const Error& e) {
        return fail(e, 2);
    }
}

} // namespace gvp
