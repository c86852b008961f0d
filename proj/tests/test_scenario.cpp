// Strict scenario schema, echo normalization, and the command driver.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gvp/energy.hpp"
#include "gvp/errors.hpp"
#include "gvp/scenario.hpp"
#include "gvp/solver.hpp"

using namespace gvp;
using nlohmann::json;

namespace {

json base_doc() {
    return json::parse(R"({
        "spec_version": "1",
        "kernel": {"alpha": 2.0, "dim": 3},
        "plates": [
            {"shape": {"kind": "sphere_shell", "center": [0, 0, 0],
                       "radius": 1.0},
             "sign": 1, "node_count": 24},
            {"shape": {"kind": "sphere_shell", "center": [4, 0, 0],
                       "radius": 0.5},
             "sign": -1, "node_count": 16}
        ],
        "a": [1.0, 1.0]
    })");
}

json sweep_doc() {
    return json::parse(R"({
        "spec_version": "1",
        "seed": 3,
        "kernel": {"alpha": 2.0, "dim": 3},
        "plates": [
            {"shape": {"kind": "sphere_shell", "center": [-3, 0, 0],
                       "radius": 0.5},
             "sign": 1, "node_count": 40},
            {"shape": {"kind": "rotational_body", "q": 1.0,
                       "profile": {"kind": "power", "s": 1.0}},
             "sign": -1, "node_count": 200,
             "unbounded": true, "truncation_radius": 8.0}
        ],
        "a": [1.0, 1.0],
        "sweep": {"radii": [3.0, 5.0, 8.0]}
    })");
}

// Expects parsing to fail with the given code and a message naming the
// offending JSON path.
void expect_error(const json& doc, const std::string& code,
                  const std::string& path_fragment) {
    try {
        parse_scenario_text(doc.dump());
        FAIL("expected ", code, " at ", path_fragment);
    } catch (const ValidationError& e) {
        CHECK(e.code() == code);
        CHECK(std::string(e.what()).find(path_fragment) != std::string::npos);
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

// Scratch directory per test case; cleaned up on destruction.
struct Scratch {
    std::filesystem::path dir;

    explicit Scratch(const std::string& name)
        : dir(std::filesystem::current_path() / ("scratch_" + name)) {
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    std::string file(const std::string& name, const json& doc) const {
        const std::string path = (dir / name).string();
        spill(path, doc.dump());
        return path;
    }
    std::string out(const std::string& name) const {
        return (dir / name).string();
    }
};

json report_of(const std::string& out_dir) {
    return json::parse(slurp(out_dir + "/report.json"));
}

} // namespace

TEST_CASE("defaults are materialized on a minimal scenario") {
    const Scenario sc = parse_scenario_text(base_doc().dump());
    CHECK(sc.kernel.alpha == 2.0);
    CHECK(sc.kernel.dim == 3);
    CHECK(sc.seed == 0);
    CHECK(sc.target_plate == 0);
    CHECK(sc.solver.gap_tol == 1e-9);
    CHECK(sc.solver.max_iterations == 0);
    CHECK(sc.solver.sigma == 0.5);
    CHECK(!sc.solver.full_identity_check);
    CHECK(sc.solver.aux_method == AuxiliaryMethod::nested);
    CHECK(sc.solver.constrained.empty());
    CHECK(sc.sweep.radii.empty());
    CHECK(sc.condenser.min_gap == 1e-6);
    CHECK(sc.condenser.chi.atoms.empty());
    REQUIRE(sc.condenser.plates.size() == 2);
    CHECK(sc.condenser.plates[0].nodes.size() == 24);
    CHECK(sc.condenser.plates[1].nodes.size() == 16);
    CHECK(sc.condenser.g_values[0] == std::vector<double>(24, 1.0));
    CHECK(sc.condenser.g_values[1] == std::vector<double>(16, 1.0));
    // Per-plate seeds default to the scenario seed plus the plate index.
    CHECK(sc.condenser.plates[0].shape.seed == 0);
    CHECK(sc.condenser.plates[1].shape.seed == 1);
}

TEST_CASE("seed plumbing") {
    json doc = base_doc();
    doc["seed"] = 7;
    const Scenario sc = parse_scenario_text(doc.dump());
    CHECK(sc.seed == 7);
    CHECK(sc.condenser.plates[0].shape.seed == 7);
    CHECK(sc.condenser.plates[1].shape.seed == 8);

    // An explicit plate seed wins over the derived one.
    doc["plates"][1]["seed"] = 99;
    const Scenario sc2 = parse_scenario_text(doc.dump());
    CHECK(sc2.condenser.plates[1].shape.seed == 99);

    // The caller override beats the file.
    const Scenario sc3 = parse_scenario_text(doc.dump(), 12);
    CHECK(sc3.seed == 12);
    CHECK(sc3.condenser.plates[0].shape.seed == 12);
    CHECK(sc3.condenser.plates[1].shape.seed == 99);
}

TEST_CASE("malformed JSON is rejected with its own code") {
    try {
        parse_scenario_text("{\"spec_version\": ");
        FAIL("expected schema_invalid_json");
    } catch (const ValidationError& e) {
        CHECK(e.code() == "schema_invalid_json");
    }
}

TEST_CASE("unknown fields are rejected with the offending path") {
    json doc = base_doc();
    doc["bogus"] = 1;
    expect_error(doc, "schema_unknown_field", "/bogus");

    doc = base_doc();
    doc["plates"][0]["colour"] = "red";
    expect_error(doc, "schema_unknown_field", "/plates/0/colour");

    doc = base_doc();
    doc["kernel"]["beta"] = 2.0;
    expect_error(doc, "schema_unknown_field", "/kernel/beta");

    doc = base_doc();
    doc["plates"][1]["shape"]["twist"] = 1.0;
    expect_error(doc, "schema_unknown_field", "/plates/1/shape/twist");
}

TEST_CASE("missing fields are rejected with the offending path") {
    json doc = base_doc();
    doc.erase("kernel");
    expect_error(doc, "schema_missing_field", "/kernel");

    doc = base_doc();
    doc.erase("a");
    expect_error(doc, "schema_missing_field", "/a");

    doc = base_doc();
    doc["plates"][0].erase("shape");
    expect_error(doc, "schema_missing_field", "/plates/0/shape");

    doc = base_doc();
    doc["plates"][1]["shape"].erase("radius");
    expect_error(doc, "schema_missing_field", "/plates/1/shape/radius");

    // Rotational bodies must state their truncation.
    doc = sweep_doc();
    doc["plates"][1].erase("truncation_radius");
    expect_error(doc, "schema_missing_field", "/plates/1/truncation_radius");
}

TEST_CASE("type errors are rejected with the offending path") {
    json doc = base_doc();
    doc["kernel"]["alpha"] = "two";
    expect_error(doc, "schema_wrong_type", "/kernel/alpha");

    doc = base_doc();
    doc["plates"] = json::object();
    expect_error(doc, "schema_wrong_type", "/plates");

    doc = base_doc();
    doc["a"] = 3.0;
    expect_error(doc, "schema_wrong_type", "/a");

    doc = base_doc();
    doc["plates"][0]["node_count"] = 24.5;
    expect_error(doc, "schema_wrong_type", "/plates/0/node_count");

    doc = base_doc();
    doc["plates"][0]["shape"]["center"] = "origin";
    expect_error(doc, "schema_wrong_type", "/plates/0/shape/center");

    doc = base_doc();
    doc["chi"] = json::object();
    expect_error(doc, "schema_wrong_type", "/chi");

    doc = base_doc();
    doc["g"] = true;
    expect_error(doc, "schema_wrong_type", "/g");

    doc = base_doc();
    doc["solver"] = {{"constrained", 0}};
    expect_error(doc, "schema_wrong_type", "/solver/constrained");
}

TEST_CASE("bad values are rejected with the offending path") {
    json doc = base_doc();
    doc["spec_version"] = "0";
    expect_error(doc, "schema_bad_value", "/spec_version");

    doc = base_doc();
    doc["plates"][0]["sign"] = 0;
    expect_error(doc, "schema_bad_value", "/plates/0/sign");

    doc = base_doc();
    doc["plates"][0]["shape"]["kind"] = "cube";
    expect_error(doc, "schema_bad_value", "/plates/0/shape/kind");

    doc = sweep_doc();
    doc["plates"][1]["shape"]["profile"]["kind"] = "banana";
    expect_error(doc, "schema_bad_value", "/plates/1/shape/profile/kind");

    doc = base_doc();
    doc["solver"] = {{"sigma", 1.0}};
    expect_error(doc, "schema_bad_value", "/solver/sigma");

    doc = base_doc();
    doc["solver"] = {{"gap_tol", 0.0}};
    expect_error(doc, "schema_bad_value", "/solver/gap_tol");

    doc = base_doc();
    doc["solver"] = {{"aux_method", "magic"}};
    expect_error(doc, "schema_bad_value", "/solver/aux_method");

    doc = base_doc();
    doc["target_plate"] = 5;
    expect_error(doc, "schema_bad_value", "/target_plate");

    doc = sweep_doc();
    doc["sweep"]["radii"] = {3.0, 3.0};
    expect_error(doc, "schema_bad_value", "/sweep/radii/1");

    doc = base_doc();
    doc["g"] = "constant:abc";
    expect_error(doc, "schema_bad_value", "/g");

    // A 2D shape under a 3D kernel.
    doc = base_doc();
    doc["plates"][0]["shape"]["center"] = {0.0, 0.0};
    expect_error(doc, "schema_bad_value", "/plates/0/shape");
}

TEST_CASE("condenser-level codes carry JSON paths") {
    json doc = base_doc();
    doc["a"] = {1.0, 1.0, 1.0};
    expect_error(doc, "a_size_mismatch", "/a");

    doc = base_doc();
    doc["a"] = {1.0, -1.0};
    expect_error(doc, "a_positive_violated", "/a/1");

    doc = base_doc();
    doc["g"] = {2.0};
    expect_error(doc, "g_size_mismatch", "/g");

    doc = base_doc();
    doc["g"] = {std::vector<double>(24, 1.0), std::vector<double>(3, 1.0)};
    expect_error(doc, "g_size_mismatch", "/g/1");
}

TEST_CASE("condenser validation failures surface from the parser") {
    // Identical shells from the same seed: the node sets coincide exactly,
    // so the opposite-sign separation check must fire.
    json doc = base_doc();
    doc["plates"][1]["shape"] = doc["plates"][0]["shape"];
    doc["plates"][1]["node_count"] = 24;
    doc["plates"][1]["seed"] = 0;
    try {
        parse_scenario_text(doc.dump());
        FAIL("expected opposite_plates_not_separated");
    } catch (const ValidationError& e) {
        CHECK(e.code() == "opposite_plates_not_separated");
    }
}

TEST_CASE("g spellings") {
    json doc = base_doc();
    doc["g"] = "constant:2.5";
    const Scenario sc = parse_scenario_text(doc.dump());
    CHECK(sc.condenser.g_values[0] == std::vector<double>(24, 2.5));
    CHECK(sc.condenser.g_values[1] == std::vector<double>(16, 2.5));

    doc["g"] = {0.5, 2.0}; // per-plate constants
    const Scenario sc2 = parse_scenario_text(doc.dump());
    CHECK(sc2.condenser.g_values[0] == std::vector<double>(24, 0.5));
    CHECK(sc2.condenser.g_values[1] == std::vector<double>(16, 2.0));

    std::vector<double> per_node(24, 1.0);
    per_node[3] = 4.0;
    doc["g"] = {per_node, std::vector<double>(16, 1.0)};
    const Scenario sc3 = parse_scenario_text(doc.dump());
    CHECK(sc3.condenser.g_values[0][3] == 4.0);
}

TEST_CASE("chi atoms parse with dimension checks") {
    json doc = base_doc();
    doc["chi"] = {{{"position", {0.0, 0.0, 2.5}}, {"weight", 0.3}},
                  {{"position", {-2.0, 0.0, 0.0}}, {"weight", -0.1}}};
    const Scenario sc = parse_scenario_text(doc.dump());
    REQUIRE(sc.condenser.chi.atoms.size() == 2);
    CHECK(sc.condenser.chi.atoms[0].weight == 0.3);
    CHECK(sc.condenser.chi.atoms[1].position[0] == -2.0);

    doc["chi"] = {{{"position", {0.0, 0.0}}, {"weight", 0.3}}};
    expect_error(doc, "schema_bad_value", "/chi/0/position");
}

TEST_CASE("the echo reproduces the scenario and is normalization-stable") {
    json doc = sweep_doc();
    doc["chi"] = {{{"position", {-6.0, 0.0, 0.0}}, {"weight", 0.2}}};
    doc["g"] = "constant:2";
    doc["min_gap"] = 1e-5;
    doc["solver"] = {{"gap_tol", 1e-8},      {"max_iterations", 5000},
                     {"sigma", 0.4},         {"full_identity_check", true},
                     {"aux_method", "direct"}, {"constrained", {0}}};
    doc["sweep"]["window_radius"] = 2.5;
    doc["sweep"]["ell"] = 1;
    doc["target_plate"] = 1;

    const Scenario sc = parse_scenario_text(doc.dump());
    const Scenario rt = parse_scenario_text(sc.echo_json);

    REQUIRE(rt.condenser.plates.size() == sc.condenser.plates.size());
    for (std::size_t i = 0; i < sc.condenser.plates.size(); ++i) {
        CHECK(rt.condenser.plates[i].nodes == sc.condenser.plates[i].nodes);
        CHECK(rt.condenser.plates[i].sign == sc.condenser.plates[i].sign);
        CHECK(rt.condenser.plates[i].unbounded ==
              sc.condenser.plates[i].unbounded);
        CHECK(rt.condenser.plates[i].shape.seed ==
              sc.condenser.plates[i].shape.seed);
    }
    CHECK(rt.condenser.a == sc.condenser.a);
    CHECK(rt.condenser.g_values == sc.condenser.g_values);
    CHECK(rt.condenser.min_gap == sc.condenser.min_gap);
    REQUIRE(rt.condenser.chi.atoms.size() == 1);
    CHECK(rt.condenser.chi.atoms[0].position ==
          sc.condenser.chi.atoms[0].position);
    CHECK(rt.condenser.chi.atoms[0].weight ==
          sc.condenser.chi.atoms[0].weight);
    CHECK(rt.kernel.alpha == sc.kernel.alpha);
    CHECK(rt.kernel.dim == sc.kernel.dim);
    CHECK(rt.seed == sc.seed);
    CHECK(rt.target_plate == 1);
    CHECK(rt.solver.gap_tol == 1e-8);
    CHECK(rt.solver.max_iterations == 5000);
    CHECK(rt.solver.sigma == 0.4);
    CHECK(rt.solver.full_identity_check);
    CHECK(rt.solver.aux_method == AuxiliaryMethod::direct_bound);
    CHECK(rt.solver.constrained == std::vector<int>{0});
    CHECK(rt.sweep.radii == sc.sweep.radii);
    CHECK(rt.sweep.window_radius == 2.5);
    CHECK(rt.sweep.ell == 1);

    // Normalization is idempotent: echoing the echo changes nothing.
    CHECK(rt.echo_json == sc.echo_json);
}

TEST_CASE("selftest command reports every module check") {
    Scratch scratch("selftest");
    RunArgs args;
    args.command = "selftest";
    args.out_dir = scratch.out("");
    CHECK(run_command(args) == 0);
    const json rep = report_of(args.out_dir);
    CHECK(rep["command"] == "selftest");
    CHECK(rep["exit_code"] == 0);
    CHECK(rep["results"]["failed"] == 0);
    CHECK(rep["results"]["passed"].get<int>() >= 9);
}

TEST_CASE("solve command matches an in-process solve bitwise") {
    Scratch scratch("solve");
    RunArgs args;
    args.command = "solve";
    args.scenario_path = scratch.file("scenario.json", base_doc());
    args.out_dir = scratch.out("run");
    REQUIRE(run_command(args) == 0);

    const json rep = report_of(args.out_dir);
    CHECK(rep["command"] == "solve");
    CHECK(rep["exit_code"] == 0);
    CHECK(rep["results"]["mode"] == "full");
    CHECK(rep["results"]["converged"] == true);
    CHECK(rep["scenario"]["spec_version"] == "1");
    CHECK(rep["versions"].contains("simd_backend"));

    const Scenario sc = parse_scenario_text(base_doc().dump());
    const EnergyContext ctx =
        build_context(sc.kernel, sc.condenser, sc.solver.sigma);
    SolveOptions options;
    options.gap_tol = sc.solver.gap_tol;
    const SolveReport direct = solve_gauss(ctx, options);
    CHECK(rep["results"]["value"].get<double>() == direct.value);
    CHECK(rep["results"]["iterations"].get<long>() == direct.iterations);
    const auto w0 =
        rep["results"]["minimizer"][0].get<std::vector<double>>();
    CHECK(w0 == direct.minimizer.components[0].weights);
}

TEST_CASE("solve command auxiliary mode") {
    Scratch scratch("aux");
    RunArgs args;
    args.command = "solve";
    args.mode = "aux";
    args.scenario_path = scratch.file("scenario.json", sweep_doc());
    args.out_dir = scratch.out("run");
    REQUIRE(run_command(args) == 0);
    const json rep = report_of(args.out_dir);
    CHECK(rep["results"]["mode"] == "aux");
    // The unbounded plate is left unconstrained by default.
    CHECK(rep["results"]["constrained"].get<std::vector<int>>() ==
          std::vector<int>{0});

    args.mode = "weird";
    CHECK(run_command(args) == 2);
}

TEST_CASE("solve command reports non-convergence with exit 3") {
    Scratch scratch("cap");
    RunArgs args;
    args.command = "solve";
    args.scenario_path = scratch.file("scenario.json", base_doc());
    args.out_dir = scratch.out("run");
    args.max_iterations = 1;
    CHECK(run_command(args) == 3);
    const json rep = report_of(args.out_dir);
    CHECK(rep["exit_code"] == 3);
    CHECK(rep["results"]["converged"] == false);
}

TEST_CASE("project, equilibrium, and capacity commands") {
    Scratch scratch("cmds");
    json doc = base_doc();
    doc["chi"] = {{{"position", {0.0, 0.0, 2.5}}, {"weight", 1.0}}};
    const std::string path = scratch.file("scenario.json", doc);

    RunArgs args;
    args.scenario_path = path;

    args.command = "project";
    args.out_dir = scratch.out("project");
    REQUIRE(run_command(args) == 0);
    const json prj = report_of(args.out_dir);
    const double swept = prj["results"]["swept_mass"].get<double>();
    CHECK(swept > 0.0);
    CHECK(swept <= prj["results"]["mass_bound"].get<double>() + 1e-9);
    CHECK(prj["results"]["distance"].get<double>() >= 0.0);

    args.command = "capacity";
    args.out_dir = scratch.out("capacity");
    REQUIRE(run_command(args) == 0);
    const double cap =
        report_of(args.out_dir)["results"]["capacity"].get<double>();
    CHECK(cap > 0.0);

    args.command = "equilibrium";
    args.out_dir = scratch.out("equilibrium");
    REQUIRE(run_command(args) == 0);
    const json eq = report_of(args.out_dir);
    CHECK(eq["results"]["capacity"].get<double>() == doctest::Approx(cap));
    CHECK(eq["results"]["max_potential_deficit"].get<double>() < 1e-6);
    CHECK(eq["results"]["support_potential_deviation"].get<double>() < 1e-6);
}

TEST_CASE("diagnose command") {
    Scratch scratch("diagnose");
    json doc = base_doc();
    doc["plates"][1]["unbounded"] = true;
    doc["plates"][1]["truncation_radius"] = 10.0;
    RunArgs args;
    args.command = "diagnose";
    args.scenario_path = scratch.file("scenario.json", doc);
    args.out_dir = scratch.out("run");
    REQUIRE(run_command(args) == 0);
    const json rep = report_of(args.out_dir);
    CHECK(rep["results"]["ell"] == 1);
    CHECK(rep["results"]["sigma_ell"].get<double>() > 0.0);
    const std::string verdict = rep["results"]["verdict"];
    CHECK((verdict == "solvable" || verdict == "nonsolvable" ||
           verdict == "boundary"));
    CHECK(rep["results"]["coarse_bound"].get<double>() == 2.0);

    // Without an unbounded plate the target is ambiguous in the bad way.
    RunArgs plain;
    plain.command = "diagnose";
    plain.scenario_path = scratch.file("plain.json", base_doc());
    plain.out_dir = scratch.out("plain");
    CHECK(run_command(plain) == 2);
    CHECK(report_of(plain.out_dir)["error"]["code"] == "no_unbounded_plate");
}

TEST_CASE("sweep command emits a byte-deterministic CSV") {
    Scratch scratch("sweep");
    RunArgs args;
    args.command = "sweep";
    args.scenario_path = scratch.file("scenario.json", sweep_doc());
    args.out_dir = scratch.out("one");
    REQUIRE(run_command(args) == 0);

    const std::string csv = slurp(args.out_dir + "/results.csv");
    std::istringstream lines(csv);
    std::string header;
    REQUIRE(std::getline(lines, header));
    CHECK(header == "R,value,aux_value,sigma_ell,a_ell,window_mass,verdict");
    int rows = 0;
    for (std::string line; std::getline(lines, line);)
        rows += line.empty() ? 0 : 1;
    CHECK(rows == 3);

    const json rep = report_of(args.out_dir);
    CHECK(rep["results"]["records"].size() == 3);
    CHECK(rep["results"]["window_radius"].get<double>() == 3.0);

    RunArgs again = args;
    again.out_dir = scratch.out("two");
    REQUIRE(run_command(again) == 0);
    CHECK(slurp(again.out_dir + "/results.csv") == csv);
}

TEST_CASE("sweep command input guards") {
    Scratch scratch("sweepbad");
    RunArgs args;
    args.command = "sweep";
    args.out_dir = scratch.out("run");

    // No sweep block.
    json doc = sweep_doc();
    doc.erase("sweep");
    doc["sweep"] = nullptr;
    doc.erase("sweep");
    args.scenario_path = scratch.file("nosweep.json", doc);
    CHECK(run_command(args) == 2);
    CHECK(report_of(args.out_dir)["error"]["code"] == "sweep_missing");

    // Varying g on the swept plate.
    doc = sweep_doc();
    std::vector<double> g1(200, 1.0);
    g1[0] = 2.0;
    doc["g"] = {std::vector<double>(40, 1.0), g1};
    args.scenario_path = scratch.file("varg.json", doc);
    CHECK(run_command(args) == 2);
    CHECK(report_of(args.out_dir)["error"]["code"] ==
          "sweep_needs_constant_g");

    // Radii reaching past the plate truncation.
    doc = sweep_doc();
    doc["sweep"]["radii"] = {3.0, 9.0};
    args.scenario_path = scratch.file("far.json", doc);
    CHECK(run_command(args) == 2);
    CHECK(report_of(args.out_dir)["error"]["code"] ==
          "sweep_radii_exceed_truncation");
}

TEST_CASE("driver error exits") {
    Scratch scratch("errors");
    RunArgs args;
    args.out_dir = scratch.out("run");

    args.command = "frobnicate";
    CHECK(run_command(args) == 2);
    CHECK(report_of(args.out_dir)["error"]["code"] == "unknown_command");

    args.command = "solve";
    args.scenario_path = "";
    CHECK(run_command(args) == 2);
    CHECK(report_of(args.out_dir)["error"]["code"] == "scenario_missing");

    args.scenario_path = scratch.out("absent.json");
    CHECK(run_command(args) == 4);
    CHECK(report_of(args.out_dir)["error"]["code"] == "read_failed");

    spill(scratch.out("broken.json"), "{\"spec_version\": ");
    args.scenario_path = scratch.out("broken.json");
    CHECK(run_command(args) == 2);
    CHECK(report_of(args.out_dir)["error"]["code"] == "schema_invalid_json");
}
