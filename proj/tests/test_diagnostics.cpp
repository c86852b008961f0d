// Solvability threshold, verdicts, exhaustion sweeps, and the coarse bound.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "gvp/diagnostics.hpp"
#include "gvp/solver.hpp"
#include "test_util.hpp"

using namespace gvp;

namespace {

// Point source at distance 2 facing a unit-sphere ell-plate: the swept mass
// has the closed-form continuum limit r/d = 0.5.
struct PointSphereFixture {
    Condenser cond;
    EnergyContext ctx;

    explicit PointSphereFixture(double a_ell = 1.0, int nodes = 400) {
        cond = testutil::make_condenser(
            {testutil::point_plate({2.0, 0.0, 0.0}, 1),
             testutil::plate_from_shape(
                 testutil::sphere({0.0, 0.0, 0.0}, 1.0, nodes, 2), -1)},
            {1.0, a_ell});
        ctx = build_context(testutil::newtonian(), cond);
    }
};

// Negative rotational-body plate (power profile) fed by a positive sphere;
// the plate is flagged unbounded for sweep runs.
Condenser rotational_condenser(double truncation, int body_nodes,
                               double a_ell) {
    ShapeSpec body;
    body.kind = ShapeSpec::Kind::rotational_body;
    body.q = 1.0;
    body.truncation_radius = truncation;
    body.node_count = body_nodes;
    body.profile.kind = ProfileSpec::Kind::power;
    body.profile.s = 1.0;

    Condenser cond = testutil::make_condenser(
        {testutil::plate_from_shape(
             testutil::sphere({-3.0, 0.0, 0.0}, 0.5, 60, 8), 1),
         testutil::plate_from_shape(body, -1)},
        {1.0, a_ell});
    cond.plates[1].unbounded = true;
    cond.plates[1].truncation_radius = truncation;
    return cond;
}

} // namespace

TEST_CASE("with g = 1 the threshold equals the swept mass") {
    PointSphereFixture f(1.0, 120);
    const SolvabilityReport rep = sigma_threshold(f.ctx, 1);
    CHECK(rep.ell == 1);
    CHECK(rep.a_ell == 1.0);
    CHECK(rep.converged);
    CHECK(testutil::rel_diff(rep.sigma_ell, rep.swept_measure.mass()) < 1e-12);
    CHECK(rep.swept_measure.plate_index == 1);
    CHECK(rep.verdict_tol == doctest::Approx(1e-4).epsilon(1e-12));

    // Scaling g on the ell-plate scales the moment but not the sweep target.
    Condenser scaled = f.cond;
    scaled.g_values[1].assign(scaled.plates[1].nodes.size(), 2.0);
    const EnergyContext ctx2 = build_context(testutil::newtonian(), scaled);
    const SolvabilityReport rep2 = sigma_threshold(ctx2, 1);
    CHECK(testutil::rel_diff(rep2.sigma_ell,
                             2.0 * rep2.swept_measure.mass()) < 1e-12);
}

TEST_CASE("the threshold reproduces the continuum swept mass r/d") {
    PointSphereFixture f;
    const SolvabilityReport rep = sigma_threshold(f.ctx, 1);
    CHECK(std::abs(rep.sigma_ell - 0.5) < 0.025);
    // a_ell = 1 > sigma: on the nonsolvable side.
    CHECK(rep.verdict == "nonsolvable");
}

TEST_CASE("verdict bands around the threshold") {
    PointSphereFixture probe(1.0, 100);
    const double sigma = sigma_threshold(probe.ctx, 1).sigma_ell;
    REQUIRE(sigma > 0.1);

    auto verdict_at = [&](double a_ell, double tol = 0.0) {
        PointSphereFixture f(a_ell, 100);
        SolvabilityOptions opt;
        opt.verdict_tol = tol;
        const SolvabilityReport rep = sigma_threshold(f.ctx, 1, opt);
        // Sigma does not depend on a_ell.
        CHECK(testutil::rel_diff(rep.sigma_ell, sigma) < 1e-12);
        return rep.verdict;
    };

    CHECK(verdict_at(sigma) == "boundary");
    CHECK(verdict_at(sigma * (1.0 + 0.5e-4)) == "boundary");
    CHECK(verdict_at(sigma * (1.0 - 3.0e-4)) == "solvable");
    CHECK(verdict_at(sigma * (1.0 + 3.0e-4)) == "nonsolvable");
    CHECK(verdict_at(0.5 * sigma) == "solvable");
    CHECK(verdict_at(2.0 * sigma) == "nonsolvable");
    // A wide custom tolerance turns a clear verdict into boundary.
    CHECK(verdict_at(2.0 * sigma, 3.0 * sigma) == "boundary");
}

TEST_CASE("threshold preconditions") {
    PointSphereFixture f(1.0, 60);
    CHECK_THROWS_AS(sigma_threshold(f.ctx, 5), ValidationError);
    CHECK_THROWS_AS(sigma_threshold(f.ctx, -1), ValidationError);

    // Two equal-sign plates may touch (validation allows it) but the
    // threshold needs the ell-plate separated from everything.
    Condenser touching = testutil::make_condenser(
        {testutil::point_plate({2.0, 0.0, 0.0}, 1),
         testutil::point_plate({-2.0, 0.0, 0.0}, -1),
         testutil::point_plate({-2.0, 0.0, 1e-8}, -1)},
        {1.0, 1.0, 1.0});
    const EnergyContext ctx = build_context(testutil::newtonian(), touching);
    try {
        sigma_threshold(ctx, 1);
        FAIL("expected plates_not_disjoint");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.code()) == "plates_not_disjoint");
    }
}

TEST_CASE("sigma is invariant under auxiliary warm starts") {
    PointSphereFixture f(1.0, 150);
    const SolvabilityReport base = sigma_threshold(f.ctx, 1);

    testutil::Rng rng(31);
    const VectorMeasure warm = testutil::random_feasible(f.cond, rng);
    SolvabilityOptions opt;
    opt.warm = &warm;
    const SolvabilityReport again = sigma_threshold(f.ctx, 1, opt);
    CHECK(testutil::rel_diff(base.sigma_ell, again.sigma_ell) < 1e-6);
    CHECK(testutil::rel_diff(base.aux_value, again.aux_value) < 1e-8);
}

TEST_CASE("on the solvable side the full problem activates the constraint") {
    PointSphereFixture probe(1.0, 120);
    const double sigma = sigma_threshold(probe.ctx, 1).sigma_ell;
    PointSphereFixture f(0.5 * sigma, 120);
    const SolveReport rep = solve_gauss(f.ctx);
    CHECK(rep.converged);
    CHECK(rep.feasibility_residuals[1] <= 1e-10 * f.cond.a[1]);
    for (std::size_t i = 0; i < rep.kkt.lower_violation.size(); ++i) {
        CHECK(rep.kkt.lower_violation[i] <=
              1e-6 * rep.kkt.potential_scale[i]);
        CHECK(rep.kkt.support_violation[i] <=
              1e-6 * rep.kkt.moment_scale[i]);
    }
}

TEST_CASE("coarse bound arithmetic and trigger") {
    PointSphereFixture f(1.0, 60);
    // h = 1, g = 1, chi = 0, sum of the other moments = 1: bound = 2.
    const CoarseBound cb = coarse_bound_check(f.ctx, 1);
    CHECK(cb.bound == 2.0);
    CHECK(!cb.triggered);

    PointSphereFixture hot(3.0, 60);
    const CoarseBound cb3 = coarse_bound_check(hot.ctx, 1);
    CHECK(cb3.bound == 2.0);
    CHECK(cb3.triggered);

    // chi and g enter the bound.
    Condenser spiced = f.cond;
    spiced.chi.atoms = {{{10.0, 0.0, 0.0}, 0.5}};
    spiced.g_values[0] = {2.0};
    const EnergyContext sctx = build_context(testutil::newtonian(), spiced);
    // g_sup = 2, g_inf = 1: bound = 1 * 2 * (0.5 + 2*1/1) = 5.
    CHECK(coarse_bound_check(sctx, 1).bound == 5.0);
}

TEST_CASE("a triggered coarse bound always means nonsolvable") {
    testutil::Rng rng(41);
    int triggered_count = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const double a0 = rng.uniform(0.3, 2.0);
        const double a1 = rng.uniform(0.1, 6.0);
        Condenser cond = testutil::make_condenser(
            {testutil::plate_from_shape(
                 testutil::sphere({0.0, 0.0, 0.0}, 0.5, 40, 100 + trial), 1),
             testutil::plate_from_shape(
                 testutil::sphere({4.0, 0.0, 0.0}, 0.8, 40, 200 + trial), -1)},
            {a0, a1});
        const EnergyContext ctx = build_context(testutil::newtonian(), cond);
        const CoarseBound cb = coarse_bound_check(ctx, 1);
        const SolvabilityReport rep = sigma_threshold(ctx, 1);
        CHECK(rep.sigma_ell <= cb.bound * (1.0 + 1e-9));
        if (cb.triggered) {
            ++triggered_count;
            CHECK(rep.verdict == "nonsolvable");
        }
    }
    CHECK(triggered_count > 0); // the sample must exercise the trigger
}

TEST_CASE("exhaustion sweep trends on a power-profile plate") {
    const Condenser cond = rotational_condenser(16.0, 300, 1.0);
    const EnergyContext ctx = build_context(testutil::newtonian(), cond);
    const std::vector<double> radii = {4.0, 8.0, 16.0};
    const auto records = exhaustion_sweep(ctx, 1, radii);
    REQUIRE(records.size() == 3);

    for (std::size_t r = 0; r < records.size(); ++r) {
        const ExhaustionRecord& rec = records[r];
        CHECK(rec.truncation_radius == radii[r]);
        CHECK(rec.error.empty());
        CHECK(rec.solver_converged);
        CHECK(rec.a_ell == 1.0);
        CHECK(std::isfinite(rec.value));
        CHECK(std::isfinite(rec.aux_value));
        CHECK(rec.sigma_estimate > 0.0);
        CHECK(rec.window_mass >= 0.0);
        CHECK(rec.window_mass <= 1.0 + 1e-9);
        // The full value sits above the relaxed auxiliary value.
        CHECK(rec.value - rec.aux_value >= -1e-8 * (1.0 + std::abs(rec.value)));
        CHECK(rec.verdict == "nonsolvable"); // sigma stays below a_ell = 1
    }
    // Larger truncations only improve the minimum.
    for (std::size_t r = 1; r < records.size(); ++r) {
        CHECK(records[r].value <=
              records[r - 1].value +
                  1e-8 * (1.0 + std::abs(records[r].value)));
        // More plate captures more of the sweep.
        CHECK(records[r].sigma_estimate >=
              records[r - 1].sigma_estimate - 1e-9);
        // The value-vs-auxiliary gap shrinks as the truncation grows.
        const double gap_prev =
            records[r - 1].value - records[r - 1].aux_value;
        const double gap_here = records[r].value - records[r].aux_value;
        CHECK(gap_here <= gap_prev + 1e-8 * (1.0 + std::abs(gap_prev)));
    }

    // Determinism: a rerun reproduces every number bitwise.
    const auto again = exhaustion_sweep(ctx, 1, radii);
    REQUIRE(again.size() == records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        CHECK(again[r].value == records[r].value);
        CHECK(again[r].aux_value == records[r].aux_value);
        CHECK(again[r].sigma_estimate == records[r].sigma_estimate);
        CHECK(again[r].window_mass == records[r].window_mass);
        CHECK(again[r].verdict == records[r].verdict);
    }
}

TEST_CASE("sweep validation and per-radius error capture") {
    const Condenser cond = rotational_condenser(8.0, 150, 1.0);
    const EnergyContext ctx = build_context(testutil::newtonian(), cond);

    CHECK_THROWS_AS(exhaustion_sweep(ctx, 1, {}), ValidationError);
    CHECK_THROWS_AS(exhaustion_sweep(ctx, 1, {4.0, 4.0}), ValidationError);
    CHECK_THROWS_AS(exhaustion_sweep(ctx, 1, {8.0, 4.0}), ValidationError);
    // The positive sphere plate carries no unbounded flag.
    CHECK_THROWS_AS(exhaustion_sweep(ctx, 0, {4.0, 8.0}), ValidationError);

    // A radius cutting off every plate node fails that record and moves on.
    SolvabilityOptions opt;
    opt.window_radius = 8.0;
    const auto records = exhaustion_sweep(ctx, 1, {0.5, 8.0}, opt);
    REQUIRE(records.size() == 2);
    CHECK(!records[0].error.empty());
    CHECK(records[0].error.find("plate_fully_masked") != std::string::npos);
    CHECK(!records[0].solver_converged);
    CHECK(std::isnan(records[0].value));
    CHECK(std::isnan(records[0].sigma_estimate));
    CHECK(records[1].error.empty());
    CHECK(records[1].solver_converged);
    CHECK(std::isfinite(records[1].value));
}

TEST_CASE("cone scan classifies a grid of moments against one threshold") {
    Condenser cond = rotational_condenser(8.0, 200, 1.0);
    const EnergyContext ctx = build_context(testutil::newtonian(), cond);
    const SolvabilityReport base = sigma_threshold(ctx, 1);
    const double sigma = base.sigma_ell;
    REQUIRE(sigma > 0.0);

    const std::vector<double> grid = {0.1 * sigma, 0.5 * sigma, 0.99 * sigma,
                                      sigma, 1.01 * sigma, 2.0 * sigma};
    const ConeScanReport scan = solvable_cone_scan(ctx, 1, grid);
    CHECK(scan.sigma_ell == doctest::Approx(sigma).epsilon(1e-12));
    CHECK(scan.ratio == doctest::Approx(sigma / 1.0).epsilon(1e-12));
    CHECK(scan.ratio <= 1.0 + 1e-9);
    REQUIRE(scan.verdicts.size() == grid.size());
    CHECK(scan.verdicts[0] == "solvable");
    CHECK(scan.verdicts[1] == "solvable");
    CHECK(scan.verdicts[3] == "boundary");
    CHECK(scan.verdicts[5] == "nonsolvable");
    // Monotone: never solvable after a nonsolvable entry.
    bool seen_nonsolvable = false;
    for (const std::string& v : scan.verdicts) {
        if (v == "nonsolvable")
            seen_nonsolvable = true;
        if (seen_nonsolvable)
            CHECK(v != "solvable");
    }
}

TEST_CASE("the cone-scan ratio grows with the plate truncation") {
    // One node set; the truncations are nested masks on it, so the swept
    // mass comparison is not confounded by re-meshing.
    const Condenser cond = rotational_condenser(12.0, 300, 1.0);
    const EnergyContext ctx = build_context(testutil::newtonian(), cond);

    std::vector<std::vector<char>> mask(2);
    mask[1].resize(cond.plates[1].nodes.size());
    for (std::size_t j = 0; j < mask[1].size(); ++j)
        mask[1][j] = cond.plates[1].nodes[j][0] <= 6.0 ? 1 : 0;
    SolvabilityOptions masked;
    masked.node_mask = &mask;

    const double r_short = solvable_cone_scan(ctx, 1, {1.0}, masked).ratio;
    const double r_long = solvable_cone_scan(ctx, 1, {1.0}).ratio;
    CHECK(r_short > 0.0);
    CHECK(r_long > r_short);
    CHECK(r_long <= 1.0 + 1e-9);
}

TEST_CASE("cone scan preconditions") {
    // chi must vanish.
    Condenser with_chi = rotational_condenser(8.0, 120, 1.0);
    with_chi.chi.atoms = {{{-6.0, 0.0, 0.0}, 0.2}};
    const EnergyContext cctx = build_context(testutil::newtonian(), with_chi);
    CHECK_THROWS_AS(solvable_cone_scan(cctx, 1, {1.0}), ValidationError);

    // Exactly two plates.
    Condenser three = rotational_condenser(8.0, 120, 1.0);
    three.plates.push_back(testutil::point_plate({-8.0, 0.0, 0.0}, 1));
    three.a.push_back(1.0);
    three.g_values.push_back({1.0});
    const EnergyContext tctx = build_context(testutil::newtonian(), three);
    CHECK_THROWS_AS(solvable_cone_scan(tctx, 1, {1.0}), ValidationError);

    // ell must point at the negative plate.
    const Condenser ok = rotational_condenser(8.0, 120, 1.0);
    const EnergyContext octx = build_context(testutil::newtonian(), ok);
    CHECK_THROWS_AS(solvable_cone_scan(octx, 0, {1.0}), ValidationError);
}
