#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "mel/melnikov_engine.hpp"
#include "mel/orbit_lab.hpp"

using namespace mel;

namespace {

HermiteSeries H(unsigned n) { return HermiteSeries::basis(n); }

double dist(const Point& a, const Point& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

EventSpec plane(int component, double value, int direction = 0) {
    EventSpec e;
    e.component = component;
    e.value = value;
    e.direction = direction;
    e.label = "stop";
    return e;
}

}  // namespace

TEST_CASE("quadrature_check") {
    QuadratureReport r = quadrature_check(series_product(H(2), H(2)), radical_scale(RadicalValue::sqrt_2pi(), 8), 1e-10);
    CHECK(r.pass);
    CHECK(r.rel_error < 1e-25);

    PerturbedSystem fn = build_folded_node(2);
    QuadratureReport q = quadrature_check(integrand(fn, Derivative::dv3), d3_dv3(fn), 1e-10);
    CHECK(q.pass);
    CHECK(std::stod(q.numeric) == doctest::Approx(360.9544715).epsilon(1e-9));

    CHECK_THROWS_AS(quadrature_check(series_product(H(1), H(2)), RadicalValue(0), 1e-10), PreconditionViolation);
    CHECK_FALSE(quadrature_check(H(0), radical_scale(RadicalValue::sqrt_2pi(), Rational(1001, 1000)), 1e-10).pass);
}

TEST_CASE("chart ids") {
    CHECK(ChartId::parse("x-") == ChartId{0, -1});
    CHECK(ChartId::parse("affine").affine());
    CHECK(ChartId{2, 1}.str() == "z+");
    CHECK_FALSE(ChartId::parse("y+") == ChartId::parse("y-"));
}

TEST_CASE("chart transitions round trip") {
    for (Model m : {Model::falkner_skan, Model::nose, Model::folded_node_scaled}) {
        ChartAtlas atlas(m, 1.7);
        const Point samples[] = {{12.5, -0.3, 4.0}, {-15.0, 2.0, -11.0}, {3.0, 14.0, -2.0}, {0.5, -1.0, -30.0}};
        for (const Point& p : samples)
            for (const Chart& c : atlas.charts()) {
                Point u;
                try {
                    u = atlas.from_affine(c.id, p);
                } catch (const OutsideValidity&) {
                    continue;
                }
                auto back = atlas.to_affine(c.id, u);
                REQUIRE(back.has_value());
                CHECK(dist(*back, p) <= 1e-12 * (1 + dist(p, {0, 0, 0})));
                for (const Chart& d : atlas.charts()) {
                    if (d.id.affine() || c.id.affine()) continue;
                    Point v;
                    try {
                        v = atlas.transition(c.id, d.id, u);
                    } catch (const OutsideValidity&) {
                        continue;
                    }
                    Point w = atlas.transition(d.id, c.id, v);
                    CHECK(dist(w, u) <= 1e-12 * (1 + dist(u, {0, 0, 0})));
                }
            }
    }
}

TEST_CASE("Falkner-Skan x- chart field") {
    // blown-down field of the chart reproduces the affine field times the desingularising power
    ChartAtlas atlas(Model::falkner_skan, 2.3);
    const Chart& c = atlas.chart(ChartId{0, -1});
    Point u{0.05, 0.4, 0.3};  // W, y, Q_z
    Point du = atlas.field(c.id, u);
    Point p = *atlas.to_affine(c.id, u);
    Point f = atlas.field(ChartId{}, p);
    double w = u[0], factor = std::pow(w, c.desingularization);
    // x = -1/W, y = y, z = Q/W
    CHECK(du[0] == doctest::Approx(w * w * f[0] * factor * -1.0 * -1.0).epsilon(1e-12));
    CHECK(du[1] == doctest::Approx(f[1] * factor).epsilon(1e-12));
    CHECK(du[2] == doctest::Approx((w * f[2] + u[2] * du[0] / (w * factor)) * factor).epsilon(1e-12));
}

TEST_CASE("integrate stops on a plane") {
    ChartAtlas atlas(Model::falkner_skan, 2.3);
    OrbitTrace t = integrate(atlas, {ChartId{}, {0, 0, 0.1}}, {plane(1, 0.5)});
    REQUIRE(t.stopped_by_event);
    CHECK(std::abs(t.samples.back().p[1] - 0.5) < 1e-10);
    REQUIRE(!t.events.empty());
    CHECK(t.events.back().kind == "plane-crossing");
    CHECK(std::abs(t.events.back().residual) < 1e-10);
    CHECK(t.to_csv().rfind("s,chart,x,y,z\n", 0) == 0);
}

TEST_CASE("near gamma in the x- chart") {
    ChartAtlas atlas(Model::falkner_skan, 2.3);
    ChartState seed = seed_on_center_manifold(atlas, -20, 0);
    REQUIRE(seed.chart == ChartId{0, -1});
    IntegrationOptions o;
    o.max_arc = 200;
    OrbitTrace t = integrate(atlas, seed, {plane(1, 0.9, 1)}, o);
    double last_y = -2;
    size_t in_chart = 0;
    for (const TraceSample& s : t.samples) {
        if (!(s.chart == ChartId{0, -1})) continue;
        ++in_chart;
        CHECK(s.u[0] > 0);
        if (s.u[1] > -1 && s.u[1] < 1) {
            CHECK(s.u[1] > last_y);
            last_y = s.u[1];
        }
    }
    CHECK(in_chart > 10);
}

TEST_CASE("chart switches preserve the point") {
    ChartAtlas atlas(Model::falkner_skan, 1.1);
    OrbitTrace t = integrate(atlas, {ChartId{}, {9.0, 1.0, 0.0}}, {plane(0, 20.0, 1)});
    REQUIRE(t.stopped_by_event);
    size_t switches = 0;
    for (const TraceEvent& e : t.events)
        if (e.kind == "chart-switch") {
            ++switches;
            CHECK(e.residual < 1e-12);
            CHECK(e.chart == ChartId{0, 1});
        }
    CHECK(switches == 1);
    CHECK(t.samples.back().chart == ChartId{0, 1});
    CHECK(std::abs(t.samples.back().p[0] - 20.0) < 1e-9);
}

TEST_CASE("centre manifold seeds") {
    ChartAtlas fs(Model::falkner_skan, 2.3);
    Point p = *fs.to_affine(seed_on_center_manifold(fs, -20, 0).chart, seed_on_center_manifold(fs, -20, 0).u);
    CHECK(p[2] == doctest::Approx(2.3 / 20).epsilon(1e-12));
    CHECK_THROWS_AS(seed_on_center_manifold(fs, -2, 0), OutsideValidity);

    ChartAtlas fn(Model::folded_node_scaled, 2.3);
    ChartState s = seed_on_center_manifold(fn, 0, 50);
    Point q = *fn.to_affine(s.chart, s.u);
    CHECK(q[0] == doctest::Approx(-2500 + 3.3 / 2).epsilon(1e-12));

    for (double y : {-0.5, 0.0, 0.7}) {
        ChartState a = seed_on_center_manifold(fs, -30, y), b = seed_on_center_manifold(fs, 30, y);
        Point pa = *fs.to_affine(a.chart, a.u), pb = *fs.to_affine(b.chart, b.u);
        CHECK(dist(fs.sigma(pa), pb) < 1e-12);
        ChartState c = seed_on_center_manifold(fn, y, 40), d = seed_on_center_manifold(fn, -y, -40);
        Point pc = *fn.to_affine(c.chart, c.u), pd = *fn.to_affine(d.chart, d.u);
        CHECK(dist(fn.sigma(pc), pd) < 1e-9);
    }
    CHECK_THROWS_AS(seed_on_center_manifold(ChartAtlas(Model::nose, 1.9), 20, 0), PreconditionViolation);
}

TEST_CASE("forward then backward returns to the start") {
    // x is monotone on this arc since y stays positive
    ChartAtlas atlas(Model::falkner_skan, 1.1);
    ChartState start{ChartId{}, {0.3, 0.6, 0.2}};
    OrbitTrace fwd = integrate(atlas, start, {plane(0, 1.0, 1)});
    REQUIRE(fwd.stopped_by_event);
    for (const TraceSample& s : fwd.samples) REQUIRE(s.p[1] > 0);
    const TraceSample& end = fwd.samples.back();
    IntegrationOptions back;
    back.direction = -1;
    OrbitTrace bwd = integrate(atlas, {end.chart, end.u}, {plane(0, 0.3, 0)}, back);
    REQUIRE(bwd.stopped_by_event);
    CHECK(dist(bwd.samples.back().p, start.u) < 1e-8);
}

TEST_CASE("twist window must be entered") {
    ChartAtlas atlas(Model::falkner_skan, 1.1);
    OrbitTrace t;
    for (double y : {0.0, 0.25, 0.5}) {
        TraceSample s;
        s.u = s.p = {1.0, y, 0.1};
        t.samples.push_back(s);
    }
    CHECK_THROWS_AS(twist_count(t, atlas, 0.5), WindowEmpty);
}

TEST_CASE("Falkner-Skan orbit at mu = 1.1") {
    auto bracket = scan_shooting_bracket(Model::falkner_skan, 1.1);
    REQUIRE(bracket.has_value());
    PeriodicOrbitResult r = find_symmetric_periodic_orbit(Model::falkner_skan, 1.1, *bracket);
    REQUIRE(r.twist.has_value());
    CHECK(std::abs(r.twist->raw - 0.5) < 0.05);
    CHECK(r.twist->half_integer == 0.5);
    CHECK(r.closure_residual < 1e-6);
    CHECK(r.symmetry_residual < 1e-6);
    REQUIRE(r.residual_history.size() >= 5);
    for (size_t i = r.residual_history.size() - 4; i < r.residual_history.size(); ++i)
        CHECK(r.residual_history[i] <= r.residual_history[i - 1]);

    ChartAtlas atlas(Model::falkner_skan, 1.1);
    CHECK(hausdorff_distance(atlas, r.trace, r.trace) == 0);

    PeriodicOrbitResult back = periodic_result_from_json(periodic_result_to_json(r));
    CHECK(periodic_result_to_json(back) == periodic_result_to_json(r));
    CHECK(back.shooting_parameter == r.shooting_parameter);
}

TEST_CASE("shooting needs a straddling bracket") {
    CHECK_THROWS_AS(find_symmetric_periodic_orbit(Model::falkner_skan, 1.1, {-0.2, -0.1}), NoRoot);
}
