#include <catch2/catch.hpp>

#include "ergolab/ergosphere.hpp"

#include <random>

using namespace ergolab;

TEST_CASE("delta orientation", "[ergosphere]") {
    SECTION("cartesian minkowski gives +1") {
        auto g = minkowski(3);
        REQUIRE(delta(g, point3(1, 2, 3)) == Approx(1.0).margin(1e-14));
        auto g2 = minkowski(2);
        REQUIRE(delta(g2, point2(1, 2)) == Approx(1.0).margin(1e-14));
    }
    SECTION("kerr equatorial ergosphere root") {
        KerrParams kp{1.0, 0.5};
        StationaryMetric g = build_kerr(kp);
        // z = 0 root of r^4 + a^2 z^2 - 2 m r^3 = 0 is r = 2m; rho^2 = r^2 + a^2
        double rho = std::sqrt(4.0 + 0.25);
        REQUIRE(std::abs(delta(g, Vec2(rho, 0.0))) < 1e-9);
        REQUIRE(delta(g, Vec2(rho + 0.3, 0.0)) > 0);
        REQUIRE(delta(g, Vec2(rho - 0.3, 0.0)) < 0);
    }
    SECTION("acoustic sonic surface zeroes delta (cofactor identity)") {
        auto g = acoustic_radial_drain(1.0, 2.0);
        // Delta = g_00 * det(full inverse): both vanish together
        PointN p = point3(2.0, 0.0, 0.0);
        REQUIRE(std::abs(delta(g, p)) < 1e-12);
        PointN q = point3(2.7, 0.4, -0.1);
        double lhs = delta(g, q);
        double rhs = invert_metric(g.inv_at(q))(0, 0) * g.inv_at(q).determinant();
        REQUIRE(lhs == Approx(-rhs).margin(1e-10));  // (-1)^n factor with n = 3
    }
}

TEST_CASE("sign of g00 agrees with sign of delta near the traced ergosphere", "[ergosphere]") {
    KerrParams kp{1.0, 0.6};
    StationaryMetric g = build_kerr(kp);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uz(-0.8, 0.8), ur(-0.25, 0.25);
    int done = 0;
    while (done < 200) {
        double z = uz(rng);
        Vec2 on = kerr_ergosphere_point(kp, z, ErgoBranch::outer);
        Vec2 p = on + Vec2(ur(rng), ur(rng));
        if (p.x() < 0.3) continue;
        double d = delta(g, p);
        double h00 = g.cov_at(p)(0, 0);
        if (std::abs(d) < 1e-6 || std::abs(h00) < 1e-8) continue;
        REQUIRE((d > 0) == (h00 > 0));
        ++done;
    }
}

TEST_CASE("delta1 closed forms", "[ergosphere]") {
    KerrParams kp{1.0, 0.5};
    StationaryMetric g = build_kerr(kp);
    SECTION("vanishes on the horizon") {
        auto [rp, rm] = kerr_horizon_radii(kp);
        (void)rm;
        double rho = std::sqrt(2.0 * kp.m * rp);  // z = 0 point of the ellipse
        REQUIRE(std::abs(delta1(g, Vec2(rho, 0.0))) < 1e-10);
    }
    SECTION("equatorial closed form 1 - 2mr/(r^2+a^2)") {
        // z = 0, r = 3: rho^2 = r^2 + a^2
        double rho = std::sqrt(9.0 + 0.25);
        REQUIRE(delta1(g, Vec2(rho, 0.0)) == Approx(1.0 - 6.0 / 9.25).epsilon(1e-10));
    }
    SECTION("minkowski gives 1") {
        auto gm = minkowski(3, Coords::cylindrical);
        REQUIRE(delta1(gm, Vec2(1.3, -0.4)) == Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("horizon radii", "[ergosphere]") {
    auto [rp0, rm0] = kerr_horizon_radii({1.0, 0.0});
    REQUIRE(rp0 == Approx(2.0).margin(1e-14));
    REQUIRE(rm0 == Approx(0.0).margin(1e-14));
    auto [rp, rm] = kerr_horizon_radii({1.0, 0.5});
    REQUIRE(rp == Approx(1.8660254).margin(1e-7));
    REQUIRE(rm == Approx(0.1339746).margin(1e-7));
    auto [rpe, rme] = kerr_horizon_radii({2.0, 2.0 - 1e-12});
    REQUIRE(rpe == Approx(2.0).margin(1e-5));
    REQUIRE(rme == Approx(2.0).margin(1e-5));
    REQUIRE_THROWS_AS(kerr_horizon_radii({1.0, 1.5}), ExtremalError);
}

TEST_CASE("ergosphere radius solver", "[ergosphere]") {
    KerrParams kp{1.0, 0.5};
    auto [rp, rm] = kerr_horizon_radii(kp);
    SECTION("z=0 outer root is 2m") {
        REQUIRE(kerr_ergosphere_radius(kp, 0.0, ErgoBranch::outer) == Approx(2.0).margin(1e-12));
    }
    SECTION("a=0 outer root is 2m for all z") {
        KerrParams ks{1.0, 0.0};
        for (double z : {0.0, 0.5, 1.5, 1.9})
            REQUIRE(kerr_ergosphere_radius(ks, z, ErgoBranch::outer) ==
                    Approx(2.0).margin(1e-12));
    }
    SECTION("on-axis meeting point: outer ergosphere reaches r+ at |z| = r+") {
        double r = kerr_ergosphere_radius(kp, rp, ErgoBranch::outer);
        REQUIRE(r == Approx(rp).margin(1e-9));
        Vec2 p = kerr_ergosphere_point(kp, rp, ErgoBranch::outer);
        REQUIRE(p.x() == Approx(0.0).margin(1e-6));
    }
    SECTION("quartic residual stays below 1e-10") {
        for (double z = -rp; z <= rp; z += rp / 17) {
            double r = kerr_ergosphere_radius(kp, z, ErgoBranch::outer);
            double res = r * r * r * r + kp.a * kp.a * z * z - 2.0 * kp.m * r * r * r;
            REQUIRE(std::abs(res) < 1e-10 * std::pow(2.0 * kp.m, 4));
        }
        for (double z = -0.9 * rm; z <= 0.9 * rm; z += rm / 7) {
            double r = kerr_ergosphere_radius(kp, z, ErgoBranch::inner);
            double res = r * r * r * r + kp.a * kp.a * z * z - 2.0 * kp.m * r * r * r;
            REQUIRE(std::abs(res) < 1e-10 * std::pow(2.0 * kp.m, 4));
        }
    }
    SECTION("branch range errors") {
        REQUIRE_THROWS_AS(kerr_ergosphere_radius(kp, rp + 0.1, ErgoBranch::outer),
                          BranchRangeError);
        REQUIRE_THROWS_AS(kerr_ergosphere_radius(kp, rm + 0.1, ErgoBranch::inner),
                          BranchRangeError);
    }
}

TEST_CASE("level-set tracer on an analytic circle", "[ergosphere]") {
    auto f = [](const Vec2& p) { return p.squaredNorm() - 1.0; };
    Bbox w;
    w.expand(Vec2(-2, -2));
    w.expand(Vec2(2, 2));
    TraceResult tr = trace_level_set(f, w, 128);
    REQUIRE(tr.components.size() == 1);
    const auto& rep = tr.components.front();
    REQUIRE(rep.curve.closed);
    REQUIRE(rep.curve.is_ccw());
    REQUIRE(rep.curve.pts.size() >= 16);
    for (const auto& p : rep.curve.pts) REQUIRE(p.norm() == Approx(1.0).margin(1e-7));
    REQUIRE(rep.curve.even_in_rho(1e-6));
}

TEST_CASE("tracer errors without a sign change", "[ergosphere]") {
    auto f = [](const Vec2& p) { return p.squaredNorm() + 1.0; };
    Bbox w;
    w.expand(Vec2(-2, -2));
    w.expand(Vec2(2, 2));
    REQUIRE_THROWS_AS(trace_level_set(f, w, 64), TopologyError);
}

TEST_CASE("tracer reports open chains crossing the window", "[ergosphere]") {
    auto f = [](const Vec2& p) { return p.x(); };  // straight line through the window
    Bbox w;
    w.expand(Vec2(-1, -1));
    w.expand(Vec2(1, 1));
    REQUIRE_THROWS_AS(trace_level_set(f, w, 64), TopologyError);
}

TEST_CASE("traced kerr restricted ergosphere matches both horizon ellipses", "[ergosphere]") {
    KerrParams kp{1.0, 0.5};
    StationaryMetric g = build_kerr(kp);
    auto [rp, rm] = kerr_horizon_radii(kp);
    Bbox w;
    w.expand(Vec2(-3, -3));
    w.expand(Vec2(3, 3));
    TraceResult tr = trace_level_set([&](const Vec2& p) { return delta1(g, p); }, w, 512);
    REQUIRE(tr.components.size() == 2);
    PlaneCurve outer_ellipse = kerr_horizon_ellipse(kp, rp, 512);
    PlaneCurve inner_ellipse = kerr_horizon_ellipse(kp, rm, 512);
    double cell = 6.0 / 512;
    REQUIRE(hausdorff_distance(tr.components[0].curve, outer_ellipse) < cell);
    REQUIRE(hausdorff_distance(tr.components[1].curve, inner_ellipse) < cell);
}

TEST_CASE("traced kerr ergosphere matches the radius solver", "[ergosphere]") {
    KerrParams kp{1.0, 0.5};
    StationaryMetric g = build_kerr(kp);
    Bbox w;
    w.expand(Vec2(-3.2, -3.2));
    w.expand(Vec2(3.2, 3.2));
    TraceResult tr = trace_level_set([&](const Vec2& p) { return delta_reduced(g, p); }, w, 512);
    REQUIRE(!tr.components.empty());
    const PlaneCurve& outer = tr.components.front().curve;
    auto [rpp, rmm] = kerr_horizon_radii(kp);
    (void)rmm;
    for (double z = -0.95 * rpp; z <= 0.95 * rpp; z += rpp / 9) {
        Vec2 p = kerr_ergosphere_point(kp, z, ErgoBranch::outer);
        REQUIRE(outer.distance(p) < 6.4 / 512);
        REQUIRE(outer.distance(Vec2(-p.x(), p.y())) < 6.4 / 512);
    }
}

TEST_CASE("delta1 vanishes on the horizon ellipses", "[ergosphere][prop21]") {
    for (auto [m, a] : {std::pair{1.0, 0.3}, {1.0, 0.7}, {2.0, 1.0}}) {
        KerrParams kp{m, a};
        StationaryMetric g = build_kerr(kp);
        auto [rp, rm] = kerr_horizon_radii(kp);
        for (double rh : {rp, rm}) {
            PlaneCurve ell = kerr_horizon_ellipse(kp, rh, 400);
            double worst = 0;
            for (const auto& p : ell.pts) worst = std::max(worst, std::abs(delta1(g, p)));
            REQUIRE(worst < 1e-9);
        }
    }
}

TEST_CASE("delta1/(r - r+) bounded away from zero off the zero set", "[ergosphere]") {
    for (auto [m, a] : {std::pair{1.0, 0.3}, {1.0, 0.7}, {2.0, 1.0}}) {
        KerrParams kp{m, a};
        StationaryMetric g = build_kerr(kp);
        auto [rp, rm] = kerr_horizon_radii(kp);
        (void)rm;
        std::mt19937_64 rng(101);
        std::uniform_real_distribution<double> ur(0.9 * rp, 1.1 * rp), uc(-1.0, 1.0);
        double min_ratio = 1e300, max_ratio = 0;
        int done = 0;
        while (done < 400) {
            double r = ur(rng), cth = uc(rng);
            if (std::abs(r - rp) < 0.01 * rp) continue;  // off the zero set
            double z = r * cth;
            double rho2 = r * r + kp.a * kp.a - kp.a * kp.a * z * z / (r * r) - z * z;
            if (rho2 < 1e-6) continue;
            Vec2 p(std::sqrt(rho2), z);
            double ratio = std::abs(delta1(g, p) / (r - rp));
            min_ratio = std::min(min_ratio, ratio);
            max_ratio = std::max(max_ratio, ratio);
            ++done;
        }
        REQUIRE(min_ratio > 0.05 / m);  // the factorization constant stays away from 0
        REQUIRE(max_ratio < 100.0);
    }
}

TEST_CASE("containment: circles and kerr curves", "[ergosphere]") {
    SECTION("unit circle inside radius-2 circle") {
        auto rep =
            containment_check(make_circle(Vec2(0, 0), 1.0), make_circle(Vec2(0, 0), 2.0, 512));
        REQUIRE(rep.verdict == ContainmentVerdict::inside);
    }
    SECTION("violations are reported with points") {
        auto rep =
            containment_check(make_circle(Vec2(1.5, 0), 1.0), make_circle(Vec2(0, 0), 2.0, 512));
        REQUIRE(rep.verdict == ContainmentVerdict::violated);
        REQUIRE(!rep.violated_points.empty());
    }
    SECTION("kerr outer horizon inside the outer ergosphere, touching on the axis") {
        KerrParams kp{1.0, 0.5};
        auto [rp, rm] = kerr_horizon_radii(kp);
        (void)rm;
        PlaneCurve horizon = kerr_horizon_ellipse(kp, rp, 720);
        // analytic outer ergosphere samples (both mirror halves)
        PlaneCurve ergo;
        int N = 720;
        for (int i = 0; i < N; ++i) {
            double z = rp * std::cos(M_PI * i / (N - 1));
            ergo.pts.push_back(kerr_ergosphere_point(kp, z, ErgoBranch::outer));
        }
        for (int i = N - 2; i >= 1; --i)
            ergo.pts.push_back(Vec2(-ergo.pts[i].x(), ergo.pts[i].y()));
        ergo.closed = true;
        ergo.ensure_ccw();
        auto rep = containment_check(horizon, ergo, 1e-3 * rp);
        REQUIRE(rep.verdict == ContainmentVerdict::touching);
        // tangency is quadratic, so band-width touching clusters near the axis
        for (const auto& t : rep.touching_points) REQUIRE(std::abs(t.x()) < 0.35);
        // the touching points sit at the axis crossings z = +- r+
        bool top = false, bottom = false;
        for (const auto& t : rep.touching_points) {
            if (std::abs(t.y() - rp) < 0.05) top = true;
            if (std::abs(t.y() + rp) < 0.05) bottom = true;
        }
        REQUIRE(top);
        REQUIRE(bottom);
    }
    SECTION("kerr inner ergosphere inside the inner horizon (reversed orientation)") {
        KerrParams kp{1.0, 0.5};
        auto [rp, rm] = kerr_horizon_radii(kp);
        (void)rp;
        PlaneCurve inner_horizon = kerr_horizon_ellipse(kp, rm, 720);
        PlaneCurve inner_ergo;
        int N = 360;
        for (int i = 0; i < N; ++i) {
            double z = 0.999 * rm * std::cos(M_PI * i / (N - 1));
            inner_ergo.pts.push_back(kerr_ergosphere_point(kp, z, ErgoBranch::inner));
        }
        for (int i = N - 2; i >= 1; --i)
            inner_ergo.pts.push_back(Vec2(-inner_ergo.pts[i].x(), inner_ergo.pts[i].y()));
        inner_ergo.closed = true;
        inner_ergo.ensure_ccw();
        auto rep = containment_check(inner_ergo, inner_horizon, 5e-3 * rm);
        REQUIRE(rep.verdict != ContainmentVerdict::violated);
    }
}

TEST_CASE("tracer residuals stay below the polish tolerance", "[ergosphere]") {
    auto f = [](const Vec2& p) { return p.squaredNorm() - 1.0; };
    Bbox w;
    w.expand(Vec2(-2, -2));
    w.expand(Vec2(2, 2));
    TraceResult tr = trace_level_set(f, w, 128);
    REQUIRE(tr.components.front().residual_max < 1e-7);
}
