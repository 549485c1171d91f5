#include <catch2/catch.hpp>

#include "ergolab/families.hpp"
#include "ergolab/metric.hpp"

#include <random>

using namespace ergolab;

namespace {

/// Schwarzschild line element in Cartesian coordinates,
/// ds^2 = (1-2m/R)dt^2 - dx^2 - dy^2 - dz^2 - (4m/R)dt dR - (2m/R)dR^2,
/// assembled directly as the covariant matrix (test oracle).
MetricMatrix schwarzschild_covariant(double m, double x, double y, double z) {
    double R = std::sqrt(x * x + y * y + z * z);
    Eigen::Vector4d dR(0, x / R, y / R, z / R);
    MetricMatrix g = MetricMatrix::Zero(4, 4);
    g(0, 0) = 1.0 - 2.0 * m / R;
    for (int j = 1; j < 4; ++j) g(j, j) = -1;
    Eigen::Vector4d dt(1, 0, 0, 0);
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
            g(j, k) += -(2.0 * m / R) * (dt[j] * dR[k] + dR[j] * dt[k]) -
                       (2.0 * m / R) * dR[j] * dR[k];
    return g;
}

}  // namespace

TEST_CASE("kerr_radius closed forms", "[metric]") {
    REQUIRE(kerr_radius(3, 0, 0, 0.0) == Approx(3.0).margin(1e-14));
    // z = 0: quartic reduces to r^2 = R^2 - a^2
    REQUIRE(kerr_radius(2, 0, 0, 1.0) == Approx(std::sqrt(3.0)).margin(1e-13));
    // on axis the quartic factors as (r^2 - z^2)(r^2 + a^2) = 0
    REQUIRE(kerr_radius(0, 0, 1.5, 0.5) == Approx(1.5).margin(1e-13));
}

TEST_CASE("kerr_radius satisfies its quartic", "[metric]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int i = 0; i < 500; ++i) {
        double x = u(rng), y = u(rng), z = u(rng), a = 0.5 * std::abs(u(rng));
        double R2 = x * x + y * y + z * z;
        double r = kerr_radius(x, y, z, a);
        double res = r * r * r * r - (R2 - a * a) * r * r - a * a * z * z;
        REQUIRE(std::abs(res) <= 1e-10 * std::max(1.0, R2 * R2));
    }
}

TEST_CASE("kerr_radius degenerate ring", "[metric]") {
    bool degenerate = false;
    double r = kerr_radius(1.0, 0.0, 0.0, 1.0, &degenerate);
    REQUIRE(r == Approx(0.0).margin(1e-12));
    REQUIRE(degenerate);
}

TEST_CASE("kerr cylindrical components", "[metric]") {
    SECTION("a=0 diagonal entry at (3,0)") {
        StationaryMetric g = build_kerr({1.0, 0.0});
        MetricMatrix M = g.inv_at(Vec2(3.0, 0.0));
        REQUIRE(M(1, 1) == Approx(-1.0 + 2.0 / 3.0).margin(1e-13));
        REQUIRE(M(0, 0) == Approx(1.0 + 2.0 / 3.0).margin(1e-13));
    }
    SECTION("g12 closed form at (2,1), m=1, a=0.5") {
        KerrParams kp{1.0, 0.5};
        StationaryMetric g = build_kerr(kp);
        double rho = 2, z = 1;
        double r = kerr_radius_rz(rho, z, kp.a);
        double expected = 2.0 * kp.m * r * r * r * z * rho /
                          ((r * r * r * r + kp.a * kp.a * z * z) * (r * r + kp.a * kp.a));
        MetricMatrix M = g.inv_at(Vec2(rho, z));
        REQUIRE(M(1, 2) == Approx(expected).margin(1e-13));
        REQUIRE(M(1, 2) == M(2, 1));
    }
    SECTION("symmetry at random points") {
        StationaryMetric g = build_kerr({1.0, 0.7});
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.5, 5);
        for (int i = 0; i < 50; ++i) {
            MetricMatrix M = g.inv_at(Vec2(u(rng), u(rng) - 2.5));
            REQUIRE((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("kerr cartesian inverse matches covariant tensor", "[metric]") {
    KerrParams kp{1.0, 0.5};
    StationaryMetric g = build_kerr_cartesian(kp);
    PointN p = point3(3.0, 0.0, 1.0);
    MetricMatrix cov = kerr_covariant_cartesian(kp, 3.0, 0.0, 1.0);
    MetricMatrix inv_from_cov = invert_metric(cov);
    REQUIRE((g.inv_at(p) - inv_from_cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kerr cylindrical matches cartesian on the y=0 plane", "[metric]") {
    KerrParams kp{1.0, 0.5};
    StationaryMetric gc = build_kerr_cartesian(kp);
    StationaryMetric gz = build_kerr(kp);
    for (auto [rho, z] : {std::pair{3.0, 1.0}, {2.0, -1.5}, {1.2, 0.3}}) {
        MetricMatrix Mc = gc.inv_at(point3(rho, 0.0, z));
        MetricMatrix Mz = gz.inv_at(Vec2(rho, z));
        // at y = 0: rho block maps to x, phi components pick up 1/rho factors
        REQUIRE(Mz(0, 0) == Approx(Mc(0, 0)).margin(1e-12));
        REQUIRE(Mz(1, 1) == Approx(Mc(1, 1)).margin(1e-12));
        REQUIRE(Mz(2, 2) == Approx(Mc(3, 3)).margin(1e-12));
        REQUIRE(Mz(1, 2) == Approx(Mc(1, 3)).margin(1e-12));
        REQUIRE(Mz(0, 1) == Approx(Mc(0, 1)).margin(1e-12));
        REQUIRE(Mz(0, 2) == Approx(Mc(0, 3)).margin(1e-12));
        REQUIRE(Mz(3, 3) == Approx(Mc(2, 2) / (rho * rho)).margin(1e-12));
        REQUIRE(Mz(0, 3) == Approx(Mc(0, 2) / rho).margin(1e-12));
    }
}

TEST_CASE("schwarzschild limit matches the ingoing line element", "[metric]") {
    StationaryMetric g = build_kerr_cartesian({1.0, 0.0});
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-5, 5);
    int checked = 0;
    while (checked < 100) {
        double x = u(rng), y = u(rng), z = u(rng);
        if (std::sqrt(x * x + y * y + z * z) < 0.1) continue;
        MetricMatrix cov = invert_metric(g.inv_at(point3(x, y, z)));
        MetricMatrix oracle = schwarzschild_covariant(1.0, x, y, z);
        REQUIRE((cov - oracle).cwiseAbs().maxCoeff() < 1e-10);
        ++checked;
    }
}

TEST_CASE("gordon metric", "[metric]") {
    SECTION("static n=2 medium") {
        auto g = build_gordon([](const PointN&) { return 2.0; },
                              [](const PointN&) { return Eigen::Vector3d::Zero(); });
        MetricMatrix cov = g.cov_at(point3(0.3, 0.2, 0.1));
        REQUIRE(cov(0, 0) == Approx(0.25).margin(1e-12));
        for (int j = 1; j < 4; ++j) REQUIRE(cov(j, j) == Approx(-1.0).margin(1e-12));
    }
    SECTION("n=1 gives Minkowski exactly for any subluminal flow") {
        auto g = build_gordon([](const PointN&) { return 1.0; },
                              [](const PointN&) { return Eigen::Vector3d(0.3, -0.2, 0.5); });
        MetricMatrix M = g.inv_at(point3(1, 2, 3));
        MetricMatrix eta = MetricMatrix::Zero(4, 4);
        eta(0, 0) = 1;
        for (int j = 1; j < 4; ++j) eta(j, j) = -1;
        REQUIRE((M - eta).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("moving medium off-diagonal and hyperbolicity") {
        auto g = build_gordon([](const PointN&) { return 2.0; },
                              [](const PointN&) { return Eigen::Vector3d(0.5, 0, 0); });
        MetricMatrix cov = g.cov_at(point3(0, 0, 0));
        double v0 = 1.0 / std::sqrt(1.0 - 0.25);
        double v1 = -v0 * 0.5;
        REQUIRE(cov(0, 1) == Approx((0.25 - 1.0) * v0 * v1).margin(1e-12));
        REQUIRE(cov.determinant() < 0.0);

        auto bad = build_gordon([](const PointN&) { return 2.0; },
                                [](const PointN&) { return Eigen::Vector3d(1.2, 0, 0); });
        REQUIRE_THROWS_AS(bad.inv_at(point3(0, 0, 0)), HyperbolicityError);
    }
}

TEST_CASE("acoustic metric", "[metric]") {
    SECTION("fluid at rest is Minkowski") {
        auto g = build_acoustic([](const PointN&) { return 1.0; },
                                [](const PointN&) { return 1.0; },
                                [](const PointN& p) { return PointN(PointN::Zero(p.size())); });
        MetricMatrix cov = g.cov_at(point3(1, 0, 0));
        REQUIRE(cov(0, 0) == Approx(1.0).margin(1e-12));
        REQUIRE(cov(1, 1) == Approx(-1.0).margin(1e-12));
    }
    SECTION("sonic flow zeroes g_00") {
        auto g = build_acoustic([](const PointN&) { return 1.0; },
                                [](const PointN&) { return 1.0; },
                                [](const PointN& p) {
                                    PointN v = PointN::Zero(p.size());
                                    v[0] = 1.0;
                                    return v;
                                });
        REQUIRE(g.cov_at(point3(1, 1, 1))(0, 0) == Approx(0.0).margin(1e-14));
    }
    SECTION("radial drain has its ergosphere at r0") {
        auto g = acoustic_radial_drain(1.0, 2.0);
        MetricMatrix cov = g.cov_at(point3(2.0, 0.0, 0.0));
        REQUIRE(cov(0, 0) == Approx(0.0).margin(1e-12));
        REQUIRE(g.cov_at(point3(3.0, 0.0, 0.0))(0, 0) > 0);
        REQUIRE(g.cov_at(point3(1.5, 0.0, 0.0))(0, 0) < 0);
    }
}

TEST_CASE("flow-form metrics", "[metric]") {
    SECTION("zero flow gives Minkowski") {
        FlowForm f;
        f.dim = 2;
        f.v = [](const PointN& p) { return PointN(PointN::Zero(p.size())); };
        auto g = build_flow_metric(f);
        MetricMatrix M = g.inv_at(Vec2(0.4, -0.2));
        REQUIRE(M(0, 0) == 1.0);
        REQUIRE(M(1, 1) == -1.0);
        REQUIRE(M(0, 1) == 0.0);
    }
    SECTION("unit flow degenerates the spatial block") {
        FlowForm f;
        f.dim = 2;
        f.v = [](const PointN&) { return point2(0.6, 0.8); };
        auto g = build_flow_metric(f);
        Eigen::Matrix2d B = g.block2(Vec2(0, 0));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(B);
        REQUIRE(es.eigenvalues()[0] == Approx(-1.0).margin(1e-14));
        REQUIRE(es.eigenvalues()[1] == Approx(0.0).margin(1e-14));
        // Delta1-type form 1 - |v|^2 vanishes
        REQUIRE(B.determinant() == Approx(0.0).margin(1e-14));
    }
    SECTION("kerr flow form reproduces build_kerr") {
        KerrParams kp{1.0, 0.5};
        auto gf = build_flow_metric(kerr_flow_form(kp));
        auto gk = build_kerr(kp);
        for (auto [rho, z] : {std::pair{2.0, 1.0}, {3.0, -0.5}, {1.9, 0.0}}) {
            REQUIRE((gf.inv_at(Vec2(rho, z)) - gk.inv_at(Vec2(rho, z))).cwiseAbs().maxCoeff() <
                    1e-12);
        }
    }
}

TEST_CASE("invert_metric", "[metric]") {
    SECTION("identity and eta fixed points") {
        MetricMatrix I = MetricMatrix::Identity(4, 4);
        REQUIRE((invert_metric(I) - I).cwiseAbs().maxCoeff() < 1e-14);
        MetricMatrix eta = MetricMatrix::Zero(4, 4);
        eta(0, 0) = 1;
        for (int j = 1; j < 4; ++j) eta(j, j) = -1;
        REQUIRE((invert_metric(eta) - eta).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("kerr covariant vs built inverse at (3,1)") {
        KerrParams kp{1.0, 0.5};
        MetricMatrix cov = kerr_covariant_cartesian(kp, 3.0, 0.0, 1.0);
        StationaryMetric g = build_kerr_cartesian(kp);
        REQUIRE((invert_metric(g.inv_at(point3(3, 0, 1))) - cov).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("double inversion is the identity map on random Lorentzian matrices") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::Matrix4d L;
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) L(j, k) = u(rng) + (j == k ? 2.0 : 0.0);
            Eigen::Matrix4d eta = Eigen::Vector4d(1, -1, -1, -1).asDiagonal();
            MetricMatrix M = L.transpose() * eta * L;
            MetricMatrix twice = invert_metric(invert_metric(M));
            REQUIRE((twice - M).cwiseAbs().maxCoeff() <
                    1e-9 * std::max(1.0, M.cwiseAbs().maxCoeff()));
        }
    }
    SECTION("near-singular matrices are rejected with the determinant value") {
        MetricMatrix M = MetricMatrix::Zero(3, 3);
        M(0, 0) = 1;
        M(1, 1) = 1e-16;
        M(2, 2) = 1;
        REQUIRE_THROWS_AS(invert_metric(M), SingularMetricError);
    }
}

TEST_CASE("signature classification", "[metric]") {
    SECTION("minkowski is lorentzian") {
        auto g = minkowski(3);
        REQUIRE(g.signature_at(point3(1, 2, 3)) == SignatureClass::lorentzian);
    }
    SECTION("kerr is lorentzian on the ergosphere") {
        KerrParams kp{1.0, 0.5};
        StationaryMetric g = build_kerr(kp);
        // equatorial ergosphere point: r = 2m, rho^2 = r^2 + a^2
        double rho = std::sqrt(4.0 + 0.25);
        REQUIRE(g.signature_at(Vec2(rho, 0.0)) == SignatureClass::lorentzian);
    }
    SECTION("the 2x2 block at the horizon is degenerate") {
        KerrParams kp{1.0, 0.5};
        StationaryMetric g = build_kerr(kp);
        double rp = 1.0 + std::sqrt(1.0 - 0.25);
        double rho = std::sqrt(2.0 * rp);  // z = 0 point of the horizon ellipse
        Eigen::Matrix2d B = g.block2(Vec2(rho, 0.0));
        MetricMatrix M = MetricMatrix::Zero(2, 2);
        M(0, 0) = B(0, 0);
        M(0, 1) = B(0, 1);
        M(1, 0) = B(1, 0);
        M(1, 1) = B(1, 1);
        REQUIRE(signature_of(M, 1e-8) == SignatureClass::degenerate);
    }
}

TEST_CASE("time reversal flips the shift", "[metric]") {
    KerrParams kp{1.0, 0.5};
    StationaryMetric g = build_kerr(kp);
    StationaryMetric gr = time_reversed(g);
    MetricMatrix M = g.inv_at(Vec2(2.5, 0.5));
    MetricMatrix Mr = gr.inv_at(Vec2(2.5, 0.5));
    REQUIRE(Mr(0, 0) == M(0, 0));
    REQUIRE(Mr(0, 1) == -M(0, 1));
    REQUIRE(Mr(1, 2) == M(1, 2));
}

TEST_CASE("kerr evaluation at the singular locus throws", "[metric]") {
    StationaryMetric g = build_kerr({1.0, 0.0});
    REQUIRE_THROWS_AS(g.inv_at(Vec2(0.0, 0.0)), KerrSingularityError);
    StationaryMetric ga = build_kerr({1.0, 0.5});
    REQUIRE_THROWS_AS(ga.inv_at(Vec2(0.5, 0.0)), KerrSingularityError);  // the ring
}
