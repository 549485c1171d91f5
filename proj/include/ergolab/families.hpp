#pragma once

#include <cmath>
#include <functional>
#include <optional>

#include "ergolab/metric.hpp"

namespace ergolab {

struct KerrSingularityError : MetricError {
    using MetricError::MetricError;
};
struct ExtremalError : MetricError {
    using MetricError::MetricError;
};

// ---------------------------------------------------------------------------
// Kerr family in Kerr-Schild form.
// ---------------------------------------------------------------------------
struct KerrParams {
    double m = 1.0;  // mass
    double a = 0.0;  // spin, 0 <= a < m (subextremal)

    void validate() const {
        if (!(m > 0)) throw MetricError("KerrParams: m must be positive");
        if (!(a >= 0) || !(a < m)) throw MetricError("KerrParams: need 0 <= a < m");
    }
};

/// Oblate radial coordinate r(x): the positive root of
///   r^4 - (R^2 - a^2) r^2 - a^2 z^2 = 0,   R^2 = x^2 + y^2 + z^2,
/// equivalently r^2 = ((R^2-a^2) + sqrt((R^2-a^2)^2 + 4 a^2 z^2)) / 2.
/// The ring z = 0, R = a is degenerate (r = 0); it is reported through the
/// optional flag rather than thrown, since r = 0 is a legitimate limit value.
inline double kerr_radius(double x, double y, double z, double a, bool* degenerate = nullptr) {
    double R2 = x * x + y * y + z * z;
    double q = R2 - a * a;
    double r2 = 0.5 * (q + std::sqrt(q * q + 4.0 * a * a * z * z));
    double r = std::sqrt(std::max(r2, 0.0));
    if (degenerate) *degenerate = (r < 1e-12 * std::max(1.0, std::sqrt(R2) + a));
    return r;
}

inline double kerr_radius_rz(double rho, double z, double a, bool* degenerate = nullptr) {
    return kerr_radius(rho, 0.0, z, a, degenerate);
}

namespace detail {
struct KerrTermsRZ {
    double r;
    double F;                     // 2 m r^3 / (r^4 + a^2 z^2)
    double m0, m1, m2, m3;        // null vector in (t, rho, z, phi) components
};

inline KerrTermsRZ kerr_terms_rz(double rho, double z, const KerrParams& kp) {
    double r = kerr_radius_rz(rho, z, kp.a);
    double denom = r * r * r * r + kp.a * kp.a * z * z;
    if (denom < 1e-280 || r < 1e-140)
        throw KerrSingularityError("Kerr metric evaluated at the ring singularity r = 0");
    double F = 2.0 * kp.m * r * r * r / denom;
    double ra = r * r + kp.a * kp.a;
    return {r, F, -1.0, r * rho / ra, z / r, -kp.a / ra};
}
}  // namespace detail

/// Kerr inverse metric in cylindrical coordinates (t, rho, z, phi):
///   g^{jk} = xi^{jk} + F m^j m^k,
///   m = (-1, r rho/(r^2+a^2), z/r, -a/(r^2+a^2)),  F = 2 m r^3/(r^4+a^2 z^2),
/// with xi = diag(1, -1, -1, -1/rho^2). a = 0 reduces to Schwarzschild in
/// ingoing Kerr-Schild form. The components are analytic in rho, so
/// evaluation at rho <= 0 is the even/odd extension automatically.
inline StationaryMetric build_kerr(const KerrParams& kp) {
    kp.validate();
    return StationaryMetric(
        3, Coords::cylindrical,
        "kerr(m=" + std::to_string(kp.m) + ",a=" + std::to_string(kp.a) + ")",
        [kp](const PointN& p) {
            double rho = p[0], z = p[1];
            auto t = detail::kerr_terms_rz(rho, z, kp);
            MetricMatrix M = MetricMatrix::Zero(4, 4);
            M(0, 0) = 1;
            M(1, 1) = -1;
            M(2, 2) = -1;
            M(3, 3) = -1.0 / (rho * rho);
            double mv[4] = {t.m0, t.m1, t.m2, t.m3};
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) M(j, k) += t.F * mv[j] * mv[k];
            return M;
        });
}

/// Kerr inverse metric in Cartesian coordinates (t, x, y, z):
///   g^{jk} = eta^{jk} + F l^j l^k,
///   l = (-1, (rx+ay)/(r^2+a^2), (ry-ax)/(r^2+a^2), z/r).
inline StationaryMetric build_kerr_cartesian(const KerrParams& kp) {
    kp.validate();
    return StationaryMetric(
        3, Coords::cartesian,
        "kerr_cartesian(m=" + std::to_string(kp.m) + ",a=" + std::to_string(kp.a) + ")",
        [kp](const PointN& p) {
            double x = p[0], y = p[1], z = p[2];
            double r = kerr_radius(x, y, z, kp.a);
            double denom = r * r * r * r + kp.a * kp.a * z * z;
            if (denom < 1e-280 || r < 1e-140)
                throw KerrSingularityError("Kerr metric evaluated at the ring singularity r = 0");
            double F = 2.0 * kp.m * r * r * r / denom;
            double ra = r * r + kp.a * kp.a;
            double l[4] = {-1.0, (r * x + kp.a * y) / ra, (r * y - kp.a * x) / ra, z / r};
            MetricMatrix M = MetricMatrix::Zero(4, 4);
            M(0, 0) = 1;
            for (int j = 1; j < 4; ++j) M(j, j) = -1;
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) M(j, k) += F * l[j] * l[k];
            return M;
        });
}

/// Covariant Kerr tensor in Cartesian coordinates,
///   g_{jk} = eta_{jk} - F lcov_j lcov_k,  lcov = (1, l^1, l^2, l^3);
/// used as the cross-check counterpart of build_kerr_cartesian.
inline MetricMatrix kerr_covariant_cartesian(const KerrParams& kp, double x, double y, double z) {
    double r = kerr_radius(x, y, z, kp.a);
    double denom = r * r * r * r + kp.a * kp.a * z * z;
    if (denom < 1e-280 || r < 1e-140)
        throw KerrSingularityError("Kerr covariant tensor at the ring singularity");
    double F = 2.0 * kp.m * r * r * r / denom;
    double ra = r * r + kp.a * kp.a;
    double l[4] = {1.0, (r * x + kp.a * y) / ra, (r * y - kp.a * x) / ra, z / r};
    MetricMatrix M = MetricMatrix::Zero(4, 4);
    M(0, 0) = 1;
    for (int j = 1; j < 4; ++j) M(j, j) = -1;
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) M(j, k) -= F * l[j] * l[k];
    return M;
}

// ---------------------------------------------------------------------------
// Light in a moving dielectric (Gordon form):
//   g_{jk} = eta_{jk} + (n^-2 - 1) v_j v_k,
// with four-velocity v_0 = gamma, v_j = -gamma w_j, gamma = (1-|w|^2)^{-1/2}.
// Stored as the inverse tensor (computed pointwise).
// ---------------------------------------------------------------------------
inline StationaryMetric build_gordon(std::function<double(const PointN&)> n_field,
                                     std::function<Eigen::Vector3d(const PointN&)> w_field) {
    return StationaryMetric(
        3, Coords::cartesian, "gordon",
        [n_field = std::move(n_field), w_field = std::move(w_field)](const PointN& p) {
            double n = n_field(p);
            Eigen::Vector3d w = w_field(p);
            if (!(n >= 1.0)) throw MetricError("gordon: refraction index must satisfy n >= 1");
            double w2 = w.squaredNorm();
            if (!(w2 < 1.0)) throw HyperbolicityError("gordon: flow speed must satisfy |w| < 1");
            double gamma = 1.0 / std::sqrt(1.0 - w2);
            double v[4] = {gamma, -gamma * w[0], -gamma * w[1], -gamma * w[2]};
            double fac = 1.0 / (n * n) - 1.0;
            MetricMatrix cov = MetricMatrix::Zero(4, 4);
            cov(0, 0) = 1;
            for (int j = 1; j < 4; ++j) cov(j, j) = -1;
            if (fac != 0.0)
                for (int j = 0; j < 4; ++j)
                    for (int k = 0; k < 4; ++k) cov(j, k) += fac * v[j] * v[k];
            return invert_metric(cov);
        });
}

// ---------------------------------------------------------------------------
// Acoustic waves in a moving fluid:
//   g_00 = (rho/c)(c^2 - v^2),  g_0j = (rho/c) v^j,  g_jk = -(rho/c) delta_jk.
// dim may be 2 for planar problems (same tensor pattern).
// ---------------------------------------------------------------------------
inline StationaryMetric build_acoustic(std::function<double(const PointN&)> density,
                                       std::function<double(const PointN&)> sound_speed,
                                       std::function<PointN(const PointN&)> flow, int dim = 3) {
    return StationaryMetric(
        dim, Coords::cartesian, "acoustic",
        [density = std::move(density), sound_speed = std::move(sound_speed),
         flow = std::move(flow), dim](const PointN& p) {
            double rho = density(p), c = sound_speed(p);
            if (!(rho > 0) || !(c > 0)) throw MetricError("acoustic: need rho > 0 and c > 0");
            PointN v = flow(p);
            const int n = dim + 1;
            MetricMatrix cov = MetricMatrix::Zero(n, n);
            double s = rho / c;
            cov(0, 0) = s * (c * c - v.squaredNorm());
            for (int j = 1; j < n; ++j) {
                cov(0, j) = cov(j, 0) = s * v[j - 1];
                cov(j, j) = -s;
            }
            return invert_metric(cov);
        });
}

/// Radial draining flow v(x) = -c (r0/|x|) x_hat. Sonic surface (and, for this
/// profile, horizon) at |x| = r0.
inline StationaryMetric acoustic_radial_drain(double c0, double r0, int dim = 3) {
    return build_acoustic(
        [](const PointN&) { return 1.0; }, [c0](const PointN&) { return c0; },
        [c0, r0](const PointN& p) {
            double r = p.norm();
            if (r < 1e-12) throw MetricError("acoustic drain: evaluation at the sink");
            PointN v = p;
            v *= -c0 * r0 / (r * r);
            return v;
        },
        dim);
}

// ---------------------------------------------------------------------------
// Flow-form metrics. Two conventions are supported:
//
//  * unit_lapse: g^{00} = 1, g^{j0} = v^j, g^{jk} = eta^{jk} + v^j v^k,
//    spatial fields only, Cartesian. The ergosphere is |v| = 1 and any
//    surface with v = (unit normal) on it is characteristic.
//
//  * explicit4: g^{jk} = xi^{jk} + v^j v^k for 0 <= j,k <= 3 in cylindrical
//    coordinates, with user-supplied v^0 (and v^3). Kerr has this shape.
// ---------------------------------------------------------------------------
struct FlowForm {
    enum class V0Mode { unit_lapse, explicit4 };

    int dim = 2;
    V0Mode v0_mode = V0Mode::unit_lapse;
    /// spatial velocity components v^1..v^n (unit_lapse) or v^1, v^2 (explicit4)
    std::function<PointN(const PointN&)> v;
    /// explicit4 only:
    std::function<double(const PointN&)> v0;
    std::function<double(const PointN&)> v3;
    std::string name = "flow";
};

inline StationaryMetric build_flow_metric(const FlowForm& f) {
    if (f.v0_mode == FlowForm::V0Mode::unit_lapse) {
        const int dim = f.dim;
        return StationaryMetric(dim, Coords::cartesian, f.name, [f, dim](const PointN& p) {
            PointN v = f.v(p);
            const int n = dim + 1;
            MetricMatrix M = MetricMatrix::Zero(n, n);
            M(0, 0) = 1;
            for (int j = 1; j < n; ++j) {
                M(0, j) = M(j, 0) = v[j - 1];
                M(j, j) = -1;
            }
            for (int j = 1; j < n; ++j)
                for (int k = 1; k < n; ++k) M(j, k) += v[j - 1] * v[k - 1];
            return M;
        });
    }
    if (!f.v0 || !f.v3) throw MetricError("flow form: explicit4 requires v0 and v3 fields");
    return StationaryMetric(3, Coords::cylindrical, f.name, [f](const PointN& p) {
        PointN vs = f.v(p);
        double rho = p[0];
        double v[4] = {f.v0(p), vs[0], vs[1], f.v3(p)};
        MetricMatrix M = MetricMatrix::Zero(4, 4);
        M(0, 0) = 1;
        M(1, 1) = -1;
        M(2, 2) = -1;
        M(3, 3) = -1.0 / (rho * rho);
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) M(j, k) += v[j] * v[k];
        return M;
    });
}

/// Kerr written as an explicit4 flow form: v^mu = sqrt(F) m^mu. Reproduces
/// build_kerr exactly (same products), which makes it the canonical input for
/// the bump-perturbation machinery.
inline FlowForm kerr_flow_form(const KerrParams& kp) {
    kp.validate();
    FlowForm f;
    f.dim = 3;
    f.v0_mode = FlowForm::V0Mode::explicit4;
    f.name = "kerr_flow(m=" + std::to_string(kp.m) + ",a=" + std::to_string(kp.a) + ")";
    f.v = [kp](const PointN& p) {
        auto t = detail::kerr_terms_rz(p[0], p[1], kp);
        double s = std::sqrt(t.F);
        return point2(s * t.m1, s * t.m2);
    };
    f.v0 = [kp](const PointN& p) {
        auto t = detail::kerr_terms_rz(p[0], p[1], kp);
        return -std::sqrt(t.F);
    };
    f.v3 = [kp](const PointN& p) {
        auto t = detail::kerr_terms_rz(p[0], p[1], kp);
        return std::sqrt(t.F) * t.m3;
    };
    return f;
}

/// Static medium with a depth-dependent propagation speed c(z):
/// g^{00} = 1/c^2, spatial block -identity. Planar (n = 2), used for layered
/// slab experiments where g_00 = c^2 can be driven toward zero.
inline StationaryMetric build_static_medium(std::function<double(double)> speed) {
    return StationaryMetric(2, Coords::cartesian, "static_medium",
                            [speed = std::move(speed)](const PointN& p) {
                                double c = speed(p[1]);
                                if (!(c > 0)) throw MetricError("static medium: need c > 0");
                                MetricMatrix M = MetricMatrix::Zero(3, 3);
                                M(0, 0) = 1.0 / (c * c);
                                M(1, 1) = -1;
                                M(2, 2) = -1;
                                return M;
                            });
}

/// Planar rigid rotation v = omega x (-y, x); ergosphere at rho = 1/omega.
inline FlowForm rigid_rotation_flow(double omega) {
    FlowForm f;
    f.dim = 2;
    f.name = "rigid_rotation(omega=" + std::to_string(omega) + ")";
    f.v = [omega](const PointN& p) { return point2(-omega * p[1], omega * p[0]); };
    return f;
}

/// Radial drain as a unit-lapse flow form, |v| = r0/|x| (speed 1 at r0).
inline FlowForm radial_drain_flow(double r0, int dim = 2) {
    FlowForm f;
    f.dim = dim;
    f.name = "radial_drain(r0=" + std::to_string(r0) + ")";
    f.v = [r0, dim](const PointN& p) {
        double r = p.norm();
        if (r < 1e-12) throw MetricError("radial drain: evaluation at the sink");
        PointN v = p;
        v *= -r0 / (r * r);
        (void)dim;
        return v;
    };
    return f;
}

}  // namespace ergolab
