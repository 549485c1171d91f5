#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ergolab/metric.hpp"
#include "ergolab/wave.hpp"

namespace ergolab {

struct PathDegeneracyError : MetricError {
    using MetricError::MetricError;
};
struct ErgosphereRangeError : MetricError {
    using MetricError::MetricError;
};

/// A parametric spatial curve x(sigma), sigma in [0, 1].
struct ParamPath {
    std::function<PointN(double)> pos;
    std::function<PointN(double)> vel;
};

inline ParamPath line_path(const PointN& a, const PointN& b) {
    return {[a, b](double s) { return PointN(a + s * (b - a)); },
            [a, b](double) { return PointN(b - a); }};
}

// ---------------------------------------------------------------------------
// Characteristic slopes of the metric restricted to the (t, path) surface:
//   ds^2|_H = a00 dt^2 + 2 a01 dt dsigma + a11 dsigma^2
//           = a11 (dsigma - lambda+ dt)(dsigma - lambda- dt),
// so lambda+- are the roots of a11 L^2 + 2 a01 L + a00 = 0, with
// lambda+ > 0 > lambda- while g_00 > 0 and one root crossing zero exactly on
// the ergosphere.
// ---------------------------------------------------------------------------
struct LambdaPair {
    double plus, minus;
};

inline LambdaPair lambda_pm(const StationaryMetric& g, const ParamPath& path, double sigma) {
    PointN x = path.pos(sigma);
    PointN v = path.vel(sigma);
    MetricMatrix cov = g.cov_at(x);
    const int n = g.dim == int(x.size()) ? g.dim : int(x.size());
    double a00 = cov(0, 0), a01 = 0, a11 = 0;
    for (int j = 1; j <= n; ++j) {
        a01 += cov(0, j) * v[j - 1];
        for (int k = 1; k <= n; ++k) a11 += cov(j, k) * v[j - 1] * v[k - 1];
    }
    if (std::abs(a11) < 1e-14)
        throw PathDegeneracyError("lambda_pm: path tangent is null for the restricted metric");
    double disc = a01 * a01 - a00 * a11;
    if (disc < 0) throw HyperbolicityError("lambda_pm: restricted metric is not hyperbolic here");
    double s = std::sqrt(disc);
    double l1 = (-a01 + s) / a11;
    double l2 = (-a01 - s) / a11;
    if (l1 < l2) std::swap(l1, l2);
    return {l1, l2};
}

/// Coordinate time along the path at speed lambda+:
///   T(sigma) = int_0^sigma dsig / lambda+(sig),
/// adaptive Simpson quadrature. Diverges logarithmically as the endpoint
/// approaches the ergosphere, where lambda+ -> 0.
inline double travel_time(const StationaryMetric& g, const ParamPath& path, double sigma_target,
                          double rtol = 1e-10) {
    auto f = [&](double s) {
        LambdaPair l = lambda_pm(g, path, s);
        if (!(l.plus > 0))
            throw ErgosphereRangeError("travel_time: lambda+ vanished inside the range");
        return 1.0 / l.plus;
    };
    // adaptive Simpson with absolute/relative mix
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double a, double b, double fa, double fm, double fb, double whole, int depth) {
            double m = 0.5 * (a + b);
            double lm = f(0.5 * (a + m)), rm = f(0.5 * (m + b));
            double left = (m - a) / 6.0 * (fa + 4 * lm + fm);
            double right = (b - m) / 6.0 * (fm + 4 * rm + fb);
            if (depth > 50) return left + right;
            if (std::abs(left + right - whole) < 15.0 * rtol * (std::abs(left + right) + 1e-30))
                return left + right + (left + right - whole) / 15.0;
            return rec(a, m, fa, lm, fm, left, depth + 1) +
                   rec(m, b, fm, rm, fb, right, depth + 1);
        };
    double fa = f(0), fb = f(sigma_target), fm = f(0.5 * sigma_target);
    double whole = sigma_target / 6.0 * (fa + 4 * fm + fb);
    return rec(0, sigma_target, fa, fm, fb, whole, 0);
}

// ---------------------------------------------------------------------------
// Dirichlet-to-Neumann trace: solve the wave equation on a quiescent slab
// with Dirichlet data f on the z_min wall, return the weighted conormal
// derivative  sum g^{jk} u_j nu_k |sum g^{pr} nu_p nu_r|^{-1/2}  sampled on
// that wall. The boundary must not be characteristic.
// ---------------------------------------------------------------------------
struct DNTrace {
    std::vector<double> times;
    std::vector<double> s;                    // arc coordinate (x positions)
    std::vector<std::vector<double>> values;  // [time][s]
};

struct DNConfig {
    StationaryMetric metric;
    GridSpec grid;
    std::function<double(double, double)> f;     // (t, s) Dirichlet data
    std::function<double(double, double)> fdot;  // time derivative of f
    double t_final = 10.0;
    int sample_every = 1;
    double cfl = 0.4;
    // free side/far walls keep plane-pulse slab runs uniform across the slab
    OuterBC outer = OuterBC::free_wall;
};

inline DNTrace dn_operator(const DNConfig& dn) {
    // boundary must not be characteristic: check |g^{zz}| on the wall
    for (int k = 0; k <= 8; ++k) {
        double x = dn.grid.rho_min + (dn.grid.rho_max - dn.grid.rho_min) * k / 8.0;
        MetricMatrix M = dn.metric.inv_at(point2(x, dn.grid.z_min));
        if (std::abs(M(2, 2)) < 1e-8)
            throw WaveError("dn_operator: the data wall is characteristic");
    }
    SimConfig cfg;
    cfg.metric = dn.metric;
    cfg.grid = dn.grid;
    cfg.outer = dn.outer;
    cfg.cfl = dn.cfl;
    cfg.t_final = dn.t_final;
    cfg.dirichlet = DirichletDriver{dn.f, dn.fdot};
    cfg.record_sup_every_step = false;
    WaveSolver solver(cfg);

    DNTrace out;
    for (int i = 1; i <= solver.nx(); ++i) out.s.push_back(solver.x_of(i));
    int steps = int(std::ceil(dn.t_final / solver.suggested_dt() - 1e-12));
    double dt = dn.t_final / steps;
    out.times.push_back(0.0);
    out.values.push_back(solver.wall_trace());
    for (int k = 1; k <= steps; ++k) {
        solver.step(dt);
        if (k % dn.sample_every == 0 || k == steps) {
            out.times.push_back(solver.state().t);
            out.values.push_back(solver.wall_trace());
        }
    }
    return out;
}

/// First time after t_start at which |trace| at the wall midpoint exceeds
/// `frac` of its global maximum; -1 when it never does.
inline double first_arrival(const DNTrace& tr, double t_start, double frac = 0.05) {
    std::size_t mid = tr.s.size() / 2;
    double peak = 0;
    for (const auto& row : tr.values) peak = std::max(peak, std::abs(row[mid]));
    if (peak <= 0) return -1;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        if (tr.times[k] < t_start) continue;
        if (std::abs(tr.values[k][mid]) > frac * peak) return tr.times[k];
    }
    return -1;
}

}  // namespace ergolab
