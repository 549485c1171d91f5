#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ergolab/ergosphere.hpp"
#include "ergolab/geometry.hpp"
#include "ergolab/metric.hpp"

namespace ergolab {

// ---------------------------------------------------------------------------
// Characteristic-surface tests. A closed curve S in the (rho,z) half-plane is
// characteristic when sum g^{jk} n_j n_k = 0 along it (n the outward normal);
// the sign of sum g^{0j} n_j then separates black holes (negative: signals
// only cross inward) from white holes (positive).
// ---------------------------------------------------------------------------
enum class SurfaceClass { black_hole, white_hole, not_characteristic, mixed };

inline const char* to_string(SurfaceClass c) {
    switch (c) {
        case SurfaceClass::black_hole: return "black_hole";
        case SurfaceClass::white_hole: return "white_hole";
        case SurfaceClass::not_characteristic: return "not_characteristic";
        default: return "mixed";
    }
}

struct CharReport {
    double residual = 0;       // max over samples of |Q(n)| / (|n|^2 ||g||)
    double flux_min = 0;       // min over samples of sum g^{0j} n_j
    double flux_max = 0;
    SurfaceClass classification = SurfaceClass::not_characteristic;
    std::size_t samples = 0;
};

namespace detail {
inline std::vector<Vec2> outward_normals(const PlaneCurve& curve) {
    if (!curve.normals.empty() && curve.normals.size() == curve.pts.size()) return curve.normals;
    if (curve.pts.size() >= 4 && curve.closed) {
        CurveSpline sp(curve);
        std::vector<Vec2> out;
        out.reserve(curve.pts.size());
        PlaneCurve ccw = curve;
        ccw.ensure_ccw();
        for (const auto& p : ccw.pts) {
            auto pr = sp.project(p);
            out.push_back(rot_minus90(pr.tangent));
        }
        return out;
    }
    throw GeometryError("outward_normals: need a closed curve with at least 4 points");
}
}  // namespace detail

/// Residual, flux profile and classification of a closed curve with respect
/// to an axisymmetric (or planar n=2) metric. Relative tolerance 1e-6.
inline CharReport characteristic_residual(const StationaryMetric& g, const PlaneCurve& curve,
                                          double tol = 1e-6) {
    PlaneCurve c = curve;
    c.ensure_ccw();
    std::vector<Vec2> normals = detail::outward_normals(c);
    CharReport rep;
    rep.samples = c.pts.size();
    rep.flux_min = 1e300;
    rep.flux_max = -1e300;
    for (std::size_t i = 0; i < c.pts.size(); ++i) {
        const Vec2& p = c.pts[i];
        Vec2 n = normals[i].normalized();
        Eigen::Matrix2d B = g.block2(p);
        double q = n.x() * (B(0, 0) * n.x() + B(0, 1) * n.y()) +
                   n.y() * (B(1, 0) * n.x() + B(1, 1) * n.y());
        double gnorm = std::max(B.cwiseAbs().maxCoeff(), 1e-300);
        rep.residual = std::max(rep.residual, std::abs(q) / gnorm);
        Vec2 shift = g.shift2(p);
        double flux = shift.dot(n);
        rep.flux_min = std::min(rep.flux_min, flux);
        rep.flux_max = std::max(rep.flux_max, flux);
    }
    if (rep.residual >= tol)
        rep.classification = SurfaceClass::not_characteristic;
    else if (rep.flux_max < 0)
        rep.classification = SurfaceClass::black_hole;
    else if (rep.flux_min > 0)
        rep.classification = SurfaceClass::white_hole;
    else
        rep.classification = SurfaceClass::mixed;
    return rep;
}

/// Point-sample variant for n=3 Cartesian metrics (e.g. a sphere with its
/// outward normals): same residual and flux conventions.
inline CharReport characteristic_residual_points(const StationaryMetric& g,
                                                 const std::vector<PointN>& pts,
                                                 const std::vector<PointN>& normals,
                                                 double tol = 1e-6) {
    CharReport rep;
    rep.samples = pts.size();
    rep.flux_min = 1e300;
    rep.flux_max = -1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        MetricMatrix M = g.inv_at(pts[i]);
        const int n = g.dim;
        PointN nu = normals[i] / normals[i].norm();
        double q = 0, flux = 0, gnorm = 0;
        for (int j = 1; j <= n; ++j) {
            flux += M(0, j) * nu[j - 1];
            for (int k = 1; k <= n; ++k) {
                q += M(j, k) * nu[j - 1] * nu[k - 1];
                gnorm = std::max(gnorm, std::abs(M(j, k)));
            }
        }
        rep.residual = std::max(rep.residual, std::abs(q) / std::max(gnorm, 1e-300));
        rep.flux_min = std::min(rep.flux_min, flux);
        rep.flux_max = std::max(rep.flux_max, flux);
    }
    if (rep.residual >= tol)
        rep.classification = SurfaceClass::not_characteristic;
    else if (rep.flux_max < 0)
        rep.classification = SurfaceClass::black_hole;
    else if (rep.flux_min > 0)
        rep.classification = SurfaceClass::white_hole;
    else
        rep.classification = SurfaceClass::mixed;
    return rep;
}

// ---------------------------------------------------------------------------
// Null directions of the restricted (rho,z) quadratic form
//   g^{11} n1^2 + 2 g^{12} n1 n2 + g^{22} n2^2 = 0.
// The discriminant is -Delta1: no real normal direction outside the
// restricted ergosphere, one on it, two inside.
// ---------------------------------------------------------------------------
struct NullDirections {
    int count = 0;
    std::array<Vec2, 2> tangents{Vec2(0, 0), Vec2(0, 0)};  // unit tangents (perp of normals)
};

inline NullDirections null_directions(const StationaryMetric& g, const Vec2& p,
                                      double zero_tol = 1e-10) {
    Eigen::Matrix2d B = g.block2(p);
    double A = B(0, 0), Bc = B(0, 1), C = B(1, 1);
    double scale = std::max({std::abs(A), std::abs(Bc), std::abs(C), 1e-300});
    double disc = Bc * Bc - A * C;  // = -Delta1
    NullDirections out;
    if (disc < -zero_tol * scale * scale) return out;  // Delta1 > 0: none
    if (disc <= zero_tol * scale * scale) {
        // single degenerate direction
        Vec2 n = std::abs(A) >= std::abs(C) ? Vec2(Bc, -A) : Vec2(C, -Bc);
        if (n.norm() < 1e-300 * scale) n = Vec2(1, 0);
        n.normalize();
        out.count = 1;
        out.tangents[0] = rot90(n);
        return out;
    }
    double s = std::sqrt(disc);
    Vec2 n1, n2;
    if (std::abs(A) >= std::abs(C)) {
        // n1/n2 roots of A t^2 + 2 Bc t + C = 0
        double q = -(Bc + (Bc >= 0 ? s : -s));
        double t1 = q / A;
        double t2 = (std::abs(q) > 1e-300) ? C / q : 0.0;
        n1 = Vec2(t1, 1).normalized();
        n2 = Vec2(t2, 1).normalized();
    } else {
        double q = -(Bc + (Bc >= 0 ? s : -s));
        double t1 = q / C;
        double t2 = (std::abs(q) > 1e-300) ? A / q : 0.0;
        n1 = Vec2(1, t1).normalized();
        n2 = Vec2(1, t2).normalized();
    }
    out.count = 2;
    out.tangents[0] = rot90(n1);
    out.tangents[1] = rot90(n2);
    return out;
}

// ---------------------------------------------------------------------------
// Characteristic curves: integral curves of the null tangent fields, with
// continuous branch tracking (pick the tangent maximizing the dot product
// with the previous direction; at Delta1 = 0 the families merge).
// ---------------------------------------------------------------------------
enum class ExitReason { closed, crossed_out, max_length, tangent_lost, ambiguous };

inline const char* to_string(ExitReason r) {
    switch (r) {
        case ExitReason::closed: return "closed";
        case ExitReason::crossed_out: return "crossed_out";
        case ExitReason::max_length: return "max_length";
        case ExitReason::tangent_lost: return "tangent_lost";
        default: return "ambiguous";
    }
}

struct IntegrationResult {
    PlaneCurve path;           // open unless reason == closed
    ExitReason reason = ExitReason::max_length;
    double length = 0;
    double near_miss = 1e300;  // closest directed return to the start section
    bool branch_flagged = false;
};

enum class CharFamily { plus, minus };

namespace detail {
/// Evaluate the branch-tracked unit tangent; empty when no null direction.
/// Slightly outside the zero set (where the discriminant is negative) the
/// field is extended by clamping the discriminant to zero, as long as the
/// estimated distance to the zero set — |disc| over a finite-difference
/// gradient — is below out_tol. An invariant curve can then be followed
/// through roundoff-level excursions, while genuine transversal exits are
/// still reported within a step or two.
inline std::optional<Vec2> char_tangent(const StationaryMetric& g, const Vec2& p,
                                        const Vec2& ref_dir, double out_tol,
                                        double length_scale) {
    Eigen::Matrix2d B = g.block2(p);
    double A = B(0, 0), Bc = B(0, 1), C = B(1, 1);
    double scale = std::max({std::abs(A), std::abs(Bc), std::abs(C), 1e-300});
    double disc = Bc * Bc - A * C;
    if (disc < 0) {
        if (disc < -1e-13 * scale * scale) {
            auto disc_at = [&](const Vec2& q) {
                Eigen::Matrix2d Bq = g.block2(q);
                return Bq(0, 1) * Bq(0, 1) - Bq(0, 0) * Bq(1, 1);
            };
            double fd = 1e-5 * length_scale;
            double gx = (disc_at(p + Vec2(fd, 0)) - disc_at(p - Vec2(fd, 0))) / (2 * fd);
            double gy = (disc_at(p + Vec2(0, fd)) - disc_at(p - Vec2(0, fd))) / (2 * fd);
            double gnorm = std::hypot(gx, gy);
            double dist_est = std::abs(disc) / std::max(gnorm, 1e-300);
            if (dist_est > out_tol) return std::nullopt;
            // evaluate the degenerate direction at the Newton projection onto
            // the zero set; the extension is then accurate to O(dist^2) and an
            // invariant curve can be tracked without being repelled
            Vec2 proj = p - disc * Vec2(gx, gy) / (gnorm * gnorm);
            B = g.block2(proj);
            A = B(0, 0);
            Bc = B(0, 1);
            C = B(1, 1);
        }
        disc = 0.0;
    }
    double s = std::sqrt(disc);
    Vec2 cand[2];
    if (std::abs(A) >= std::abs(C)) {
        double q = -(Bc + (Bc >= 0 ? s : -s));
        cand[0] = rot90(Vec2(q / A, 1).normalized());
        cand[1] = rot90(Vec2(std::abs(q) > 1e-300 ? C / q : 0.0, 1).normalized());
    } else {
        double q = -(Bc + (Bc >= 0 ? s : -s));
        cand[0] = rot90(Vec2(1, q / C).normalized());
        cand[1] = rot90(Vec2(1, std::abs(q) > 1e-300 ? A / q : 0.0).normalized());
    }
    double best = -2;
    Vec2 pick(0, 0);
    for (auto& t : cand) {
        for (double sgn : {1.0, -1.0}) {
            double d = ref_dir.dot(sgn * t);
            if (d > best) {
                best = d;
                pick = sgn * t;
            }
        }
    }
    return pick;
}
}  // namespace detail

struct IntegrateOptions {
    double step = 1e-3;
    double max_length = 100.0;
    double close_rtol = 1e-6;     // closure tolerance relative to curve scale
    double capture_frac = 0.05;   // Poincare capture radius relative to scale
    double scale = 1.0;           // characteristic length of the problem
    /// Outside-excursion tolerance relative to scale. Must sit between the
    /// roundoff drift of tracking an invariant curve (~1e-7) and the per-step
    /// kick h*sin(tilt) that a genuinely transversal contact produces.
    double exit_rtol = 1e-6;
};

/// RK4 integration of a characteristic family from `start`. Terminates on
/// closure (directed return to the start section within tolerance), on
/// leaving the Delta1 <= 0 region, or on max length.
inline IntegrationResult integrate_characteristic(const StationaryMetric& g, const Vec2& start,
                                                  CharFamily family, const IntegrateOptions& opt) {
    IntegrationResult res;
    // initial direction: order the two tangents by angle, pick by family
    NullDirections nd = null_directions(g, start, 1e-9);
    Vec2 dir;
    if (nd.count == 0) {
        res.reason = ExitReason::tangent_lost;
        return res;
    } else if (nd.count == 1) {
        dir = nd.tangents[0];
    } else {
        Vec2 a = nd.tangents[0], b = nd.tangents[1];
        if (std::atan2(a.y(), a.x()) > std::atan2(b.y(), b.x())) std::swap(a, b);
        dir = (family == CharFamily::plus) ? a : b;
    }

    const double h = opt.step;
    const double tol_close = opt.close_rtol * opt.scale;
    const double capture = opt.capture_frac * opt.scale;
    const double arm_dist = 2.0 * capture;

    Vec2 x = start;
    Vec2 t0 = dir;
    bool armed = false;
    double len = 0;
    res.path.pts.push_back(x);
    res.path.closed = false;

    const double out_tol = opt.exit_rtol * opt.scale;
    auto field = [&](const Vec2& p, const Vec2& ref) {
        return detail::char_tangent(g, p, ref, out_tol, opt.scale);
    };

    double prev_sec = 0.0;  // signed coordinate along the start section normal
    while (len + 0.5 * h < opt.max_length) {
        auto k1 = field(x, dir);
        if (!k1) {
            res.reason = ExitReason::crossed_out;
            break;
        }
        auto k2 = field(x + 0.5 * h * (*k1), *k1);
        if (!k2) {
            res.reason = ExitReason::crossed_out;
            break;
        }
        auto k3 = field(x + 0.5 * h * (*k2), *k2);
        if (!k3) {
            res.reason = ExitReason::crossed_out;
            break;
        }
        auto k4 = field(x + h * (*k3), *k3);
        if (!k4) {
            res.reason = ExitReason::crossed_out;
            break;
        }
        Vec2 move = (h / 6.0) * (*k1 + 2.0 * (*k2) + 2.0 * (*k3) + *k4);
        Vec2 xn = x + move;
        Vec2 dn = move.normalized();
        if (dir.dot(dn) < 0.2) res.branch_flagged = true;  // near-tangency turn

        len += h;
        // Poincare section through start, normal t0
        double sec = (xn - start).dot(t0);
        if (!armed && (xn - start).norm() > arm_dist) armed = true;
        if (armed) {
            double sec_prev = prev_sec;
            if (sec_prev < 0 && sec >= 0) {
                // crossed the section in the forward direction
                double w = sec_prev / (sec_prev - sec);
                Vec2 hit = x + w * (xn - x);
                double miss = (hit - start).norm();
                res.near_miss = std::min(res.near_miss, miss);
                if (miss < tol_close && dn.dot(t0) > 0.5) {
                    // the return point duplicates the start; close without it
                    res.path.closed = true;
                    res.reason = ExitReason::closed;
                    res.length = len;
                    return res;
                }
            }
        }
        prev_sec = sec;
        x = xn;
        dir = dn;
        res.path.pts.push_back(x);
        res.length = len;
    }
    if (res.reason == ExitReason::max_length && len + 0.5 * h >= opt.max_length)
        res.reason = ExitReason::max_length;
    return res;
}

// ---------------------------------------------------------------------------
// Closed-characteristic search: seed along (and just inside) the traced
// Delta1 = 0 curve, integrate each seed, return the first closure or a
// certificate listing every trajectory's exit event. Seeds run independently
// and results are merged in seed order, so the outcome is deterministic.
// ---------------------------------------------------------------------------
struct SeedDiagnostic {
    Vec2 seed;
    ExitReason reason;
    double near_miss;
    double length;
    Vec2 end_point;
    bool grazing_composite = false;  // closed, but alternating between riding
                                     // the zero set and interior excursions
};

struct ClosedSearchResult {
    std::optional<PlaneCurve> horizon;
    std::vector<SeedDiagnostic> seeds;
    bool zero_set_found = false;
    std::string note;
};

struct ClosedSearchOptions {
    int n_seeds = 16;
    int trace_resolution = 512;
    double step = 1e-3;
    double max_loops = 3.0;  // max length in units of the zero-set perimeter
    double close_rtol = 1e-6;
    double exit_rtol = 1e-6;
};

inline ClosedSearchResult find_closed_characteristic(const StationaryMetric& g, const Bbox& window,
                                                     const ClosedSearchOptions& opt = {}) {
    ClosedSearchResult out;
    TraceResult traced;
    try {
        traced = trace_level_set([&](const Vec2& p) { return delta1(g, p); }, window,
                                 opt.trace_resolution);
    } catch (const TopologyError&) {
        out.note = "no restricted-ergosphere zero set in the window";
        return out;
    }
    out.zero_set_found = true;
    const PlaneCurve& zero = traced.components.front().curve;
    const double scale = zero.scale();
    const double perimeter = zero.length();

    IntegrateOptions iopt;
    iopt.step = opt.step;
    iopt.max_length = opt.max_loops * perimeter;
    iopt.close_rtol = opt.close_rtol;
    iopt.scale = scale;
    iopt.exit_rtol = opt.exit_rtol;

    // A closed path counts as a horizon only if it is uniformly a ride of the
    // degenerate set or uniformly off it. Loops that alternate (riding the
    // set, dipping into the interior, grazing back on) are not smooth closed
    // curves: at a tangential graze the characteristic continuation is not
    // unique, so such composites are certified separately.
    const double tol_on = 1e-4 * scale;
    auto grazing = [&](const PlaneCurve& path) {
        std::size_t on = 0, off = 0;
        std::size_t stride = std::max<std::size_t>(1, path.pts.size() / 256);
        for (std::size_t i = 0; i < path.pts.size(); i += stride)
            (zero.distance(path.pts[i]) < tol_on ? on : off)++;
        return on > 0 && off > 0;
    };

    for (int s = 0; s < opt.n_seeds; ++s) {
        Vec2 seed = zero.point_at(double(s) / opt.n_seeds);
        for (CharFamily fam : {CharFamily::plus, CharFamily::minus}) {
            IntegrationResult r = integrate_characteristic(g, seed, fam, iopt);
            SeedDiagnostic diag{seed, r.reason, r.near_miss, r.length,
                                r.path.pts.empty() ? seed : r.path.pts.back(), false};
            if (r.reason == ExitReason::closed) {
                if (grazing(r.path)) {
                    diag.grazing_composite = true;
                } else {
                    out.seeds.push_back(diag);
                    out.horizon = r.path;
                    return out;
                }
            }
            out.seeds.push_back(diag);
        }
    }
    out.note = "no closed characteristic found from " + std::to_string(opt.n_seeds) + " seeds";
    return out;
}

}  // namespace ergolab
