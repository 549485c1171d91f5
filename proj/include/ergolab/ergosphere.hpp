#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "ergolab/families.hpp"
#include "ergolab/geometry.hpp"
#include "ergolab/metric.hpp"

namespace ergolab {

// ---------------------------------------------------------------------------
// Ergosphere scalars.
//
// delta: oriented determinant of the spatial block of the inverse metric,
//   Delta = (-1)^n det[g^{jk}]_{j,k=1..n},
// so Minkowski gives +1 and Delta > 0 outside the ergosphere.
// delta1: determinant of the (rho,z) block (the restricted form), already
// positive outside with no orientation factor needed (n_eff = 2).
// ---------------------------------------------------------------------------
inline double delta(const StationaryMetric& g, const PointN& p) {
    MetricMatrix M = g.inv_at(p);
    const int n = g.dim;
    Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
    double det;
    if (n == 2) {
        det = M(1, 1) * M(2, 2) - M(1, 2) * M(2, 1);
    } else {
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) S(j, k) = M(j + 1, k + 1);
        det = S.determinant();
    }
    return (n % 2 == 0 ? 1.0 : -1.0) * det;
}
inline double delta(const StationaryMetric& g, const Vec2& p) {
    return delta(g, point2(p.x(), p.y()));
}

inline double delta1(const StationaryMetric& g, const Vec2& p) {
    Eigen::Matrix2d B = g.block2(p);
    return B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0);
}

/// Axis-regularized ergosphere scalar for level-set tracing: in cylindrical
/// coordinates Delta carries a 1/rho^2 factor from the phi block, so
/// rho^2 * Delta is smooth and even across rho = 0 with the same zero set.
/// The axis itself is evaluated one-sided at |rho| = 1e-8 (the scalar is even
/// in rho, so the limit exists).
inline double delta_reduced(const StationaryMetric& g, const Vec2& p) {
    if (g.coords != Coords::cylindrical) return delta(g, point2(p.x(), p.y()));
    double rho = std::abs(p.x()) < 1e-8 ? 1e-8 : p.x();
    return rho * rho * delta(g, point2(rho, p.y()));
}

/// Horizon radii r_pm = m +- sqrt(m^2 - a^2).
inline std::pair<double, double> kerr_horizon_radii(const KerrParams& kp) {
    if (!(kp.m > 0)) throw MetricError("kerr_horizon_radii: m must be positive");
    if (kp.a > kp.m) throw ExtremalError("kerr_horizon_radii: a > m has no real horizons");
    double s = std::sqrt(std::max(kp.m * kp.m - kp.a * kp.a, 0.0));
    return {kp.m + s, kp.m - s};
}

/// The horizon ellipse (r_h/2m) rho^2 + z^2 = r_h^2 for r_h in {r+, r-},
/// with exact outward normals attached.
inline PlaneCurve kerr_horizon_ellipse(const KerrParams& kp, double r_h, int n = 400) {
    double arho = std::sqrt(2.0 * kp.m * r_h);  // semi-axis along rho
    double az = r_h;                            // semi-axis along z
    return make_ellipse(arho, az, n);
}

enum class ErgoBranch { outer, inner };

struct BranchRangeError : MetricError {
    using MetricError::MetricError;
};

/// Solve the Kerr ergosphere equation r^4 + a^2 z^2 - 2 m r^3 = 0 for r at
/// fixed z. The outer branch lives in [r+, 2m] for |z| <= r+, the inner in
/// (0, r-] for |z| <= r-. Bisection with a Newton polish; the residual of the
/// quartic at the returned root is below 1e-10 * (2m)^4.
inline double kerr_ergosphere_radius(const KerrParams& kp, double z, ErgoBranch branch) {
    auto [rp, rm] = kerr_horizon_radii(kp);
    auto f = [&](double r) { return r * r * r * r - 2.0 * kp.m * r * r * r + kp.a * kp.a * z * z; };
    double lo, hi;
    if (branch == ErgoBranch::outer) {
        if (std::abs(z) > rp * (1 + 1e-12))
            throw BranchRangeError("outer ergosphere: |z| exceeds the on-axis reach r+");
        lo = rp * (1 - 1e-12);
        hi = 2.0 * kp.m * (1 + 1e-12);
    } else {
        if (kp.a == 0) return 0.0;  // inner ergosphere collapses to the origin
        if (std::abs(z) > rm * (1 + 1e-12))
            throw BranchRangeError("inner ergosphere: |z| exceeds the on-axis reach r-");
        lo = 0.0;
        hi = rm * (1 + 1e-12);
    }
    double flo = f(lo), fhi = f(hi);
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if (flo * fhi > 0) {
        // clamped ends may both be on one side at |z| = reach; return the apex
        if (branch == ErgoBranch::outer) return rp;
        return rm;
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0 || hi - lo < 1e-16 * std::max(1.0, hi)) {
            lo = hi = mid;
            break;
        }
        ((flo * fm <= 0) ? hi : lo) = mid;
        if (flo * fm > 0) flo = fm;
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {  // Newton polish
        double fr = f(r);
        double dfr = 4 * r * r * r - 6 * kp.m * r * r;
        if (std::abs(dfr) < 1e-30) break;
        r -= fr / dfr;
    }
    return r;
}

/// (rho, z) point of the ergosphere branch at height z, using the identity
/// rho^2 = r^2 + a^2 - a^2 z^2 / r^2 - z^2.
inline Vec2 kerr_ergosphere_point(const KerrParams& kp, double z, ErgoBranch branch) {
    double r = kerr_ergosphere_radius(kp, z, branch);
    if (r <= 0) return Vec2(kp.a, z);
    double rho2 = r * r + kp.a * kp.a - kp.a * kp.a * z * z / (r * r) - z * z;
    return Vec2(std::sqrt(std::max(rho2, 0.0)), z);
}

// ---------------------------------------------------------------------------
// Level-set tracing: marching squares on a uniform grid with a 1D root
// polish along crossed edges (bisection/secant hybrid). Returns all closed
// components; saddle cells trigger one automatic 2x refinement.
// ---------------------------------------------------------------------------
struct LevelSetReport {
    PlaneCurve curve;
    double residual_max = 0;
    Bbox bbox;
};

struct TraceResult {
    std::vector<LevelSetReport> components;
    std::vector<PlaneCurve> open_chains;  // chains that hit the window boundary
    int resolution = 0;
    bool refined = false;
};

struct TopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Root of f restricted to the segment [a,b] (f(a), f(b) of opposite sign).
/// Secant step with bisection safeguard; returns the point and |f| there.
inline std::pair<Vec2, double> edge_root(const std::function<double(const Vec2&)>& f, Vec2 a,
                                         Vec2 b, double fa, double fb, double ftol) {
    double ta = 0, tb = 1;
    auto at = [&](double t) { return Vec2(a + t * (b - a)); };
    double t = fa / (fa - fb);
    double ft = f(at(t));
    for (int it = 0; it < 60 && std::abs(ft) > ftol; ++it) {
        if (!std::isfinite(ft)) break;
        if (fa * ft <= 0) {
            tb = t;
            fb = ft;
        } else {
            ta = t;
            fa = ft;
        }
        double ts = (std::abs(fa - fb) > 1e-300) ? ta + fa * (tb - ta) / (fa - fb) : 0.5 * (ta + tb);
        if (!(ts > ta && ts < tb)) ts = 0.5 * (ta + tb);
        t = ts;
        ft = f(at(t));
    }
    return {at(t), std::abs(ft)};
}

}  // namespace detail

inline TraceResult trace_level_set(const std::function<double(const Vec2&)>& f, const Bbox& window,
                                   int n = 512, double polish_rtol = 1e-8, int max_refine = 1) {
    TraceResult result;
    int res = n;
    for (int attempt = 0;; ++attempt) {
        result = TraceResult{};
        result.resolution = res;
        result.refined = attempt > 0;
        const int nx = res, ny = res;
        const double hx = (window.hi.x() - window.lo.x()) / nx;
        const double hy = (window.hi.y() - window.lo.y()) / ny;
        std::vector<double> vals((nx + 1) * (ny + 1));
        auto node = [&](int i, int j) { return Vec2(window.lo.x() + i * hx, window.lo.y() + j * hy); };
        double fscale = 0;
        std::size_t n_finite = 0;
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) {
                double v;
                try {
                    v = f(node(i, j));
                } catch (const std::exception&) {
                    v = std::numeric_limits<double>::quiet_NaN();
                }
                vals[j * (nx + 1) + i] = v;
                if (std::isfinite(v)) {
                    fscale += std::abs(v);
                    ++n_finite;
                }
            }
        if (n_finite == 0) throw TopologyError("trace_level_set: field not finite in window");
        fscale = std::max(fscale / double(n_finite), 1e-300);
        const double ftol = polish_rtol * fscale;

        // edge key -> polished crossing point
        std::map<std::array<int, 3>, int> edge_point;  // (i, j, 0=horizontal/1=vertical) -> index
        std::vector<Vec2> points;
        std::vector<double> point_resid;
        auto crossing = [&](int i, int j, int dir) -> int {
            std::array<int, 3> key{i, j, dir};
            auto it = edge_point.find(key);
            if (it != edge_point.end()) return it->second;
            Vec2 a = node(i, j);
            Vec2 b = dir == 0 ? node(i + 1, j) : node(i, j + 1);
            double fa = vals[j * (nx + 1) + i];
            double fb = dir == 0 ? vals[j * (nx + 1) + i + 1] : vals[(j + 1) * (nx + 1) + i];
            // gradient blow-up guard: skip the polish where values are huge
            std::pair<Vec2, double> root;
            if (std::abs(fa) > 1e6 * fscale || std::abs(fb) > 1e6 * fscale) {
                double t = fa / (fa - fb);
                root = {Vec2(a + t * (b - a)), std::min(std::abs(fa), std::abs(fb))};
            } else {
                root = detail::edge_root(f, a, b, fa, fb, ftol);
            }
            points.push_back(root.first);
            point_resid.push_back(root.second);
            int idx = int(points.size()) - 1;
            edge_point[key] = idx;
            return idx;
        };

        // per-cell segments (point index pairs)
        std::vector<std::pair<int, int>> segments;
        int ambiguous = 0;
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                double v00 = vals[j * (nx + 1) + i];
                double v10 = vals[j * (nx + 1) + i + 1];
                double v01 = vals[(j + 1) * (nx + 1) + i];
                double v11 = vals[(j + 1) * (nx + 1) + i + 1];
                if (!std::isfinite(v00) || !std::isfinite(v10) || !std::isfinite(v01) ||
                    !std::isfinite(v11))
                    continue;
                int code = (v00 > 0 ? 1 : 0) | (v10 > 0 ? 2 : 0) | (v11 > 0 ? 4 : 0) |
                           (v01 > 0 ? 8 : 0);
                if (code == 0 || code == 15) continue;
                // edges: 0 bottom (i,j,H), 1 right (i+1,j,V), 2 top (i,j+1,H), 3 left (i,j,V)
                auto E = [&](int e) -> int {
                    switch (e) {
                        case 0: return crossing(i, j, 0);
                        case 1: return crossing(i + 1, j, 1);
                        case 2: return crossing(i, j + 1, 0);
                        default: return crossing(i, j, 1);
                    }
                };
                auto add = [&](int e1, int e2) { segments.push_back({E(e1), E(e2)}); };
                switch (code) {
                    case 1: case 14: add(3, 0); break;
                    case 2: case 13: add(0, 1); break;
                    case 3: case 12: add(3, 1); break;
                    case 4: case 11: add(1, 2); break;
                    case 6: case 9:  add(0, 2); break;
                    case 7: case 8:  add(2, 3); break;
                    case 5: case 10: {
                        ++ambiguous;
                        double vc;
                        try {
                            vc = f(Vec2(window.lo.x() + (i + 0.5) * hx,
                                        window.lo.y() + (j + 0.5) * hy));
                        } catch (const std::exception&) {
                            vc = 0;
                        }
                        bool center_pos = vc > 0;
                        if ((code == 5) == center_pos) {
                            add(0, 1);
                            add(2, 3);
                        } else {
                            add(3, 0);
                            add(1, 2);
                        }
                        break;
                    }
                    default: break;
                }
            }
        }

        if (ambiguous > 0 && attempt < max_refine) {
            res *= 2;
            continue;
        }

        // link segments into chains
        std::multimap<int, std::size_t> by_endpoint;
        for (std::size_t s = 0; s < segments.size(); ++s) {
            by_endpoint.insert({segments[s].first, s});
            by_endpoint.insert({segments[s].second, s});
        }
        std::vector<bool> used(segments.size(), false);
        auto take_next = [&](int pt, std::size_t exclude) -> std::ptrdiff_t {
            auto range = by_endpoint.equal_range(pt);
            for (auto it = range.first; it != range.second; ++it)
                if (!used[it->second] && it->second != exclude) return std::ptrdiff_t(it->second);
            return -1;
        };
        for (std::size_t s0 = 0; s0 < segments.size(); ++s0) {
            if (used[s0]) continue;
            used[s0] = true;
            std::vector<int> chain{segments[s0].first, segments[s0].second};
            // extend forward
            for (;;) {
                std::ptrdiff_t nxt = take_next(chain.back(), SIZE_MAX);
                if (nxt < 0) break;
                used[nxt] = true;
                const auto& sg = segments[nxt];
                chain.push_back(sg.first == chain.back() ? sg.second : sg.first);
                if (chain.back() == chain.front()) break;
            }
            bool chain_closed = chain.size() > 3 && chain.back() == chain.front();
            if (!chain_closed) {
                // extend backward
                for (;;) {
                    std::ptrdiff_t prv = take_next(chain.front(), SIZE_MAX);
                    if (prv < 0) break;
                    used[prv] = true;
                    const auto& sg = segments[prv];
                    chain.insert(chain.begin(), sg.first == chain.front() ? sg.second : sg.first);
                    if (chain.back() == chain.front()) {
                        chain_closed = chain.size() > 3;
                        break;
                    }
                }
            }
            PlaneCurve curve;
            std::size_t npts = chain.size() - (chain_closed ? 1 : 0);
            double resid = 0;
            for (std::size_t q = 0; q < npts; ++q) {
                curve.pts.push_back(points[chain[q]]);
                resid = std::max(resid, point_resid[chain[q]]);
            }
            curve.closed = chain_closed;
            if (chain_closed && curve.pts.size() >= 16) {
                curve.ensure_ccw();
                LevelSetReport rep;
                rep.curve = curve;
                rep.residual_max = resid;
                rep.bbox = curve.bbox();
                result.components.push_back(std::move(rep));
            } else {
                result.open_chains.push_back(std::move(curve));
            }
        }
        break;
    }
    if (result.components.empty()) {
        if (!result.open_chains.empty())
            throw TopologyError("trace_level_set: only open chains found (" +
                                std::to_string(result.open_chains.size()) +
                                " components hit the window boundary)");
        throw TopologyError("trace_level_set: no sign change inside window");
    }
    // largest component first
    std::sort(result.components.begin(), result.components.end(),
              [](const LevelSetReport& a, const LevelSetReport& b) {
                  return a.bbox.diag() > b.bbox.diag();
              });
    return result;
}

// ---------------------------------------------------------------------------
// Containment of one closed curve in another.
// ---------------------------------------------------------------------------
enum class ContainmentVerdict { inside, touching, violated };

struct ContainmentReport {
    ContainmentVerdict verdict = ContainmentVerdict::inside;
    std::vector<Vec2> touching_points;
    std::vector<Vec2> violated_points;
};

/// Every sample of `inner` must be inside-or-on `outer`; samples within
/// `band` of the outer curve count as touching.
inline ContainmentReport containment_check(const PlaneCurve& inner, const PlaneCurve& outer,
                                           double band = 1e-9) {
    ContainmentReport rep;
    for (const auto& p : inner.pts) {
        double d = outer.distance(p);
        if (d <= band) {
            rep.touching_points.push_back(p);
        } else if (!outer.contains(p)) {
            rep.violated_points.push_back(p);
        }
    }
    if (!rep.violated_points.empty())
        rep.verdict = ContainmentVerdict::violated;
    else if (!rep.touching_points.empty())
        rep.verdict = ContainmentVerdict::touching;
    else
        rep.verdict = ContainmentVerdict::inside;
    return rep;
}

}  // namespace ergolab
