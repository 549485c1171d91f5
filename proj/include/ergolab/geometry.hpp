#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergolab {

using Vec2 = Eigen::Vector2d;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Rotate by +90 degrees (counterclockwise).
inline Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

/// Rotate by -90 degrees; for a CCW curve this turns the tangent into the outward normal.
inline Vec2 rot_minus90(const Vec2& v) { return Vec2(v.y(), -v.x()); }

struct Bbox {
    Vec2 lo{1e300, 1e300};
    Vec2 hi{-1e300, -1e300};
    void expand(const Vec2& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    double diag() const { return (hi - lo).norm(); }
    bool contains(const Vec2& p) const {
        return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
    }
};

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// PlaneCurve: a sampled curve in the (rho, z) half-plane (or the full plane
// for curves crossing the axis). Closed curves are stored without repeating
// the first point.
// ---------------------------------------------------------------------------
class PlaneCurve {
  public:
    std::vector<Vec2> pts;
    bool closed = true;
    /// Outward unit normals, same length as pts when present. Factories for
    /// analytic shapes fill these; traced curves leave them empty and callers
    /// fall back to spline normals.
    std::vector<Vec2> normals;

    PlaneCurve() = default;
    explicit PlaneCurve(std::vector<Vec2> p, bool c = true) : pts(std::move(p)), closed(c) {}

    std::size_t size() const { return pts.size(); }

    double length() const {
        double L = 0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) L += (pts[i + 1] - pts[i]).norm();
        if (closed && pts.size() > 1) L += (pts.front() - pts.back()).norm();
        return L;
    }

    /// Arc-length fractions in [0,1) for each sample.
    std::vector<double> arc_fractions() const {
        std::vector<double> s(pts.size(), 0.0);
        double L = 0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            L += (pts[i] - pts[i - 1]).norm();
            s[i] = L;
        }
        double total = L + (closed && pts.size() > 1 ? (pts.front() - pts.back()).norm() : 0.0);
        if (total > 0)
            for (auto& v : s) v /= total;
        return s;
    }

    double signed_area() const {
        double A = 0;
        const std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& p = pts[i];
            const Vec2& q = pts[(i + 1) % n];
            A += cross2(p, q);
        }
        return 0.5 * A;
    }

    bool is_ccw() const { return signed_area() > 0; }

    void ensure_ccw() {
        if (!is_ccw()) {
            std::reverse(pts.begin(), pts.end());
            if (!normals.empty()) std::reverse(normals.begin(), normals.end());
        }
    }

    Bbox bbox() const {
        Bbox b;
        for (const auto& p : pts) b.expand(p);
        return b;
    }

    Vec2 centroid() const {
        Vec2 c(0, 0);
        for (const auto& p : pts) c += p;
        return c / double(pts.size());
    }

    /// Smallest distance from the centroid to the curve samples; a cheap
    /// proxy for the inradius of star-shaped curves.
    double inradius() const {
        Vec2 c = centroid();
        double r = 1e300;
        for (const auto& p : pts) r = std::min(r, (p - c).norm());
        return r;
    }

    double scale() const { return std::max(bbox().diag(), 1e-30); }

    /// Even-odd point-in-polygon test (closed curves).
    bool contains(const Vec2& p) const {
        bool in = false;
        const std::size_t n = pts.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Vec2& a = pts[i];
            const Vec2& b = pts[j];
            if ((a.y() > p.y()) != (b.y() > p.y())) {
                double x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
                if (p.x() < x) in = !in;
            }
        }
        return in;
    }

    /// Distance to the closed polyline.
    double distance(const Vec2& p) const {
        double d2 = 1e300;
        const std::size_t n = pts.size();
        const std::size_t m = closed ? n : n - 1;
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2& a = pts[i];
            const Vec2& b = pts[(i + 1) % n];
            Vec2 ab = b - a;
            double t = ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            d2 = std::min(d2, (p - (a + t * ab)).squaredNorm());
        }
        return std::sqrt(d2);
    }

    /// Point at arc-length fraction s in [0,1), linear interpolation.
    Vec2 point_at(double s) const {
        const std::size_t n = pts.size();
        double L = length();
        double target = (s - std::floor(s)) * L;
        double acc = 0;
        const std::size_t m = closed ? n : n - 1;
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2& a = pts[i];
            const Vec2& b = pts[(i + 1) % n];
            double seg = (b - a).norm();
            if (acc + seg >= target || i + 1 == m) {
                double t = seg > 0 ? (target - acc) / seg : 0.0;
                return a + t * (b - a);
            }
            acc += seg;
        }
        return pts.back();
    }

    /// Mirror symmetry under rho -> -rho, checked sample-against-curve.
    bool even_in_rho(double tol) const {
        for (const auto& p : pts) {
            if (distance(Vec2(-p.x(), p.y())) > tol) return false;
        }
        return true;
    }

    /// No two non-adjacent segments intersect.
    bool is_simple() const {
        const std::size_t n = pts.size();
        if (n < 4) return true;
        auto seg_intersect = [](const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
            double d1 = cross2(d - c, a - c);
            double d2 = cross2(d - c, b - c);
            double d3 = cross2(b - a, c - a);
            double d4 = cross2(b - a, d - a);
            return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
        };
        const std::size_t m = closed ? n : n - 1;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 2; j < m; ++j) {
                if (i == 0 && j == m - 1 && closed) continue;
                if (seg_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) return false;
            }
        }
        return true;
    }
};

inline PlaneCurve make_circle(const Vec2& center, double R, int n = 256) {
    PlaneCurve c;
    c.pts.reserve(n);
    c.normals.reserve(n);
    for (int i = 0; i < n; ++i) {
        double th = 2.0 * M_PI * i / n;
        Vec2 dir(std::cos(th), std::sin(th));
        c.pts.push_back(center + R * dir);
        c.normals.push_back(dir);
    }
    return c;
}

/// Axis-aligned ellipse rho^2/a^2 + z^2/b^2 = 1 (a along rho, b along z).
inline PlaneCurve make_ellipse(double a, double b, int n = 256) {
    PlaneCurve c;
    c.pts.reserve(n);
    c.normals.reserve(n);
    for (int i = 0; i < n; ++i) {
        double th = 2.0 * M_PI * i / n;
        c.pts.emplace_back(a * std::cos(th), b * std::sin(th));
        Vec2 nrm(b * std::cos(th), a * std::sin(th));
        c.normals.push_back(nrm.normalized());
    }
    return c;
}

/// Star-shaped curve r(th) = R (1 + sum_k coeffs[k] cos((k+2) th)), even in rho
/// by construction (cosine harmonics only, measured from the z-axis).
inline PlaneCurve make_fourier_curve(double R, const std::vector<double>& coeffs, int n = 512) {
    PlaneCurve c;
    c.pts.reserve(n);
    c.normals.reserve(n);
    for (int i = 0; i < n; ++i) {
        double th = 2.0 * M_PI * i / n;
        double r = 1.0, dr = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            double m = double(k + 2);
            r += coeffs[k] * std::cos(m * th);
            dr += -coeffs[k] * m * std::sin(m * th);
        }
        r *= R;
        dr *= R;
        // polar frame: position r*(sin th, cos th), theta measured from +z
        Vec2 e_r(std::sin(th), std::cos(th));
        Vec2 e_t(std::cos(th), -std::sin(th));
        c.pts.push_back(r * e_r);
        Vec2 tangent = dr * e_r + r * e_t;
        c.normals.push_back(rot90(tangent).normalized());
    }
    // orientation: theta runs clockwise in (rho,z) with this frame, fix below
    c.ensure_ccw();
    return c;
}

/// Symmetric Hausdorff distance between two polylines (closed).
inline double hausdorff_distance(const PlaneCurve& A, const PlaneCurve& B) {
    auto directed = [](const PlaneCurve& X, const PlaneCurve& Y) {
        double  h = 0;
        for (const auto& p : X.pts) h = std::max(h, Y.distance(p));
        return h;
    };
    return std::max(directed(A, B), directed(B, A));
}

// ---------------------------------------------------------------------------
// Polygon clipping (Sutherland-Hodgman against an axis-aligned rectangle),
// used for exact cut-cell area weights.
// ---------------------------------------------------------------------------
namespace detail {
inline std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly,
                                        const std::function<double(const Vec2&)>& inside) {
    std::vector<Vec2> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        double da = inside(a), db = inside(b);
        if (da >= 0) out.push_back(a);
        if ((da >= 0) != (db >= 0)) {
            double t = da / (da - db);
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}
}  // namespace detail

/// Area of polygon ∩ [x0,x1]x[y0,y1].
inline double polygon_rect_intersection_area(const std::vector<Vec2>& poly, double x0, double x1,
                                             double y0, double y1) {
    std::vector<Vec2> p = poly;
    p = detail::clip_halfplane(p, [&](const Vec2& v) { return v.x() - x0; });
    if (p.empty()) return 0;
    p = detail::clip_halfplane(p, [&](const Vec2& v) { return x1 - v.x(); });
    if (p.empty()) return 0;
    p = detail::clip_halfplane(p, [&](const Vec2& v) { return v.y() - y0; });
    if (p.empty()) return 0;
    p = detail::clip_halfplane(p, [&](const Vec2& v) { return y1 - v.y(); });
    if (p.empty()) return 0;
    double A = 0;
    for (std::size_t i = 0; i < p.size(); ++i) A += cross2(p[i], p[(i + 1) % p.size()]);
    return std::abs(0.5 * A);
}

// ---------------------------------------------------------------------------
// Periodic cubic spline through the samples of a closed PlaneCurve.
// Provides smooth evaluation, tangents, and Newton-polished closest-point
// projection, which is what the signed-distance machinery is built on.
// ---------------------------------------------------------------------------
class CurveSpline {
  public:
    explicit CurveSpline(const PlaneCurve& curve) {
        if (curve.pts.size() < 4) throw GeometryError("CurveSpline: need at least 4 points");
        if (!curve.closed) throw GeometryError("CurveSpline: curve must be closed");
        PlaneCurve c = curve;
        c.ensure_ccw();
        pts_ = c.pts;
        n_ = pts_.size();
        // chord-length parametrization
        t_.resize(n_ + 1);
        t_[0] = 0;
        for (std::size_t i = 0; i < n_; ++i)
            t_[i + 1] = t_[i] + (pts_[(i + 1) % n_] - pts_[i]).norm();
        total_ = t_[n_];
        if (total_ <= 0) throw GeometryError("CurveSpline: degenerate curve");
        solve_periodic(0);
        solve_periodic(1);
    }

    double period() const { return total_; }
    std::size_t size() const { return n_; }

    Vec2 eval(double s) const {
        auto [i, u, h] = locate(s);
        double a = (1 - u), b = u;
        Vec2 P0 = pts_[i], P1 = pts_[(i + 1) % n_];
        Vec2 M0 = m_[i], M1 = m_[(i + 1) % n_];
        return a * P0 + b * P1 +
               (h * h / 6.0) * ((a * a * a - a) * M0 + (b * b * b - b) * M1);
    }

    Vec2 deriv(double s) const {
        auto [i, u, h] = locate(s);
        double a = (1 - u), b = u;
        Vec2 P0 = pts_[i], P1 = pts_[(i + 1) % n_];
        Vec2 M0 = m_[i], M1 = m_[(i + 1) % n_];
        return (P1 - P0) / h + (h / 6.0) * ((3 * b * b - 1) * M1 - (3 * a * a - 1) * M0);
    }

    Vec2 second(double s) const {
        auto [i, u, h] = locate(s);
        (void)h;
        return (1 - u) * m_[i] + u * m_[(i + 1) % n_];
    }

    Vec2 unit_tangent(double s) const { return deriv(s).normalized(); }

    struct Projection {
        double s;       // parameter of the foot point
        Vec2 foot;
        double dist;    // unsigned distance
        Vec2 tangent;   // unit tangent at the foot
    };

    /// Closest point on the spline. Coarse scan over knots, Newton polish.
    Projection project(const Vec2& p) const {
        // coarse candidates: best three knots by distance
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i) cand.push_back({(pts_[i] - p).squaredNorm(), i});
        std::partial_sort(cand.begin(), cand.begin() + std::min<std::size_t>(3, n_), cand.end());
        Projection best{0, pts_[0], 1e300, Vec2(1, 0)};
        for (std::size_t k = 0; k < std::min<std::size_t>(3, n_); ++k) {
            std::size_t i = cand[k].second;
            double s = refine(p, t_[i], t_[(i == 0 ? n_ : i) - 1], t_[i + 1]);
            Vec2 g = eval(s);
            double d = (g - p).norm();
            if (d < best.dist) best = {wrap(s), g, d, unit_tangent(s)};
        }
        return best;
    }

    /// Signed distance, positive inside the (CCW) curve. grad is the gradient
    /// of the signed distance, i.e. the inward-pointing unit vector field.
    struct SignedDistance {
        double d;
        Vec2 grad;
        Projection proj;
    };

    SignedDistance signed_distance(const Vec2& p) const {
        Projection pr = project(p);
        Vec2 inward = rot90(pr.tangent);  // CCW curve: +90 rotation points inside
        if (pr.dist < 1e-12 * total_) {
            return {0.0, inward, pr};
        }
        Vec2 dir = (p - pr.foot) / pr.dist;
        double sgn = dir.dot(inward) >= 0 ? 1.0 : -1.0;
        return {sgn * pr.dist, sgn * dir, pr};
    }

    /// Resample to n points uniformly in the spline parameter.
    PlaneCurve resample(int n) const {
        PlaneCurve c;
        c.pts.reserve(n);
        for (int i = 0; i < n; ++i) {
            double s = total_ * i / n;
            c.pts.push_back(eval(s));
        }
        return c;
    }

  private:
    std::vector<Vec2> pts_;
    std::vector<double> t_;
    std::vector<Vec2> m_;  // second derivatives at knots
    std::size_t n_ = 0;
    double total_ = 0;

    /// Cyclic tridiagonal solve (Sherman-Morrison) for the second
    /// derivatives of the periodic spline, one coordinate at a time.
    void solve_periodic(int comp) {
        const std::size_t n = n_;
        if (m_.empty()) m_.assign(n, Vec2(0, 0));
        std::vector<double> a(n), b(n), c(n), d(n);
        auto h = [&](std::size_t i) { return t_[i + 1] - t_[i]; };
        auto y = [&](std::size_t i) { return pts_[i % n][comp]; };
        for (std::size_t i = 0; i < n; ++i) {
            double hm = h((i + n - 1) % n), hi = h(i);
            a[i] = hm / 6.0;
            b[i] = (hm + hi) / 3.0;
            c[i] = hi / 6.0;
            d[i] = (y(i + 1) - y(i)) / hi - (y(i) - y((i + n - 1) % n)) / hm;
        }
        // Sherman-Morrison: split off the corner entries a[0] and c[n-1]
        std::vector<double> bb = b, u(n, 0.0);
        double gamma = -b[0];
        bb[0] = b[0] - gamma;
        bb[n - 1] = b[n - 1] - a[0] * c[n - 1] / gamma;
        u[0] = gamma;
        u[n - 1] = c[n - 1];
        auto thomas = [&](std::vector<double> rhs) {
            std::vector<double> cp(n), x(n);
            cp[0] = c[0] / bb[0];
            rhs[0] = rhs[0] / bb[0];
            for (std::size_t i = 1; i < n; ++i) {
                double mlt = bb[i] - a[i] * cp[i - 1];
                cp[i] = c[i] / mlt;
                rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) / mlt;
            }
            x[n - 1] = rhs[n - 1];
            for (std::size_t i = n - 1; i-- > 0;) x[i] = rhs[i] - cp[i] * x[i + 1];
            return x;
        };
        std::vector<double> x1 = thomas(d);
        std::vector<double> x2 = thomas(u);
        double vx1 = x1[0] + a[0] / gamma * x1[n - 1];
        double vx2 = 1.0 + x2[0] + a[0] / gamma * x2[n - 1];
        double fac = vx1 / vx2;
        for (std::size_t i = 0; i < n; ++i) m_[i][comp] = x1[i] - fac * x2[i];
    }

    double wrap(double s) const {
        s = std::fmod(s, total_);
        return s < 0 ? s + total_ : s;
    }

    std::tuple<std::size_t, double, double> locate(double s) const {
        s = wrap(s);
        auto it = std::upper_bound(t_.begin(), t_.end(), s);
        std::size_t i = std::min<std::size_t>(n_ - 1, std::max<std::ptrdiff_t>(0, it - t_.begin() - 1));
        double h = t_[i + 1] - t_[i];
        double u = (s - t_[i]) / h;
        return {i, u, h};
    }

    /// Newton iteration to solve (gamma(s)-p).gamma'(s) = 0 near s0,
    /// limited to [lo, hi] on the unwrapped parameter axis.
    double refine(const Vec2& p, double s0, double lo, double hi) const {
        if (hi < lo) hi += total_;
        if (s0 < lo) s0 += total_;
        double s = s0;
        for (int it = 0; it < 60; ++it) {
            Vec2 g = eval(s), d1 = deriv(s), d2 = second(s);
            double f = (g - p).dot(d1);
            double fp = d1.squaredNorm() + (g - p).dot(d2);
            if (std::abs(f) < 1e-15 * (1.0 + p.norm()) * (1.0 + d1.norm())) break;
            double step = (fp > 1e-30) ? f / fp : f / d1.squaredNorm();
            s -= step;
            s = std::clamp(s, lo, hi);
            if (std::abs(step) < 1e-16 * total_) break;
        }
        return s;
    }
};

}  // namespace ergolab
