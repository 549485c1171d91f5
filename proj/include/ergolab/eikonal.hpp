#pragma once

#include <cmath>
#include <memory>

#include "ergolab/geometry.hpp"
#include "ergolab/metric.hpp"

namespace ergolab {

struct MedialAmbiguityError : GeometryError {
    using GeometryError::GeometryError;
};

/// Which side of the base curve carries a > 1.
enum class EikonalOrientation { inside_greater, outside_greater };

// ---------------------------------------------------------------------------
// Solution of |grad a|^2 = a with a = 1 on a prescribed closed curve.
//
// Substituting b = 2 sqrt(a) gives |grad b|^2 = 1 with b = 2 on the curve,
// whose solution is b = 2 + d for the signed distance d (positive on the
// chosen side). Hence the closed form
//     a = (1 + d/2)^2,      grad a = (1 + d/2) grad d,
// which satisfies |grad a|^2 - a = 0 identically while |grad d| = 1, i.e.
// everywhere inside the medial axis. The signed distance is computed by
// Newton projection onto a periodic cubic spline through the curve samples.
// ---------------------------------------------------------------------------
class EikonalField {
  public:
    EikonalField(const PlaneCurve& base, EikonalOrientation orientation)
        : spline_(std::make_shared<CurveSpline>(base)), orientation_(orientation) {}

    struct Value {
        double a;
        Vec2 grad;
        double d;      // oriented distance, positive where a > 1
        Vec2 foot;
    };

    /// Oriented signed distance and its (unit) gradient; valid wherever the
    /// closest-point projection is, with no focal restriction.
    struct Distance {
        double d;
        Vec2 grad;
        Vec2 foot;
    };

    Distance distance(const Vec2& p) const {
        auto sd = spline_->signed_distance(p);  // positive inside (CCW curve)
        if (orientation_ == EikonalOrientation::outside_greater)
            return {-sd.d, -sd.grad, sd.proj.foot};
        return {sd.d, sd.grad, sd.proj.foot};
    }

    Value eval(const Vec2& p) const {
        Distance sd = distance(p);
        double f = 1.0 + 0.5 * sd.d;
        if (f <= 0.01)
            throw MedialAmbiguityError(
                "eikonal field evaluated at or beyond the focal distance d = -2");
        return {f * f, f * sd.grad, sd.d, sd.foot};
    }

    /// Value for a point in R^3 against the surface of revolution of the base
    /// curve about the z-axis (the curve lives in the (rho,z) half-plane).
    struct Value3 {
        double a;
        Eigen::Vector3d grad;
        double d;
    };

    Value3 eval3(const Eigen::Vector3d& x) const {
        double rho = std::hypot(x[0], x[1]);
        Value v = eval(Vec2(rho, x[2]));
        Eigen::Vector3d g;
        if (rho > 1e-14) {
            g[0] = v.grad.x() * x[0] / rho;
            g[1] = v.grad.x() * x[1] / rho;
        } else {
            g[0] = g[1] = 0.0;  // on the axis the rho-component vanishes for even curves
        }
        g[2] = v.grad.y();
        return {v.a, g, v.d};
    }

    struct Distance3 {
        double d;
        Eigen::Vector3d grad;
    };

    Distance3 distance3(const Eigen::Vector3d& x) const {
        double rho = std::hypot(x[0], x[1]);
        Distance sd = distance(Vec2(rho, x[2]));
        Eigen::Vector3d g;
        if (rho > 1e-14) {
            g[0] = sd.grad.x() * x[0] / rho;
            g[1] = sd.grad.x() * x[1] / rho;
        } else {
            g[0] = g[1] = 0.0;
        }
        g[2] = sd.grad.y();
        return {sd.d, g};
    }

    const CurveSpline& spline() const { return *spline_; }
    EikonalOrientation orientation() const { return orientation_; }

  private:
    std::shared_ptr<const CurveSpline> spline_;
    EikonalOrientation orientation_;
};

/// One-shot evaluation: (a, grad a) at p for the given base curve.
inline std::pair<double, Vec2> eikonal_solution(const PlaneCurve& curve, const Vec2& p,
                                                EikonalOrientation orientation) {
    EikonalField f(curve, orientation);
    auto v = f.eval(p);
    return {v.a, v.grad};
}

}  // namespace ergolab
