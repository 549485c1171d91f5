#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "ergolab/eikonal.hpp"
#include "ergolab/families.hpp"
#include "ergolab/geometry.hpp"
#include "ergolab/metric.hpp"

namespace ergolab {

// ---------------------------------------------------------------------------
// Smooth building blocks.
// ---------------------------------------------------------------------------

/// Standard mollifier exp(-1/(1-s^2)) normalized to 1 at s = 0; identically
/// zero for |s| >= 1, with all derivatives vanishing at the support boundary.
inline double bump_profile(double s) {
    double s2 = s * s;
    if (s2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s2));
}

/// C-infinity step: 0 for x <= 0, 1 for x >= 1.
inline double smooth_step(double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    double f = std::exp(-1.0 / x);
    double g = std::exp(-1.0 / (1.0 - x));
    return f / (f + g);
}

// ---------------------------------------------------------------------------
// Velocity magnitude profile for prescribed-horizon metrics.
//
// mu(d) = 1 + s(d)/2 with s' = chi, chi == 1 on |d| <= w, so mu = 1 + d/2
// exactly in the tube around the surface; beyond the tube chi is cut off
// smoothly. On the outside the cutoff is followed by an algebraic tail whose
// amplitude is normalized so that s(-inf) = -2 exactly: mu then decays to 0
// like 1/|d|, giving a flat far field g = eta + O(1/|x|). On the inside s
// saturates, so mu plateaus at a value > 1.
// ---------------------------------------------------------------------------
class VelocityProfile {
  public:
    explicit VelocityProfile(double tube_width, double tail_length)
        : w_(tube_width), xi0_(0.5 * tube_width), L_(tail_length) {
        // band quadratures (fixed 512-panel Simpson; integrands are smooth)
        I1_ = simpson([this](double xi) { return cut(xi); }, 0.0, xi0_);
        double I2 = simpson([this](double xi) { return (1.0 - cut(xi)) * tail(xi); }, 0.0, xi0_) +
                    L_ * L_ / (L_ + xi0_);  // exact integral of the pure tail beyond xi0
        double target = 2.0 - w_;
        if (!(I1_ < target))
            throw GeometryError("VelocityProfile: tube too wide for a sub-unit far field");
        beta_ = (target - I1_) / I2;
        build_tables();
    }

    double tube_width() const { return w_; }

    /// mu(d); d is the oriented distance, positive on the |v| > 1 side.
    double mu(double d) const { return 1.0 + 0.5 * s(d); }

    double s(double d) const {
        if (std::abs(d) <= w_) return d;
        if (d > 0) {
            double xi = d - w_;
            if (xi >= xi0_) return w_ + I1_in_;
            return w_ + interp(in_table_, xi);
        }
        double xi = -d - w_;
        if (xi >= xi0_) return -2.0 + beta_ * L_ * L_ / (L_ + xi);
        return -w_ - interp(out_table_, xi);
    }

  private:
    double w_, xi0_, L_, beta_ = 0, I1_ = 0, I1_in_ = 0;
    static constexpr int kTable = 512;
    std::vector<double> in_table_, out_table_;  // cumulative integrals over [0, xi0]

    double cut(double xi) const { return 1.0 - smooth_step(xi / xi0_); }
    double tail(double xi) const { return L_ * L_ / ((L_ + xi) * (L_ + xi)); }
    double chi_in(double xi) const { return cut(xi); }
    double chi_out(double xi) const { return cut(xi) + (1.0 - cut(xi)) * beta_ * tail(xi); }

    template <class F>
    static double simpson(const F& f, double a, double b) {
        const int n = 2 * kTable;
        double h = (b - a) / n;
        double acc = f(a) + f(b);
        for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
        return acc * h / 3.0;
    }

    void build_tables() {
        in_table_.assign(kTable + 1, 0.0);
        out_table_.assign(kTable + 1, 0.0);
        double h = xi0_ / kTable;
        for (int i = 1; i <= kTable; ++i) {
            double a = (i - 1) * h, b = i * h, m = 0.5 * (a + b);
            in_table_[i] =
                in_table_[i - 1] + h / 6.0 * (chi_in(a) + 4.0 * chi_in(m) + chi_in(b));
            out_table_[i] =
                out_table_[i - 1] + h / 6.0 * (chi_out(a) + 4.0 * chi_out(m) + chi_out(b));
        }
        I1_in_ = in_table_[kTable];
    }

    double interp(const std::vector<double>& tab, double xi) const {
        double h = xi0_ / kTable;
        double t = xi / h;
        int i = std::min(int(t), kTable - 1);
        double u = t - i;
        return tab[i] + u * (tab[i + 1] - tab[i]);
    }
};

// ---------------------------------------------------------------------------
// Prescribed-horizon construction: given a smooth closed surface, produce a
// stationary flow-form metric for which the surface is simultaneously the
// ergosphere and a characteristic surface with the black-hole flux sign.
//
// Near the surface v = mu(d) * (outward unit normal) with mu = 1 + d/2 and d
// the inward-positive signed distance, so on the surface v is the unit
// normal and |grad a|^2 = a holds for a = mu^2. |v| > 1 just inside, < 1
// outside, decaying to zero in the far field.
// ---------------------------------------------------------------------------
struct HorizonMetric {
    StationaryMetric metric;
    std::function<PointN(const PointN&)> v;  // flow field (dim components)
    std::shared_ptr<EikonalField> eikonal;   // inside_greater field of the profile curve
    std::shared_ptr<VelocityProfile> profile;
    PlaneCurve surface;  // profile curve in the (rho,z) plane (dim=3: revolved)
    int dim = 2;
};

struct ConstructionError : MetricError {
    using MetricError::MetricError;
};

struct HorizonDesignOptions {
    double tube_frac = 0.2;   // tube width as a fraction of the curve inradius
    int resample = 1024;      // spline sampling of the prescribed curve
};

inline HorizonMetric build_horizon_metric(const PlaneCurve& surface, int dim = 2,
                                          const HorizonDesignOptions& opt = {}) {
    if (dim != 2 && dim != 3) throw ConstructionError("build_horizon_metric: dim must be 2 or 3");
    PlaneCurve base = surface;
    base.ensure_ccw();
    if (dim == 3 && !base.even_in_rho(1e-6 * base.scale()))
        throw ConstructionError("build_horizon_metric: a revolved surface needs a profile curve even in rho");
    double w = opt.tube_frac * base.inradius();
    if (!(w > 0) || !(w < 0.5))
        w = std::min(0.45, std::max(1e-3, w));
    auto eik = std::make_shared<EikonalField>(
        base.size() >= std::size_t(opt.resample)
            ? base
            : CurveSpline(base).resample(opt.resample),
        EikonalOrientation::inside_greater);
    auto prof = std::make_shared<VelocityProfile>(w, std::max(base.inradius(), 1.0));

    HorizonMetric out;
    out.eikonal = eik;
    out.profile = prof;
    out.surface = base;
    out.dim = dim;

    if (dim == 2) {
        out.v = [eik, prof](const PointN& p) {
            auto sd = eik->distance(Vec2(p[0], p[1]));
            Vec2 v = prof->mu(sd.d) * sd.grad;
            return point2(v.x(), v.y());
        };
        FlowForm f;
        f.dim = 2;
        f.v0_mode = FlowForm::V0Mode::unit_lapse;
        f.v = out.v;
        f.name = "horizon_design2d";
        out.metric = build_flow_metric(f);
    } else {
        out.v = [eik, prof](const PointN& p) {
            Eigen::Vector3d x(p[0], p[1], p[2]);
            auto sd = eik->distance3(x);
            Eigen::Vector3d v = prof->mu(sd.d) * sd.grad;
            return point3(v[0], v[1], v[2]);
        };
        FlowForm f;
        f.dim = 3;
        f.v0_mode = FlowForm::V0Mode::unit_lapse;
        f.v = out.v;
        f.name = "horizon_design3d";
        out.metric = build_flow_metric(f);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Axisymmetric prescribed-horizon metric of the xi + v v^T shape, used to
// generate 3+1 dimensional examples with distinct ergosphere and restricted
// ergosphere. v^0 is chosen so the product form stays Lorentzian everywhere:
//   v^0 = -sqrt(eps0^2 + (v^1)^2 + (v^2)^2 + rho^2 (v^3)^2)
// makes det(xi + v v^T) proportional to 1 + eps0^2.
// ---------------------------------------------------------------------------
inline FlowForm axisym_flow_horizon(const PlaneCurve& surface, double v3_amplitude,
                                    double eps0 = 0.3, const HorizonDesignOptions& opt = {}) {
    PlaneCurve base = surface;
    base.ensure_ccw();
    double w = opt.tube_frac * base.inradius();
    auto eik = std::make_shared<EikonalField>(CurveSpline(base).resample(opt.resample),
                                              EikonalOrientation::inside_greater);
    auto prof = std::make_shared<VelocityProfile>(w, std::max(base.inradius(), 1.0));

    auto v12 = [eik, prof](const PointN& p) {
        auto sd = eik->distance(Vec2(p[0], p[1]));
        // outward direction with inward-increasing magnitude (Kerr-like)
        Vec2 v = -prof->mu(sd.d) * sd.grad;
        return point2(v.x(), v.y());
    };
    auto v3 = [eik, v3_amplitude, w](const PointN& p) {
        auto sd = eik->distance(Vec2(p[0], p[1]));
        return v3_amplitude * bump_profile(sd.d / (6.0 * w));
    };
    FlowForm f;
    f.dim = 3;
    f.v0_mode = FlowForm::V0Mode::explicit4;
    f.name = "axisym_flow_horizon";
    f.v = v12;
    f.v3 = v3;
    f.v0 = [v12, v3, eps0](const PointN& p) {
        PointN vs = v12(p);
        double w3 = v3(p);
        return -std::sqrt(eps0 * eps0 + vs[0] * vs[0] + vs[1] * vs[1] + p[0] * p[0] * w3 * w3);
    };
    return f;
}

// ---------------------------------------------------------------------------
// Smooth families of metrics with prescribed horizon curves.
//
// Given a family eps -> psi_eps of closed curves with psi_0 the horizon of a
// base flow-form metric, define
//     v_eps = grad a_eps + d_eps * W,    W = (v_base - grad a_0) / d_0,
// where a_eps is the eikonal solution attached to psi_eps (a > 1 outside)
// and d_eps the matching oriented distance. On psi_eps the correction term
// vanishes, so the curve is characteristic and a restricted ergosphere; at
// eps = 0 the quotient cancels and the base metric is reproduced exactly.
// v^0 and v^3 are inherited from the base.
// ---------------------------------------------------------------------------
struct FamilyOptions {
    int resample = 2048;
    double blend_width = 0.0;   // 0: use 0.5 * inradius of psi_0
    double hadamard_eps = 1e-7; // |d_0| below which the quotient is displaced
};

struct FamilyError : MetricError {
    using MetricError::MetricError;
};

class HorizonFamily {
  public:
    HorizonFamily(std::function<PlaneCurve(double)> psi, const FlowForm& base,
                  const FamilyOptions& opt = {})
        : psi_(std::move(psi)), base_(base), opt_(opt) {
        if (base.v0_mode != FlowForm::V0Mode::explicit4)
            throw FamilyError("HorizonFamily: base must be an explicit4 flow form");
        PlaneCurve c0 = psi_(0.0);
        c0.ensure_ccw();
        scale_ = c0.scale();
        blend_ = opt_.blend_width > 0 ? opt_.blend_width : 0.5 * c0.inradius();
        eik0_ = std::make_shared<EikonalField>(CurveSpline(c0).resample(opt_.resample),
                                               EikonalOrientation::outside_greater);
    }

    FlowForm flow_at(double eps) const {
        auto eik_e = std::make_shared<EikonalField>(
            CurveSpline(psi_(eps)).resample(opt_.resample), EikonalOrientation::outside_greater);
        FlowForm f = base_;
        f.name = base_.name + "+family(eps=" + std::to_string(eps) + ")";
        auto base_v = base_.v;
        auto eik0 = eik0_;
        double blend = blend_;
        double had = opt_.hadamard_eps * scale_;
        f.v = [base_v, eik0, eik_e, blend, had](const PointN& p) {
            Vec2 x(p[0], p[1]);
            auto de = eik_e->distance(x);
            double m = 1.0 - smooth_step((std::abs(de.d) - 0.5 * blend) / (0.5 * blend));
            PointN vb = base_v(p);
            if (m <= 0.0) return vb;
            Vec2 grad_ae = (1.0 + 0.5 * de.d) * de.grad;
            // quotient field W at x (displaced off the base curve if needed)
            Vec2 xq = x;
            auto d0 = eik0->distance(x);
            if (std::abs(d0.d) < had) {
                double push = (d0.d >= 0 ? 1.0 : -1.0) * 100.0 * had;
                xq = x + push * d0.grad;
                d0 = eik0->distance(xq);
            }
            PointN vbq = base_v(point2(xq.x(), xq.y()));
            Vec2 grad_a0 = (1.0 + 0.5 * d0.d) * d0.grad;
            Vec2 W = (Vec2(vbq[0], vbq[1]) - grad_a0) / d0.d;
            Vec2 v_tube = grad_ae + de.d * W;
            Vec2 v = m * v_tube + (1.0 - m) * Vec2(vb[0], vb[1]);
            return point2(v.x(), v.y());
        };
        return f;
    }

    StationaryMetric metric_at(double eps) const { return build_flow_metric(flow_at(eps)); }

  private:
    std::function<PlaneCurve(double)> psi_;
    FlowForm base_;
    FamilyOptions opt_;
    std::shared_ptr<EikonalField> eik0_;
    double scale_ = 1.0;
    double blend_ = 0.5;
};

// ---------------------------------------------------------------------------
// Bump perturbation of a flow-form metric: rotate the (v^1, v^2) direction
// field by eps * bump inside a disk while keeping beta = |(v^1, v^2)| fixed.
// Delta1 = 1 - beta^2 is unchanged pointwise, but the characteristic
// condition on Delta1 = 0 acquires an O(eps) violation inside the support.
// Outside the support the metric is returned bit-for-bit unchanged.
// ---------------------------------------------------------------------------
struct BumpSpec {
    Vec2 center{0, 0};   // a point on (or near) Delta1 = 0
    double radius = 0.3;
    double epsilon = 0.05;
};

struct PolarDecompositionError : MetricError {
    using MetricError::MetricError;
};

inline FlowForm perturb_metric_bump(const FlowForm& g, const BumpSpec& spec) {
    if (g.v0_mode != FlowForm::V0Mode::explicit4)
        throw PolarDecompositionError("perturb_metric_bump: need an explicit4 flow form");
    // beta > 0 throughout the support is required for the polar angle field
    auto v_ref = g.v(point2(spec.center.x(), spec.center.y()));
    double beta_c = std::hypot(v_ref[0], v_ref[1]);
    if (beta_c < 1e-8)
        throw PolarDecompositionError("perturb_metric_bump: flow vanishes at the bump center");
    for (int k = 0; k < 16; ++k) {
        double th = 2.0 * M_PI * k / 16;
        PointN q = point2(spec.center.x() + 0.9 * spec.radius * std::cos(th),
                          spec.center.y() + 0.9 * spec.radius * std::sin(th));
        auto vq = g.v(q);
        if (std::hypot(vq[0], vq[1]) < 1e-8)
            throw PolarDecompositionError("perturb_metric_bump: flow vanishes inside the support");
    }

    FlowForm out = g;
    out.name = g.name + "+bump(eps=" + std::to_string(spec.epsilon) + ")";
    auto v_old = g.v;
    BumpSpec sp = spec;
    out.v = [v_old, sp](const PointN& p) {
        double rr = std::hypot(p[0] - sp.center.x(), p[1] - sp.center.y());
        if (rr >= sp.radius) return v_old(p);  // untouched outside the support
        PointN v = v_old(p);
        // rotating (v^1, v^2) by eps*bump keeps beta = |(v^1, v^2)| pointwise
        double dalpha = sp.epsilon * bump_profile(rr / sp.radius);
        double ca = std::cos(dalpha), sa = std::sin(dalpha);
        return point2(ca * v[0] - sa * v[1], sa * v[0] + ca * v[1]);
    };
    return out;
}

}  // namespace ergolab
