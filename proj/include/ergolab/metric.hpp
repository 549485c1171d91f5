#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "ergolab/geometry.hpp"

namespace ergolab {

/// Spatial point, up to 3 components (stack-allocated).
using PointN = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
/// Symmetric (n+1)x(n+1) metric matrix, up to 4x4 (stack-allocated).
using MetricMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

enum class Coords { cartesian, cylindrical };

struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularMetricError : MetricError {
    double det;
    explicit SingularMetricError(double d)
        : MetricError("metric matrix is numerically singular, det = " + std::to_string(d)),
          det(d) {}
};
struct HyperbolicityError : MetricError {
    using MetricError::MetricError;
};

inline PointN point2(double a, double b) {
    PointN p(2);
    p << a, b;
    return p;
}
inline PointN point3(double a, double b, double c) {
    PointN p(3);
    p << a, b, c;
    return p;
}

/// Invert a symmetric (n+1)x(n+1) matrix; result symmetrized.
inline MetricMatrix invert_metric(const MetricMatrix& M) {
    const int n = int(M.rows());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    double det = lu.determinant();
    if (std::abs(det) < 1e-14) throw SingularMetricError(det);
    MetricMatrix inv = lu.inverse();
    inv = 0.5 * (inv + inv.transpose()).eval();
    double resid = (M * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(resid < 1e-8 * std::max(1.0, M.cwiseAbs().maxCoeff()))) throw SingularMetricError(det);
    return inv;
}

enum class SignatureClass { lorentzian, degenerate, invalid };

inline SignatureClass signature_of(const MetricMatrix& M, double degeneracy_cutoff = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    const auto& ev = es.eigenvalues();
    double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    int pos = 0, neg = 0;
    for (int i = 0; i < ev.size(); ++i) {
        if (std::abs(ev[i]) < degeneracy_cutoff * scale) return SignatureClass::degenerate;
        (ev[i] > 0 ? pos : neg)++;
    }
    if (pos == 1 && neg == int(ev.size()) - 1) return SignatureClass::lorentzian;
    return SignatureClass::invalid;
}

// ---------------------------------------------------------------------------
// StationaryMetric: an inverse metric tensor field g^{jk}(x), (n+1)x(n+1),
// time-independent, with g^{00} > 0 and Lorentz signature (1,-1,...,-1).
// Cylindrical axisymmetric metrics are functions of (rho, z) only and carry
// the phi block; their evaluation arity is 2 while dim is 3.
// Metrics are immutable closures: safe to evaluate concurrently.
// ---------------------------------------------------------------------------
class StationaryMetric {
  public:
    int dim = 3;            // spatial dimension n
    Coords coords = Coords::cartesian;
    std::string name;
    std::function<MetricMatrix(const PointN&)> inv;

    StationaryMetric() = default;
    StationaryMetric(int n, Coords c, std::string nm, std::function<MetricMatrix(const PointN&)> f)
        : dim(n), coords(c), name(std::move(nm)), inv(std::move(f)) {}

    /// Number of coordinates a point carries (2 for axisymmetric metrics).
    int arity() const { return coords == Coords::cylindrical ? 2 : dim; }

    MetricMatrix inv_at(const PointN& p) const { return inv(p); }
    MetricMatrix inv_at(const Vec2& p) const { return inv(point2(p.x(), p.y())); }

    MetricMatrix cov_at(const PointN& p) const { return invert_metric(inv(p)); }
    MetricMatrix cov_at(const Vec2& p) const { return invert_metric(inv_at(p)); }

    double g00(const Vec2& p) const { return inv_at(p)(0, 0); }

    /// The 2x2 (rho,z) (or (x,y)) block of the inverse metric.
    Eigen::Matrix2d block2(const Vec2& p) const {
        MetricMatrix M = inv_at(p);
        Eigen::Matrix2d B;
        B << M(1, 1), M(1, 2), M(2, 1), M(2, 2);
        return B;
    }

    /// (g^{01}, g^{02}) at a 2-coordinate point.
    Vec2 shift2(const Vec2& p) const {
        MetricMatrix M = inv_at(p);
        return Vec2(M(0, 1), M(0, 2));
    }

    /// sqrt(|g|) = 1/sqrt(|det g^{jk}|); in cylindrical coordinates this
    /// carries the rho Jacobian of the volume element.
    double weight(const PointN& p) const {
        double det = inv_at(p).determinant();
        if (std::abs(det) < 1e-300) throw SingularMetricError(det);
        return 1.0 / std::sqrt(std::abs(det));
    }
    double weight(const Vec2& p) const { return weight(point2(p.x(), p.y())); }

    SignatureClass signature_at(const PointN& p) const { return signature_of(inv_at(p)); }
    SignatureClass signature_at(const Vec2& p) const { return signature_of(inv_at(p)); }
};

/// Flip the time orientation: g^{0j} -> -g^{0j} for j >= 1. Swaps the black-
/// and white-hole flux conditions while leaving characteristics unchanged.
inline StationaryMetric time_reversed(const StationaryMetric& g) {
    auto f = g.inv;
    return StationaryMetric(g.dim, g.coords, g.name + "(time-reversed)",
                            [f](const PointN& p) {
                                MetricMatrix M = f(p);
                                for (int j = 1; j < M.rows(); ++j) {
                                    M(0, j) = -M(0, j);
                                    M(j, 0) = -M(j, 0);
                                }
                                return M;
                            });
}

inline StationaryMetric minkowski(int dim = 3, Coords coords = Coords::cartesian) {
    return StationaryMetric(dim, coords, "minkowski", [dim, coords](const PointN& p) {
        const int n = dim + 1;
        MetricMatrix M = MetricMatrix::Zero(n, n);
        M(0, 0) = 1;
        for (int j = 1; j < n; ++j) M(j, j) = -1;
        if (coords == Coords::cylindrical) {
            double rho = p[0];
            M(n - 1, n - 1) = -1.0 / (rho * rho);
        }
        return M;
    });
}

}  // namespace ergolab
