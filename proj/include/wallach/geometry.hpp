#pragma once

#include <utility>

#include "wallach/core.hpp"

namespace wallach {

// Scale-aware boundary tolerance: gamma_i is homogeneous of degree 2, so a
// fixed absolute tolerance misclassifies large or small points.
inline constexpr double kBoundaryEps = 1e-9;

inline double boundary_tolerance(const Point3& x, double eps = kBoundaryEps) {
    const double s = x.sum();
    return eps * s * s;
}

namespace detail {

// {i,j,k} = {1,2,3} as zero-based (i-1, j-1, k-1), cyclic.
inline void cone_slots(int i, int& ii, int& jj, int& kk) {
    require(i >= 1 && i <= 3, "cone index must be 1, 2 or 3");
    ii = i - 1;
    jj = i % 3;
    kk = (i + 1) % 3;
}

inline double gamma_raw(int i, const std::array<double, 3>& x) {
    int ii, jj, kk;
    cone_slots(i, ii, jj, kk);
    const double d = x[jj] - x[kk];
    return d * d + 2.0 * x[ii] * (x[jj] + x[kk]) - 3.0 * x[ii] * x[ii];
}

}  // namespace detail

// gamma_i = (x_j - x_k)^2 + 2 x_i (x_j + x_k) - 3 x_i^2; S is cut out by
// gamma_1, gamma_2, gamma_3 > 0 (minus the diagonal ray).
inline double gamma(int i, const Point3& x) { return detail::gamma_raw(i, x.array()); }

inline Vec3 grad_gamma(int i, const Point3& x) {
    int ii, jj, kk;
    detail::cone_slots(i, ii, jj, kk);
    const auto xa = x.array();
    std::array<double, 3> g{};
    g[ii] = 2.0 * (xa[jj] + xa[kk]) - 6.0 * xa[ii];
    g[jj] = 2.0 * (xa[jj] - xa[kk]) + 2.0 * xa[ii];
    g[kk] = 2.0 * (xa[kk] - xa[jj]) + 2.0 * xa[ii];
    return {g[0], g[1], g[2]};
}

// The two roots of gamma_i = 0 viewed as a quadratic in x_i. Psi <= 0 for
// positive arguments, so gamma_i > 0 iff 0 < x_i < Phi(x_j, x_k).
inline std::pair<double, double> psi_phi(double xj, double xk) {
    require(xj > 0.0 && xk > 0.0, "psi_phi: arguments must be positive");
    const double r = 2.0 * std::sqrt(xj * xj - xj * xk + xk * xk);
    return {(xj + xk - r) / 3.0, (xj + xk + r) / 3.0};
}

struct RegionClass {
    enum class Kind { Interior, Boundary, Exterior };
    Kind kind = Kind::Interior;
    int cone = 0;  // boundary cone index when kind == Boundary, else 0
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;
    bool on_diagonal = false;

    bool interior() const { return kind == Kind::Interior; }
    bool exterior() const { return kind == Kind::Exterior; }
    bool boundary() const { return kind == Kind::Boundary; }
};

// Classify x against S. The diagonal ray (removed from S by definition) is
// reported Interior with on_diagonal set; the flow fixes it pointwise and
// experiments exclude it.
inline RegionClass classify_region(const Point3& x, double tol) {
    require(tol >= 0.0, "classify_region: tol must be non-negative");
    RegionClass r;
    r.g1 = gamma(1, x);
    r.g2 = gamma(2, x);
    r.g3 = gamma(3, x);
    const double scale = x.sum();
    r.on_diagonal = std::fabs(x.x1 - x.x2) <= 1e-12 * scale &&
                    std::fabs(x.x2 - x.x3) <= 1e-12 * scale &&
                    std::fabs(x.x1 - x.x3) <= 1e-12 * scale;
    const std::array<double, 3> g{r.g1, r.g2, r.g3};
    for (int i = 0; i < 3; ++i) {
        if (g[i] < -tol) {
            r.kind = RegionClass::Kind::Exterior;
            r.cone = 0;
            return r;
        }
    }
    for (int i = 0; i < 3; ++i) {
        if (std::fabs(g[i]) <= tol) {
            r.kind = RegionClass::Kind::Boundary;
            r.cone = i + 1;
            return r;
        }
    }
    r.kind = RegionClass::Kind::Interior;
    return r;
}

inline RegionClass classify_region(const Point3& x) {
    return classify_region(x, boundary_tolerance(x));
}

// Chart of the cone Gamma_i: x_i = nu t, x_j = mu t, x_k = t with
// mu = 1 - nu + 2 sqrt(nu(nu-1)) > 0 for nu > 1.
struct ConeChart {
    int i;
    double nu;
    double t;
    double mu;

    ConeChart(int i_, double nu_, double t_) : i(i_), nu(nu_), t(t_) {
        require(i >= 1 && i <= 3, "ConeChart: cone index must be 1, 2 or 3");
        require(nu > 1.0, "ConeChart: nu must exceed 1");
        require(t > 0.0, "ConeChart: t must be positive");
        mu = 1.0 - nu + 2.0 * std::sqrt(nu * (nu - 1.0));
        require(mu > 0.0, "ConeChart: mu must be positive");
    }
};

inline Point3 cone_point(const ConeChart& chart) {
    int ii, jj, kk;
    detail::cone_slots(chart.i, ii, jj, kk);
    std::array<double, 3> x{};
    x[ii] = chart.nu * chart.t;
    x[jj] = chart.mu * chart.t;
    x[kk] = chart.t;
    return Point3(x);
}

// Invariant curve I_i: x_i = c p^-2, x_j = x_k = p. Lies on the surface
// x1 x2 x3 = c for every p > 0.
inline Point3 invariant_curve_point(int i, double c, double p) {
    require(c > 0.0, "invariant_curve_point: c must be positive");
    require(p > 0.0, "invariant_curve_point: p must be positive");
    int ii, jj, kk;
    detail::cone_slots(i, ii, jj, kk);
    std::array<double, 3> x{};
    x[ii] = c / (p * p);
    x[jj] = p;
    x[kk] = p;
    return Point3(x);
}

// I_i meets its cone Gamma_i at the unique parameter p = cbrt(6c)/2.
inline Point3 curve_cone_intersection(int i, double c) {
    require(c > 0.0, "curve_cone_intersection: c must be positive");
    const double t0 = std::cbrt(6.0 * c) / 2.0;
    return invariant_curve_point(i, c, t0);
}

// Planar sextics l_i cutting out the curves s_i (projections of the cone
// sections Sigma -- Gamma_i onto the (x1,x2) plane). Signs are normalized so
// that l_i(x1,x2) = (x1 x2)^2 gamma_i(x1, x2, c/(x1 x2)) identically; l_i is
// then positive inside the domain D for every i.
inline double planar_l(int i, double c, double x1, double x2) {
    require(i >= 1 && i <= 3, "planar_l: curve index must be 1, 2 or 3");
    require(c > 0.0 && x1 > 0.0 && x2 > 0.0, "planar_l: arguments must be positive");
    const double p2 = x1 * x1, p3 = x1 * p2, p4 = p2 * p2;
    const double q2 = x2 * x2, q3 = x2 * q2, q4 = q2 * q2;
    switch (i) {
        case 1:
            return -3.0 * p4 * q2 + 2.0 * p3 * q3 + p2 * q4 + 2.0 * c * p2 * x2 -
                   2.0 * c * x1 * q2 + c * c;
        case 2:
            return -3.0 * p2 * q4 + 2.0 * p3 * q3 + p4 * q2 + 2.0 * c * x1 * q2 -
                   2.0 * c * p2 * x2 + c * c;
        default:
            return p4 * q2 - 2.0 * p3 * q3 + p2 * q4 + 2.0 * c * p2 * x2 +
                   2.0 * c * x1 * q2 - 3.0 * c * c;
    }
}

// Closed parameterization of s_1 on the surface c = 1, valid for t > 1.
inline std::pair<double, double> s1_param(double t) {
    require(t > 1.0, "s1_param: t must exceed 1");
    const double u = (t - 1.0 + 2.0 * std::sqrt(t * (t - 1.0))) /
                     ((3.0 * t + 1.0) * (t - 1.0) * t);
    const double x2 = std::cbrt(u);
    return {t * x2, x2};
}

// Tangent (dx1/dt, dx2/dt) of the s_1 parameterization.
inline std::pair<double, double> s1_tangent(double t) {
    require(t > 1.0, "s1_tangent: t must exceed 1");
    const double s = std::sqrt(t * t - t);
    const double n = t - 1.0 + 2.0 * s;
    const double d = (3.0 * t + 1.0) * (t - 1.0) * t;
    const double u = n / d;
    const double nd = 1.0 + (2.0 * t - 1.0) / s;
    const double dd = 9.0 * t * t - 4.0 * t - 1.0;
    const double ud = (nd * d - n * dd) / (d * d);
    const double x2 = std::cbrt(u);
    const double x2d = ud / (3.0 * x2 * x2);
    return {x2 + t * x2d, x2d};
}

}  // namespace wallach
