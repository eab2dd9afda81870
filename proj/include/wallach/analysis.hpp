#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "wallach/geometry.hpp"
#include "wallach/model.hpp"

namespace wallach {

// Parameter of the symmetric system at which the invariant curves are
// tangent to the cones (the minimum of F).
inline constexpr double kTangencyA = 3.0 / 14.0;

struct GHF {
    double G, H, F;
};

// G, H and F = H/G of the flux factorization. G > 0 and H > 0 for nu >= 1;
// F decreases on (1, 4/3), increases on (4/3, inf), F(1) = 1/4, min 3/14.
inline GHF g_h_f(double nu) {
    require(nu >= 1.0, "g_h_f: nu must be >= 1");
    const double s = std::sqrt(nu * (nu - 1.0));
    const double G = (12.0 * nu - 15.0) * s - 12.0 * nu * nu + 21.0 * nu - 5.0;
    const double H = 0.5 * (3.0 * nu - 1.0 - 3.0 * s);
    return {G, H, H / G};
}

struct FluxSplit {
    enum class Regime { AlwaysNegative, TangentAtNu, SignChange, AlwaysPositive };
    Regime regime;
    double nu1 = std::numeric_limits<double>::quiet_NaN();
    double nu2 = std::numeric_limits<double>::quiet_NaN();
};

// Critical chart values nu where the flux through the cones changes sign.
// For a in (3/14, 1/4) the equation F(nu) = a has exactly the two roots
// below; the "+" branch is the smaller one.
inline FluxSplit critical_nus(double a) {
    require(a > 0.0 && a < 0.5, "critical_nus: a must lie in (0,1/2)");
    if (std::fabs(a - kTangencyA) <= 1e-14)
        return {FluxSplit::Regime::TangentAtNu, 4.0 / 3.0, 4.0 / 3.0};
    if (a < kTangencyA) return {FluxSplit::Regime::AlwaysNegative};
    if (a >= 0.25) return {FluxSplit::Regime::AlwaysPositive};
    // Both roots solve 24a(4a-1) nu^2 - 3(10a-1)(2a-1) nu - (10a-1)^2 = 0.
    // The larger root is cancellation-free; the smaller comes via the product
    // of roots to stay accurate as a -> 1/4 (where nu1 -> 1, nu2 -> inf).
    const double num = 3.0 * (2.0 * a - 1.0) * (10.0 * a - 1.0);
    const double disc = 3.0 * (14.0 * a - 3.0) * std::pow(10.0 * a - 1.0, 3);
    const double den = 48.0 * a * (4.0 * a - 1.0);
    const double nu2 = (num - std::sqrt(disc)) / den;
    const double product = -(10.0 * a - 1.0) * (10.0 * a - 1.0) / (24.0 * a * (4.0 * a - 1.0));
    const double nu1 = product / nu2;
    return {FluxSplit::Regime::SignChange, nu1, nu2};
}

// Inner product of the field with the cone normal, computed directly from
// the field and grad gamma (the canonical path; the factorized form below is
// the cross-check).
inline double flux(double a, const Point3& x_on_cone, int i) {
    require(a > 0.0 && a <= 0.5, "flux: a must lie in (0,1/2]");
    const double g = gamma(i, x_on_cone);
    if (std::fabs(g) > boundary_tolerance(x_on_cone))
        throw std::domain_error("flux: point does not lie on the requested cone");
    return dot(field_symmetric(a, x_on_cone), grad_gamma(i, x_on_cone));
}

// Exact factorization of the flux on the chart (nu, t):
//   (V, grad gamma_i) = 8 t (nu - 1) (G(nu) a - H(nu)) / mu(nu).
// The sign is carried entirely by G(nu) a - H(nu), i.e. by a - F(nu).
inline double flux_factorized(double a, const ConeChart& chart) {
    const GHF f = g_h_f(chart.nu);
    return 8.0 * chart.t * (chart.nu - 1.0) * (f.G * a - f.H) / chart.mu;
}

struct EquilibriumSet {
    double a = 0.0;
    double c = 1.0;
    double kappa = 1.0;  // (1-2a)/(2a)
    double q = 1.0;      // cbrt(c/kappa)
    std::array<Point3, 4> points;
    bool degenerate = false;  // a = 1/4: all four points coincide
};

// The four equilibria on the surface x1 x2 x3 = c: o0 symmetric, o_i with
// coordinate q*kappa in slot i and q elsewhere.
inline EquilibriumSet equilibria(double a, double c) {
    require(a > 0.0 && a < 0.5, "equilibria: a must lie in (0,1/2)");
    require(c > 0.0, "equilibria: c must be positive");
    const double kappa = (1.0 - 2.0 * a) / (2.0 * a);
    const double q = std::cbrt(c / kappa);
    const double cb = std::cbrt(c);
    EquilibriumSet e{a, c, kappa, q,
                     {Point3(cb, cb, cb), Point3(q * kappa, q, q), Point3(q, q * kappa, q),
                      Point3(q, q, q * kappa)},
                     std::fabs(a - 0.25) <= 1e-12};
    return e;
}

// Location of o0..o3 relative to S; decided by the sign of (3 - 14a).
inline std::array<RegionClass, 4> equilibrium_membership(double a) {
    const EquilibriumSet e = equilibria(a, 1.0);
    return {classify_region(e.points[0]), classify_region(e.points[1]),
            classify_region(e.points[2]), classify_region(e.points[3])};
}

struct EigenStructure {
    enum class Tag { Stable, Unstable, Center };
    std::array<double, 3> eigenvalues{};   // [2] is the exactly-zero slot
    std::array<Vec3, 3> eigenvectors{};
    std::array<Tag, 3> tags{};
    bool eigenplane = false;  // o0: [0] and [1] span the plane x1+x2+x3 = 0
};

namespace detail {

// Real roots of x^3 + b x^2 + c x + d (all real for the Jacobians handled
// here); trigonometric form, discriminant clamped against rounding.
inline std::array<double, 3> cubic_roots(double b, double c, double d) {
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    std::array<double, 3> r{};
    const double mp3 = -p / 3.0;
    if (mp3 <= 0.0) {  // triple/near-triple root
        r.fill(-b / 3.0);
        return r;
    }
    const double sp = std::sqrt(mp3);
    double arg = -q / (2.0 * sp * sp * sp);
    arg = std::clamp(arg, -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    constexpr double pi = std::numbers::pi_v<double>;
    for (int k = 0; k < 3; ++k)
        r[k] = 2.0 * sp * std::cos(phi - 2.0 * pi * k / 3.0) - b / 3.0;
    return r;
}

// Null-space direction of a (near-)singular 3x3 matrix via the largest
// cross product of row pairs.
inline Vec3 null_direction(const Mat3& M) {
    const Vec3 r0{M(0, 0), M(0, 1), M(0, 2)};
    const Vec3 r1{M(1, 0), M(1, 1), M(1, 2)};
    const Vec3 r2{M(2, 0), M(2, 1), M(2, 2)};
    Vec3 best = cross(r0, r1);
    double bn = dot(best, best);
    for (const Vec3& v : {cross(r0, r2), cross(r1, r2)}) {
        const double n = dot(v, v);
        if (n > bn) {
            best = v;
            bn = n;
        }
    }
    const double n = std::sqrt(bn);
    return {best.v1 / n, best.v2 / n, best.v3 / n};
}

inline Mat3 shifted(const Mat3& J, double lambda) {
    Mat3 M = J;
    for (int i = 0; i < 3; ++i) M(i, i) -= lambda;
    return M;
}

}  // namespace detail

// Numerically diagonalizes the Jacobian at the chosen equilibrium and labels
// the directions. Slot [2] is the center direction along the equilibrium
// line (eigenvalue exactly zero). For o0 the remaining eigenvalue is double
// and the pair [0],[1] spans the tangent plane of the surface.
inline EigenStructure eigen_structure(double a, double c, int which) {
    require(which >= 0 && which <= 3, "eigen_structure: which must be 0..3");
    if (std::fabs(a - 0.25) <= 1e-12)
        throw std::domain_error("eigen_structure: degenerate at a = 1/4");
    const EquilibriumSet e = equilibria(a, c);
    const Mat3 J = jacobian(SystemParams::symmetric(a), e.points[which]);
    const double nJ = J.norm_inf();

    const double tr = J(0, 0) + J(1, 1) + J(2, 2);
    const double m2 = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0) + J(0, 0) * J(2, 2) -
                      J(0, 2) * J(2, 0) + J(1, 1) * J(2, 2) - J(1, 2) * J(2, 1);
    const double det = J(0, 0) * (J(1, 1) * J(2, 2) - J(1, 2) * J(2, 1)) -
                       J(0, 1) * (J(1, 0) * J(2, 2) - J(1, 2) * J(2, 0)) +
                       J(0, 2) * (J(1, 0) * J(2, 1) - J(1, 1) * J(2, 0));
    auto roots = detail::cubic_roots(-tr, m2, -det);

    // one eigenvalue is exactly zero along the equilibrium family
    int zi = 0;
    for (int k = 1; k < 3; ++k)
        if (std::fabs(roots[k]) < std::fabs(roots[zi])) zi = k;
    if (std::fabs(roots[zi]) > 1e-8 * std::max(1.0, nJ))
        throw std::runtime_error("eigen_structure: no zero eigenvalue found");
    std::array<double, 2> lam{};
    int w = 0;
    for (int k = 0; k < 3; ++k)
        if (k != zi) lam[w++] = roots[k];
    if (lam[0] > lam[1]) std::swap(lam[0], lam[1]);

    EigenStructure s;
    s.eigenvalues = {lam[0], lam[1], 0.0};
    s.eigenplane = std::fabs(lam[0] - lam[1]) <= 1e-7 * std::max(1.0, nJ);
    if (s.eigenplane) {
        // double eigenvalue: eigenplane orthogonal to (1,1,1)
        const double inv = 1.0 / std::sqrt(2.0);
        s.eigenvectors[0] = {-inv, 0.0, inv};
        s.eigenvectors[1] = {-inv, inv, 0.0};
    } else {
        s.eigenvectors[0] = detail::null_direction(detail::shifted(J, lam[0]));
        s.eigenvectors[1] = detail::null_direction(detail::shifted(J, lam[1]));
    }
    s.eigenvectors[2] = detail::null_direction(J);

    for (int k = 0; k < 2; ++k)
        s.tags[k] = s.eigenvalues[k] < 0.0 ? EigenStructure::Tag::Stable
                                           : EigenStructure::Tag::Unstable;
    s.tags[2] = EigenStructure::Tag::Center;

    for (int k = 0; k < 3; ++k) {
        const Vec3 v = s.eigenvectors[k];
        const Vec3 Jv = J.apply(v);
        const Vec3 res{Jv.v1 - s.eigenvalues[k] * v.v1, Jv.v2 - s.eigenvalues[k] * v.v2,
                       Jv.v3 - s.eigenvalues[k] * v.v3};
        if (norm2(res) > 1e-6 * std::max(1.0, nJ))
            throw std::runtime_error("eigen_structure: eigenpair residual too large");
    }
    return s;
}

namespace detail {

// Planar restriction of the field to the unit-volume surface, one component.
inline double planar_component(double a, double u, double v) {
    const double uv2 = u * v * (u * v);
    return (u / v + u * u * v - 2.0 * a * u * (2.0 * u * u - v * v - 1.0 / uv2) - 2.0) / 3.0;
}

}  // namespace detail

// The planar system on the surface x1 x2 x3 = 1, projected to the (x1,x2)
// plane; identical to the first two components of the symmetric field at
// (x1, x2, 1/(x1 x2)).
inline std::pair<double, double> planar_field(double a, double x1, double x2) {
    require(a > 0.0 && a <= 0.5, "planar_field: a must lie in (0,1/2]");
    require(x1 > 0.0 && x2 > 0.0, "planar_field: coordinates must be positive");
    return {detail::planar_component(a, x1, x2), detail::planar_component(a, x2, x1)};
}

struct PlanarClassification {
    double delta = 0.0;  // det of the planar linearization
    double rho = 0.0;    // trace
    double sigma = 0.0;  // rho^2 - 4 delta
    enum class Kind { Node, Saddle } kind = Kind::Node;
    bool stable = false;
};

// Closed-form det/trace/discriminant of the planar linearization at the
// projected equilibria (c = 1): a node at (1,1), saddles at the other three.
inline PlanarClassification planar_classification(double a, int which) {
    require(which >= 0 && which <= 3, "planar_classification: which must be 0..3");
    require(a > 0.0 && a < 0.5, "planar_classification: a must lie in (0,1/2)");
    if (std::fabs(a - 0.25) <= 1e-12)
        throw std::domain_error("planar_classification: degenerate at a = 1/4 (delta=rho=sigma=0)");
    PlanarClassification r;
    const double m = 4.0 * a - 1.0;
    if (which == 0) {
        r.delta = m * m;
        r.rho = -2.0 * m;
        r.sigma = 0.0;
        r.kind = PlanarClassification::Kind::Node;
        r.stable = a > 0.25;
    } else {
        const double kappa = (1.0 - 2.0 * a) / (2.0 * a);
        const double q = std::cbrt(1.0 / kappa);
        r.delta = (2.0 * a + 1.0) * m * m / ((2.0 * a - 1.0) * q * q);
        r.rho = -2.0 * m * q * q;
        r.sigma = r.rho * r.rho - 4.0 * r.delta;
        r.kind = PlanarClassification::Kind::Saddle;
        r.stable = false;
    }
    return r;
}

// Difference between the slope of the s1 tangent and the slope of the planar
// field along s1 (a = 3/14, c = 1). Positive on (1,4/3), negative beyond;
// undefined at t = 4/3 where the equilibrium sits exactly on s1.
inline double slope_gap(double t) {
    require(t > 1.0, "slope_gap: t must exceed 1");
    if (std::fabs(t - 4.0 / 3.0) <= 1e-12)
        throw std::domain_error("slope_gap: pole at t = 4/3 (equilibrium on s1)");
    const auto [x1, x2] = s1_param(t);
    const auto [f, g] = planar_field(kTangencyA, x1, x2);
    const auto [d1, d2] = s1_tangent(t);
    return d2 / d1 - g / f;
}

// Angle between the planar field and the s1 tangent (radians; a = 3/14).
inline double angle_alpha(double t) {
    require(t > 1.0, "angle_alpha: t must exceed 1");
    if (std::fabs(t - 4.0 / 3.0) <= 1e-12)
        throw std::domain_error("angle_alpha: pole at t = 4/3 (equilibrium on s1)");
    const auto [x1, x2] = s1_param(t);
    const auto [f, g] = planar_field(kTangencyA, x1, x2);
    const auto [d1, d2] = s1_tangent(t);
    const double num = f * d1 + g * d2;
    const double den = std::sqrt(f * f + g * g) * std::sqrt(d1 * d1 + d2 * d2);
    return std::acos(std::clamp(num / den, -1.0, 1.0));
}

// Near-boundary power law y = C (x-1)^(1/2 - 1/(4a)) for solutions of the
// (x,y)-chart equation as x -> 1+.
inline double asymptotic_solution(double a, double C, double x) {
    require(a > 0.0 && a < 0.5, "asymptotic_solution: a must lie in (0,1/2)");
    require(C > 0.0, "asymptotic_solution: C must be positive");
    require(x > 1.0, "asymptotic_solution: x must exceed 1");
    return C * std::pow(x - 1.0, 0.5 - 1.0 / (4.0 * a));
}

// Fit C from an initial condition y(x0) = y0.
inline double calibrate_asymptotic(double a, double x0, double y0) {
    require(a > 0.0 && a < 0.5, "calibrate_asymptotic: a must lie in (0,1/2)");
    require(x0 > 1.0 && y0 > 0.0, "calibrate_asymptotic: need x0 > 1, y0 > 0");
    return y0 * std::pow(x0 - 1.0, -(0.5 - 1.0 / (4.0 * a)));
}

// The boundary curve s3' in the chart (x, y) = (x3/x1, x3/x2):
// y_b = x (x - 1 + 2 sqrt(x(x-1))) / ((3x+1)(x-1)), with
// y_b ~ (1/2) (x-1)^(-1/2) as x -> 1+.
inline double boundary_asymptote(double x) {
    require(x > 1.0, "boundary_asymptote: pole at x = 1; x must exceed 1");
    return x * (x - 1.0 + 2.0 * std::sqrt(x * (x - 1.0))) / ((3.0 * x + 1.0) * (x - 1.0));
}

}  // namespace wallach
