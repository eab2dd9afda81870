#pragma once

#include <array>

#include "wallach/core.hpp"

namespace wallach {

struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    double& operator()(int r, int c) { return m[r][c]; }
    double operator()(int r, int c) const { return m[r][c]; }

    Vec3 apply(const Vec3& v) const {
        return {m[0][0] * v.v1 + m[0][1] * v.v2 + m[0][2] * v.v3,
                m[1][0] * v.v1 + m[1][1] * v.v2 + m[1][2] * v.v3,
                m[2][0] * v.v1 + m[2][1] * v.v2 + m[2][2] * v.v3};
    }

    double norm_inf() const {
        double n = 0.0;
        for (const auto& row : m) {
            double s = std::fabs(row[0]) + std::fabs(row[1]) + std::fabs(row[2]);
            n = std::max(n, s);
        }
        return n;
    }
};

namespace detail {

// One component of the symmetric field. Written so that swapping v and w (and
// permuting calls) commutes with the arithmetic bit-for-bit; trajectories of
// permuted initial points then stay exact permutations of each other.
inline double sym_component(double a, double u, double v, double w) {
    const double quad = 2.0 * (u * u) - (v * v + w * w);
    return (u / v + u / w - 2.0 * a * quad / (v * w) - 2.0) / 3.0;
}

inline std::array<double, 3> sym_field(double a, const std::array<double, 3>& x) {
    return {sym_component(a, x[0], x[1], x[2]),
            sym_component(a, x[1], x[0], x[2]),
            sym_component(a, x[2], x[0], x[1])};
}

}  // namespace detail

// Vector field of the symmetric system (a1=a2=a3=a), normalized consistently
// with the general three-parameter field below.
inline Vec3 field_symmetric(double a, const Point3& x) {
    require(a > 0.0 && a <= 0.5, "field_symmetric: a must lie in (0,1/2]");
    auto f = detail::sym_field(a, x.array());
    return {f[0], f[1], f[2]};
}

// General three-parameter field, evaluated exactly as written (B term kept
// in its printed form, no algebraic simplification).
inline Vec3 field_general(const SystemParams& p, const Point3& x) {
    const double a1 = p.a1(), a2 = p.a2(), a3 = p.a3();
    const double x1 = x.x1, x2 = x.x2, x3 = x.x3;
    const double B = (1.0 / (a1 * x1) + 1.0 / (a2 * x2) + 1.0 / (a3 * x3) -
                      (x1 / (x2 * x3) + x2 / (x1 * x3) + x3 / (x1 * x2))) /
                     (1.0 / a1 + 1.0 / a2 + 1.0 / a3);
    const double f1 = -1.0 - a1 * x1 * (x1 / (x2 * x3) - x2 / (x1 * x3) - x3 / (x1 * x2)) + x1 * B;
    const double f2 = -1.0 - a2 * x2 * (x2 / (x1 * x3) - x3 / (x1 * x2) - x1 / (x2 * x3)) + x2 * B;
    const double f3 = -1.0 - a3 * x3 * (x3 / (x1 * x2) - x1 / (x2 * x3) - x2 / (x1 * x3)) + x3 * B;
    return {f1, f2, f3};
}

// Vol = x1^(1/a1) x2^(1/a2) x3^(1/a3) is a first integral of the general
// system. For the symmetric system the monotone reparameterization x1*x2*x3
// is returned instead; the surfaces x1*x2*x3 = c are the invariant ones used
// throughout the analysis.
inline double volume_integral(const SystemParams& p, const Point3& x) {
    if (p.is_symmetric()) return x.x1 * x.x2 * x.x3;
    return std::pow(x.x1, 1.0 / p.a1()) * std::pow(x.x2, 1.0 / p.a2()) *
           std::pow(x.x3, 1.0 / p.a3());
}

namespace detail {

// Analytic Jacobian of the symmetric field. Row i: derivatives of f_i with
// respect to (x_i, x_j, x_k) where {i,j,k} are in cyclic roles.
inline void sym_jacobian_row(double a, double u, double v, double w,
                             double& duu, double& duv, double& duw) {
    duu = (1.0 / v + 1.0 / w - 8.0 * a * u / (v * w)) / 3.0;
    duv = (-u / (v * v) + 2.0 * a * (2.0 * u * u + v * v - w * w) / (v * v * w)) / 3.0;
    duw = (-u / (w * w) + 2.0 * a * (2.0 * u * u - v * v + w * w) / (v * w * w)) / 3.0;
}

inline Mat3 sym_jacobian(double a, const std::array<double, 3>& x) {
    Mat3 J;
    sym_jacobian_row(a, x[0], x[1], x[2], J(0, 0), J(0, 1), J(0, 2));
    sym_jacobian_row(a, x[1], x[0], x[2], J(1, 1), J(1, 0), J(1, 2));
    sym_jacobian_row(a, x[2], x[0], x[1], J(2, 2), J(2, 0), J(2, 1));
    return J;
}

inline Mat3 general_jacobian(double a1, double a2, double a3, const std::array<double, 3>& x) {
    const std::array<double, 3> a{a1, a2, a3};
    const double pi = x[0] * x[1] * x[2];
    const double Q = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double A = 1.0 / a1 + 1.0 / a2 + 1.0 / a3;
    const double B = (1.0 / (a1 * x[0]) + 1.0 / (a2 * x[1]) + 1.0 / (a3 * x[2]) - Q / pi) / A;

    std::array<double, 3> T;   // T_i = (x_i^2 - x_j^2 - x_k^2) / pi
    std::array<double, 3> dB;  // dB/dx_m
    for (int i = 0; i < 3; ++i) {
        T[i] = (2.0 * x[i] * x[i] - Q) / pi;
        dB[i] = (-1.0 / (a[i] * x[i] * x[i]) - (2.0 * x[i] - Q / x[i]) / pi) / A;
    }

    Mat3 J;
    for (int i = 0; i < 3; ++i) {
        for (int m = 0; m < 3; ++m) {
            const double sign = (m == i) ? 1.0 : -1.0;
            const double dT = (2.0 * x[m] * sign - T[i] * pi / x[m]) / pi;
            double d = -a[i] * x[i] * dT + x[i] * dB[m];
            if (m == i) d += -a[i] * T[i] + B;
            J(i, m) = d;
        }
    }
    return J;
}

}  // namespace detail

// Analytic Jacobian of the field at x; agrees with central finite
// differences of the field to relative 1e-6 (tested against that oracle).
inline Mat3 jacobian(const SystemParams& p, const Point3& x) {
    if (p.is_symmetric()) return detail::sym_jacobian(p.a(), x.array());
    return detail::general_jacobian(p.a1(), p.a2(), p.a3(), x.array());
}

}  // namespace wallach
