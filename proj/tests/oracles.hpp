// Test-only oracles: finite differences, bracketed bisection and a scalar
// RK4 integrator. Everything here is independent of the implementation
// paths it is used to check.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "wallach/core.hpp"
#include "wallach/model.hpp"

namespace oracles {

// Central finite-difference gradient of a scalar function of three
// positive coordinates.
inline wallach::Vec3 fd_gradient(const std::function<double(const wallach::Point3&)>& f,
                                 const wallach::Point3& x) {
    std::array<double, 3> g{};
    const std::array<double, 3> xs = x.array();
    for (int m = 0; m < 3; ++m) {
        const double h = 1e-6 * std::max(1.0, std::fabs(xs[m]));
        std::array<double, 3> xp = xs, xm = xs;
        xp[m] += h;
        xm[m] -= h;
        g[m] = (f(wallach::Point3(xp)) - f(wallach::Point3(xm))) / (2.0 * h);
    }
    return {g[0], g[1], g[2]};
}

// Central finite-difference Jacobian of a vector field.
inline wallach::Mat3 fd_jacobian(const std::function<wallach::Vec3(const wallach::Point3&)>& f,
                                 const wallach::Point3& x) {
    wallach::Mat3 J;
    const std::array<double, 3> xs = x.array();
    for (int m = 0; m < 3; ++m) {
        const double h = 1e-6 * std::max(1.0, std::fabs(xs[m]));
        std::array<double, 3> xp = xs, xm = xs;
        xp[m] += h;
        xm[m] -= h;
        const wallach::Vec3 fp = f(wallach::Point3(xp));
        const wallach::Vec3 fm = f(wallach::Point3(xm));
        J(0, m) = (fp.v1 - fm.v1) / (2.0 * h);
        J(1, m) = (fp.v2 - fm.v2) / (2.0 * h);
        J(2, m) = (fp.v3 - fm.v3) / (2.0 * h);
    }
    return J;
}

// 2x2 central finite-difference Jacobian of a planar field.
inline std::array<std::array<double, 2>, 2> fd_jacobian2(
    const std::function<std::pair<double, double>(double, double)>& f, double x1, double x2) {
    std::array<std::array<double, 2>, 2> J{};
    const double h1 = 1e-6 * std::max(1.0, std::fabs(x1));
    const double h2 = 1e-6 * std::max(1.0, std::fabs(x2));
    auto [fp1, gp1] = f(x1 + h1, x2);
    auto [fm1, gm1] = f(x1 - h1, x2);
    auto [fp2, gp2] = f(x1, x2 + h2);
    auto [fm2, gm2] = f(x1, x2 - h2);
    J[0][0] = (fp1 - fm1) / (2.0 * h1);
    J[1][0] = (gp1 - gm1) / (2.0 * h1);
    J[0][1] = (fp2 - fm2) / (2.0 * h2);
    J[1][1] = (gp2 - gm2) / (2.0 * h2);
    return J;
}

// Plain bisection on a bracketing interval.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double xtol) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw std::runtime_error("bisect: no sign change");
    while (hi - lo > xtol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((flo > 0.0) == (fm > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Bisection roots of F(nu) = a: nu1 bracketed in [1+1e-12, 4/3], nu2 in
// [4/3, nu_max] with nu_max grown geometrically until F(nu_max) > a.
inline std::pair<double, double> bisect_F_roots(const std::function<double(double)>& F,
                                                double a) {
    auto g = [&](double nu) { return F(nu) - a; };
    const double nu1 = bisect(g, 1.0 + 1e-12, 4.0 / 3.0, 1e-12);
    double nu_max = 2.0;
    while (F(nu_max) <= a) nu_max *= 2.0;
    const double nu2 = bisect(g, 4.0 / 3.0, nu_max, 1e-12 * nu_max);
    return {nu1, nu2};
}

// Fixed-step classical RK4 for scalar ODEs dp/dt = f(p).
inline double rk4_scalar(const std::function<double(double)>& f, double p0, double t1,
                         int steps) {
    const double h = t1 / steps;
    double p = p0;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(p);
        const double k2 = f(p + 0.5 * h * k1);
        const double k3 = f(p + 0.5 * h * k2);
        const double k4 = f(p + h * k3);
        p += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    return p;
}

}  // namespace oracles
