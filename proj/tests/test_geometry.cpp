#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "wallach/analysis.hpp"
#include "wallach/geometry.hpp"

using namespace wallach;
using Catch::Approx;

namespace {

double rel_diff(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

struct Uniform {
    std::mt19937_64 eng;
    explicit Uniform(unsigned seed) : eng(seed) {}
    double operator()(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(eng() >> 11) * 0x1.0p-53);
    }
};

}  // namespace

TEST_CASE("gamma at reference points") {
    const Point3 e(1, 1, 1);
    for (int i = 1; i <= 3; ++i) CHECK(gamma(i, e) == 1.0);
    CHECK(gamma(3, Point3(1, 1, 4.0 / 3)) == Approx(0.0).margin(1e-15));
    CHECK(gamma(3, Point3(1, 1, 10)) < 0.0);
}

TEST_CASE("gamma along I3 vanishes only at t0 = cbrt(6c)/2") {
    for (double c : {0.5, 1.0, 4.0 / 3, 2.0}) {
        const double t0 = std::cbrt(6.0 * c) / 2.0;
        const Point3 x(t0, t0, c / (t0 * t0));
        CHECK(std::fabs(gamma(3, x)) < 1e-14 * x.sum() * x.sum());
        CHECK(gamma(3, Point3(t0 * 1.01, t0 * 1.01, c / (t0 * t0 * 1.0201))) > 0.0);
        CHECK(gamma(3, Point3(t0 * 0.99, t0 * 0.99, c / (t0 * t0 * 0.9801))) < 0.0);
    }
}

TEST_CASE("region classification") {
    const RegionClass diag = classify_region(Point3(1, 1, 1));
    CHECK(diag.interior());
    CHECK(diag.on_diagonal);

    const RegionClass b = classify_region(Point3(1, 1, 4.0 / 3));
    CHECK(b.boundary());
    CHECK(b.cone == 3);
    CHECK_FALSE(b.on_diagonal);

    const RegionClass e = classify_region(Point3(1, 1, 10));
    CHECK(e.exterior());

    // scale awareness: the same shape classifies identically across scales
    for (double s : {1e-4, 1.0, 1e4}) {
        CHECK(classify_region(Point3(s, s, 4.0 / 3 * s)).boundary());
        CHECK(classify_region(Point3(1.1 * s, 0.9 * s, 1.02 * s)).interior());
    }
}

TEST_CASE("psi and phi") {
    const auto [psi1, phi1] = psi_phi(1.0, 1.0);
    CHECK(psi1 == Approx(0.0).margin(1e-16));
    CHECK(phi1 == Approx(4.0 / 3).epsilon(1e-15));

    // Psi stays negative away from the diagonal (limit (1, 0+) -> -1/3)
    CHECK(psi_phi(1.0, 1e-9).first == Approx(-1.0 / 3).epsilon(1e-6));
    CHECK(psi_phi(2.0, 1.0).second == Approx((3.0 + 2.0 * std::sqrt(3.0)) / 3).epsilon(1e-15));

    Uniform u(31337);
    for (int k = 0; k < 200; ++k) {
        const double xj = std::exp(u(-3, 3)), xk = std::exp(u(-3, 3));
        const auto [psi, phi] = psi_phi(xj, xk);
        CHECK(psi <= 1e-12 * (xj + xk));
        CHECK(phi > 0.0);
        // root sandwich: gamma_i > 0 exactly on (max(0,Psi), Phi)
        auto g = [&](double xi) { return detail::gamma_raw(1, {xi, xj, xk}); };
        CHECK(g(0.5 * phi) > 0.0);
        CHECK(g(phi * (1.0 - 1e-6)) > 0.0);
        CHECK(g(phi * (1.0 + 1e-6)) < 0.0);
    }
}

TEST_CASE("gamma gradient") {
    // hand-evaluated entries
    const Vec3 g3 = grad_gamma(3, Point3(1, 1, 1));
    CHECK(g3.v1 == 2.0);
    CHECK(g3.v2 == 2.0);
    CHECK(g3.v3 == -2.0);
    CHECK(grad_gamma(3, Point3(1, 1, 4.0 / 3)).v3 == Approx(-4.0).epsilon(1e-15));

    Uniform u(55);
    for (int k = 0; k < 50; ++k) {
        const Point3 x(std::exp(u(-2, 2)), std::exp(u(-2, 2)), std::exp(u(-2, 2)));
        for (int i = 1; i <= 3; ++i) {
            const Vec3 g = grad_gamma(i, x);
            const Vec3 fd = oracles::fd_gradient(
                [i](const Point3& p) { return gamma(i, p); }, x);
            CHECK(std::fabs(g.v1 - fd.v1) < 1e-8 * (1.0 + norm_inf(g)));
            CHECK(std::fabs(g.v2 - fd.v2) < 1e-8 * (1.0 + norm_inf(g)));
            CHECK(std::fabs(g.v3 - fd.v3) < 1e-8 * (1.0 + norm_inf(g)));
        }
    }
}

TEST_CASE("gamma is homogeneous of degree two") {
    Uniform u(99);
    for (int k = 0; k < 100; ++k) {
        const Point3 x(std::exp(u(-1, 1)), std::exp(u(-1, 1)), std::exp(u(-1, 1)));
        const double s = std::exp(u(-6, 6));
        for (int i = 1; i <= 3; ++i) {
            const double lhs = gamma(i, Point3(s * x.x1, s * x.x2, s * x.x3));
            const double rhs = s * s * gamma(i, x);
            CHECK(rel_diff(lhs, rhs) < 1e-13);
        }
    }
}

TEST_CASE("cone chart") {
    // mu(4/3) = 1: the chart degenerates to the straight line x_i = 4t/3
    const ConeChart c43(1, 4.0 / 3, 0.7);
    CHECK(c43.mu == Approx(1.0).epsilon(1e-15));
    const Point3 p43 = cone_point(c43);
    CHECK(p43.x1 == Approx(4.0 / 3 * 0.7).epsilon(1e-15));
    CHECK(p43.x2 == Approx(0.7).epsilon(1e-15));
    CHECK(p43.x3 == Approx(0.7).epsilon(1e-15));

    CHECK(ConeChart(1, 1.0 + 1e-12, 1.0).mu < 3e-6);  // mu -> 0 as nu -> 1+

    const ConeChart c2(3, 2.0, 1.0);
    CHECK(c2.mu == Approx(2.0 * std::sqrt(2.0) - 1.0).epsilon(1e-15));
    const Point3 p2 = cone_point(c2);
    CHECK(std::fabs(gamma(3, p2)) < 1e-10 * p2.sum() * p2.sum());

    CHECK_THROWS_AS(ConeChart(1, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(ConeChart(0, 2.0, 1.0), std::domain_error);
}

TEST_CASE("cone disjointness, inward normal and chart consistency") {
    // over nu in (1, 1e3], t in [1e-3, 1e3]: the charted point lies on its
    // own cone only, the other gammas stay strictly positive, and the i-th
    // gradient component is strictly negative
    for (int i = 1; i <= 3; ++i) {
        for (double nu : {1.0 + 1e-6, 1.01, 4.0 / 3, 2.0, 10.0, 1e3}) {
            for (double t : {1e-3, 0.1, 1.0, 31.0, 1e3}) {
                const Point3 p = cone_point(ConeChart(i, nu, t));
                const double tol = 1e-9 * p.sum() * p.sum();
                CHECK(std::fabs(gamma(i, p)) <= tol);
                const RegionClass r = classify_region(p, tol);
                CHECK(r.boundary());
                CHECK(r.cone == i);
                int ii, jj, kk;
                detail::cone_slots(i, ii, jj, kk);
                CHECK(gamma(jj + 1, p) > 0.0);
                CHECK(gamma(kk + 1, p) > 0.0);
                CHECK(grad_gamma(i, p)[ii] < 0.0);
            }
        }
    }
}

TEST_CASE("invariant curve points") {
    const Point3 p1 = invariant_curve_point(3, 1.0, 1.0);
    CHECK(p1.x1 == 1.0);
    CHECK(p1.x2 == 1.0);
    CHECK(p1.x3 == 1.0);
    const Point3 p2 = invariant_curve_point(3, 1.0, 2.0);
    CHECK(p2.x1 == 2.0);
    CHECK(p2.x2 == 2.0);
    CHECK(p2.x3 == 0.25);
    // the curve lies on the surface x1 x2 x3 = c
    Uniform u(2024);
    for (int k = 0; k < 50; ++k) {
        const double c = std::exp(u(-1, 1)), p = std::exp(u(-2, 2));
        const int i = 1 + static_cast<int>(u(0, 3));
        CHECK(rel_diff(invariant_curve_point(i, c, p).product(), c) < 1e-14);
    }
}

TEST_CASE("field is tangent to the invariant curves") {
    // on I_3 the tangent is (1, 1, -2c p^-3): f1 = f2 and f3 = -2c p^-3 f1
    for (double a : {0.1, 0.22, 0.3}) {
        for (double c : {0.5, 1.0, 2.0}) {
            for (double p : {0.45, 2.0, 3.3}) {
                const Point3 x = invariant_curve_point(3, c, p);
                const Vec3 f = field_symmetric(a, x);
                CHECK(f.v1 == f.v2);
                if (std::fabs(f.v1) > 1e-8)
                    CHECK(rel_diff(f.v3, -2.0 * c / (p * p * p) * f.v1) < 1e-12);
            }
        }
    }
}

TEST_CASE("curve meets its cone at the unique charted point") {
    const Point3 x = curve_cone_intersection(3, 1.0);
    CHECK(x.x1 == Approx(0.90856029641606983).epsilon(1e-14));  // cbrt(6)/2
    CHECK(x.x3 == Approx(1.2114137285547598).epsilon(1e-12));   // equals 4 t0 / 3
    CHECK(x.x3 == Approx(4.0 * x.x1 / 3.0).epsilon(1e-12));
    const RegionClass r = classify_region(x);
    CHECK(r.boundary());
    CHECK(r.cone == 3);
    CHECK(gamma(1, x) > 0.0);
    CHECK(gamma(2, x) > 0.0);

    // 6c = 8 makes t0 = 1 exactly
    const Point3 y = curve_cone_intersection(1, 8.0 / 6.0);
    CHECK(y.x2 == Approx(1.0).epsilon(1e-15));
    CHECK(y.x3 == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("planar sextics agree with the lifted gammas") {
    CHECK(planar_l(3, 1.0, 1.0, 1.0) == 1.0);
    Uniform u(808);
    for (int k = 0; k < 2000; ++k) {
        const double c = std::exp(u(-0.7, 0.7));
        const double x1 = std::exp(u(-1.5, 1.5)), x2 = std::exp(u(-1.5, 1.5));
        const Point3 lift(x1, x2, c / (x1 * x2));
        const double w = x1 * x2;
        for (int i = 1; i <= 3; ++i) {
            const double lhs = planar_l(i, c, x1, x2);
            const double rhs = w * w * gamma(i, lift);
            CHECK(std::fabs(lhs - rhs) <=
                  1e-12 * std::max({std::fabs(lhs), std::fabs(rhs), c * c}));
        }
    }
}

TEST_CASE("planar sextic gradients match finite differences") {
    Uniform u(4444);
    for (int k = 0; k < 60; ++k) {
        const double c = std::exp(u(-0.5, 0.5));
        const double x1 = std::exp(u(-1, 1)), x2 = std::exp(u(-1, 1));
        for (int i = 1; i <= 3; ++i) {
            const auto [d1, d2] = detail::planar_l_grad(i, c, x1, x2);
            const double h1 = 1e-6 * x1, h2 = 1e-6 * x2;
            const double fd1 =
                (planar_l(i, c, x1 + h1, x2) - planar_l(i, c, x1 - h1, x2)) / (2.0 * h1);
            const double fd2 =
                (planar_l(i, c, x1, x2 + h2) - planar_l(i, c, x1, x2 - h2)) / (2.0 * h2);
            CHECK(std::fabs(d1 - fd1) < 1e-6 * (1.0 + std::fabs(d1)));
            CHECK(std::fabs(d2 - fd2) < 1e-6 * (1.0 + std::fabs(d2)));
        }
    }
}

TEST_CASE("s1 parameterization") {
    CHECK_THROWS_AS(s1_param(1.0), std::domain_error);
    CHECK_THROWS_AS(s1_param(0.5), std::domain_error);

    // t = 4/3 gives the planar projection (q kappa, q) of o1 at a = 3/14
    const double kappa = (1.0 - 2.0 * kTangencyA) / (2.0 * kTangencyA);
    const double q = std::cbrt(1.0 / kappa);
    const auto [x1c, x2c] = s1_param(4.0 / 3);
    CHECK(x1c == Approx(q * kappa).epsilon(1e-13));
    CHECK(x2c == Approx(q).epsilon(1e-13));

    // frozen value at t = 2, cross-checked below by an independent bisection
    const auto [x1f, x2f] = s1_param(2.0);
    CHECK(x1f == Approx(1.2981576748982869).epsilon(1e-13));
    CHECK(x2f == Approx(0.64907883744914344).epsilon(1e-13));
    const double root = oracles::bisect(
        [](double v) { return planar_l(1, 1.0, 2.0 * v, v); }, 0.5, 0.8, 1e-13);
    CHECK(x2f == Approx(root).epsilon(1e-10));

    // l1 vanishes along the whole curve
    for (double t : {1.0 + 1e-5, 1.2, 4.0 / 3, 2.5, 20.0, 3000.0}) {
        const auto [x1, x2] = s1_param(t);
        const Point3 lift(x1, x2, 1.0 / (x1 * x2));
        const double scale = x1 * x2 * lift.sum();
        CHECK(std::fabs(planar_l(1, 1.0, x1, x2)) < 1e-9 * scale * scale);
    }

    // asymptotics at both ends
    const double eps = 1e-8;
    const auto [a1, a2] = s1_param(1.0 + eps);
    const double lead = std::cbrt(0.5) * std::pow(eps, -1.0 / 6);
    CHECK(a1 / a2 == Approx(1.0).epsilon(1e-4));
    CHECK(a2 == Approx(lead).epsilon(1e-2));
    const double big = 1e8;
    const auto [b1, b2] = s1_param(big);
    CHECK(b1 == Approx(std::cbrt(big)).epsilon(1e-2));
    CHECK(b2 == Approx(std::pow(big, -2.0 / 3)).epsilon(1e-2));

    // tangent matches finite differences of the parameterization
    for (double t : {1.1, 1.9, 6.0}) {
        const auto [d1, d2] = s1_tangent(t);
        const double h = 1e-6;
        const auto [p1, p2] = s1_param(t + h);
        const auto [m1, m2] = s1_param(t - h);
        CHECK(d1 == Approx((p1 - m1) / (2.0 * h)).epsilon(1e-7));
        CHECK(d2 == Approx((p2 - m2) / (2.0 * h)).epsilon(1e-7));
    }
}
