#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "wallach/analysis.hpp"

namespace wallach {

struct IntegratorOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.25;
    double horizon = 200.0;
    double min_coordinate = 1e-12;   // stop when any coordinate falls below
    double equilibrium_tol = 1e-13;  // inf-norm of the field
    std::size_t max_steps = 2000000;
};

enum class CrossDirection { LeavingS, EnteringS };
enum class StopReason { HorizonReached, CoordinateUnderflow, EquilibriumConverged };

struct CrossingEvent {
    double time;
    Point3 point;
    int cone;                  // 1..3
    CrossDirection direction;  // sign of d(gamma)/dt at the event: negative -> LeavingS
    bool refined;              // false for tangential grazes (excluded from counts)
    double dgamma_dt = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Point3> points;
    std::vector<CrossingEvent> events;
    StopReason reason = StopReason::HorizonReached;
    double volume_drift = 0.0;      // max |x1 x2 x3 / c0 - 1| over the run
    bool conservation_ok = true;    // drift <= 1e-8, else the run is flagged
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    int count(CrossDirection d) const {
        int n = 0;
        for (const auto& e : events)
            if (e.refined && e.direction == d) ++n;
        return n;
    }
};

struct PlanarEvent {
    double time;
    double x1, x2;
    int curve;  // index of l_i
    CrossDirection direction;
    bool refined;
};

struct PlanarTrajectory {
    std::vector<double> times;
    std::vector<std::pair<double, double>> points;
    std::vector<PlanarEvent> events;
    StopReason reason = StopReason::HorizonReached;
    std::size_t accepted_steps = 0;
};

namespace detail {

// Dormand-Prince 5(4). The 5th-order solution propagates (local
// extrapolation); stage 7 is the FSAL derivative of the result.
template <std::size_t N, class Field>
struct Dopri5 {
    const Field& f;

    using St = std::array<double, N>;

    static bool valid(const St& x) {
        for (double v : x)
            if (!(v > 0.0) || !std::isfinite(v)) return false;
        return true;
    }

    // Returns false if any stage leaves the positive cone. On success x5 is
    // the step result, err the embedded error estimate, k7 = f(x5).
    bool step(const St& x, double h, const St& k1, St& x5, St& err, St& k7) const {
        auto axpy = [&](const St& base, std::initializer_list<std::pair<double, const St*>> terms) {
            St r = base;
            for (auto& [c, k] : terms)
                for (std::size_t n = 0; n < N; ++n) r[n] += h * c * (*k)[n];
            return r;
        };
        St y = axpy(x, {{1.0 / 5, &k1}});
        if (!valid(y)) return false;
        St k2 = f(y);
        y = axpy(x, {{3.0 / 40, &k1}, {9.0 / 40, &k2}});
        if (!valid(y)) return false;
        St k3 = f(y);
        y = axpy(x, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}});
        if (!valid(y)) return false;
        St k4 = f(y);
        y = axpy(x, {{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2}, {64448.0 / 6561, &k3},
                     {-212.0 / 729, &k4}});
        if (!valid(y)) return false;
        St k5 = f(y);
        y = axpy(x, {{9017.0 / 3168, &k1}, {-355.0 / 33, &k2}, {46732.0 / 5247, &k3},
                     {49.0 / 176, &k4}, {-5103.0 / 18656, &k5}});
        if (!valid(y)) return false;
        St k6 = f(y);
        x5 = axpy(x, {{35.0 / 384, &k1}, {500.0 / 1113, &k3}, {125.0 / 192, &k4},
                      {-2187.0 / 6784, &k5}, {11.0 / 84, &k6}});
        if (!valid(x5)) return false;
        k7 = f(x5);
        for (std::size_t n = 0; n < N; ++n)
            err[n] = h * (71.0 / 57600 * k1[n] - 71.0 / 16695 * k3[n] + 71.0 / 1920 * k4[n] -
                          17253.0 / 339200 * k5[n] + 22.0 / 525 * k6[n] - 1.0 / 40 * k7[n]);
        return true;
    }

    // Scaled max-norm; max is permutation-invariant, so integrating a
    // permuted initial point replays the identical step sequence.
    double error_norm(const St& x0, const St& x1, const St& err, double atol,
                      double rtol) const {
        double e = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double sc = atol + rtol * std::max(std::fabs(x0[n]), std::fabs(x1[n]));
            e = std::max(e, std::fabs(err[n]) / sc);
        }
        return e;
    }
};

template <std::size_t N>
struct RawRun {
    std::vector<double> times;
    std::vector<std::array<double, N>> states;
    StopReason reason = StopReason::HorizonReached;
    double drift = 0.0;
    std::size_t accepted = 0, rejected = 0;
};

template <std::size_t N, class Field>
RawRun<N> integrate_core(const Field& f, const std::array<double, N>& x0,
                         const IntegratorOptions& opts) {
    require(opts.rel_tol > 0.0 && opts.abs_tol > 0.0, "integrate: tolerances must be positive");
    require(opts.horizon > 0.0, "integrate: horizon must be positive");
    Dopri5<N, Field> rk{f};
    RawRun<N> run;
    std::array<double, N> x = x0;
    double t = 0.0;
    run.times.push_back(t);
    run.states.push_back(x);

    double prod0 = 1.0;
    if constexpr (N == 3) prod0 = x[0] * x[1] * x[2];

    std::array<double, N> k1 = f(x);
    double fn = 0.0;
    for (double v : k1) fn = std::max(fn, std::fabs(v));
    if (fn <= opts.equilibrium_tol) {
        run.reason = StopReason::EquilibriumConverged;
        return run;
    }

    double xn = 0.0;
    for (double v : x) xn = std::max(xn, std::fabs(v));
    double h = std::min(opts.max_step, 0.01 * (1.0 + xn) / (1.0 + fn));

    double errold = 1e-4;
    const double safe = 0.9, alpha = 0.17, beta = 0.04;
    bool rejected_last = false;

    while (t < opts.horizon) {
        if (run.accepted + run.rejected > opts.max_steps)
            throw std::runtime_error("integrate: step budget exhausted");
        if (h < 1e-14 * std::max(1.0, std::fabs(t)))
            throw std::runtime_error("integrate: step size underflow (controller failed)");
        const bool last = t + h >= opts.horizon;
        if (last) h = opts.horizon - t;

        std::array<double, N> x5, err, k7;
        if (!rk.step(x, h, k1, x5, err, k7)) {
            h *= 0.5;
            ++run.rejected;
            rejected_last = true;
            continue;
        }
        const double e = rk.error_norm(x, x5, err, opts.abs_tol, opts.rel_tol);
        if (!(e <= 1.0)) {
            ++run.rejected;
            double fac = safe * std::pow(e, -alpha);
            h *= std::clamp(fac, 0.2, 1.0);
            rejected_last = true;
            continue;
        }
        t = last ? opts.horizon : t + h;
        x = x5;
        k1 = k7;  // FSAL
        ++run.accepted;
        run.times.push_back(t);
        run.states.push_back(x);

        if constexpr (N == 3) {
            const double prod = x[0] * x[1] * x[2];
            run.drift = std::max(run.drift, std::fabs(prod / prod0 - 1.0));
        }

        bool under = false;
        for (double v : x)
            if (v < opts.min_coordinate) under = true;
        if (under) {
            run.reason = StopReason::CoordinateUnderflow;
            return run;
        }
        double kn = 0.0;
        for (double v : k1) kn = std::max(kn, std::fabs(v));
        if (kn <= opts.equilibrium_tol) {
            run.reason = StopReason::EquilibriumConverged;
            return run;
        }

        double fac = safe * std::pow(std::max(e, 1e-16), -alpha) * std::pow(errold, beta);
        fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 5.0);
        h = std::min(h * fac, opts.max_step);
        errold = std::max(e, 1e-4);
        rejected_last = false;
    }
    run.reason = StopReason::HorizonReached;
    return run;
}

// Event family: M scalar functions of the state, each with a value, a
// magnitude scale (for the rounding-noise deadband and the boundary
// tolerance) and an exact time derivative along the field.
template <std::size_t N>
struct EventDef {
    std::function<double(int, const std::array<double, N>&)> value;
    std::function<double(int, const std::array<double, N>&)> scale;
    std::function<double(int, const std::array<double, N>&)> rate;
    int count = 0;
};

struct RawEvent {
    double time;
    int index;  // event-function index, 1-based
    bool refined;
    bool leaving;  // value passes from + to -
    double rate;
    std::size_t sample;  // index of the sample after the event
    std::array<double, 3> point3{};
    std::array<double, 2> point2{};
};

inline int band_sign(double v, double band) {
    if (v > band) return 1;
    if (v < -band) return -1;
    return 0;
}

template <std::size_t N, class Field>
std::vector<RawEvent> scan_events(const RawRun<N>& run, const Field& f,
                                  const EventDef<N>& ev) {
    std::vector<RawEvent> out;
    if (run.states.size() < 2) return out;
    Dopri5<N, Field> rk{f};

    auto step_to = [&](const std::array<double, N>& x, const std::array<double, N>& k1,
                       double h) {
        std::array<double, N> x5, err, k7;
        if (!rk.step(x, h, k1, x5, err, k7)) return x;  // conservative fallback
        return x5;
    };

    constexpr double kBandFactor = 32.0;
    for (std::size_t s = 1; s < run.states.size(); ++s) {
        const auto& xa = run.states[s - 1];
        const auto& xb = run.states[s];
        const double ta = run.times[s - 1];
        const double h = run.times[s] - ta;
        if (h <= 0.0) continue;
        const std::array<double, N> k1 = f(xa);
        for (int m = 1; m <= ev.count; ++m) {
            const double ga = ev.value(m, xa);
            const double gb = ev.value(m, xb);
            const double band =
                kBandFactor * std::numeric_limits<double>::epsilon() *
                std::max(ev.scale(m, xa), ev.scale(m, xb));
            const int sa = band_sign(ga, band);
            const int sb = band_sign(gb, band);
            const double tol = kBoundaryEps * std::max(ev.scale(m, xa), ev.scale(m, xb));

            if (sa != 0 && sb != 0 && sa != sb) {
                // transversal crossing candidate: bisect on the step map
                double lo = 0.0, hi = h;
                double glo = ga;
                std::array<double, N> xm = xb;
                for (int it = 0; it < 80 && hi - lo > 1e-12 * std::max(1.0, ta); ++it) {
                    const double mid = 0.5 * (lo + hi);
                    xm = step_to(xa, k1, mid);
                    const double gm = ev.value(m, xm);
                    if ((glo > 0.0) == (gm > 0.0)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                const double tstar = ta + 0.5 * (lo + hi);
                xm = step_to(xa, k1, 0.5 * (lo + hi));
                RawEvent e{};
                e.time = tstar;
                e.index = m;
                e.leaving = sa > 0;
                e.rate = ev.rate(m, xm);
                e.refined = std::fabs(e.rate) >= 1e-10;  // tangential graze otherwise
                e.sample = s;
                if constexpr (N == 3) e.point3 = xm;
                if constexpr (N == 2) e.point2 = xm;
                out.push_back(e);
            } else if (sa == sb && sa != 0 && std::fabs(ga) > tol && std::fabs(gb) > tol &&
                       std::min(std::fabs(ga), std::fabs(gb)) < 100.0 * tol) {
                // possible tangential dip: |gamma| momentarily below the
                // boundary tolerance with no sign change and both endpoints
                // clear of it (sustained proximity is not a graze)
                constexpr int kDense = 8;
                double best = std::min(std::fabs(ga), std::fabs(gb));
                double tbest = -1.0;
                std::array<double, N> xbest{};
                for (int d = 1; d < kDense; ++d) {
                    const double hd = h * d / kDense;
                    const auto xd = step_to(xa, k1, hd);
                    const double gd = ev.value(m, xd);
                    if (std::fabs(gd) < best) {
                        best = std::fabs(gd);
                        tbest = ta + hd;
                        xbest = xd;
                    }
                }
                if (tbest >= 0.0 && best < tol) {
                    RawEvent e{};
                    e.time = tbest;
                    e.index = m;
                    e.leaving = sa > 0;
                    e.rate = ev.rate(m, xbest);
                    e.refined = false;
                    e.sample = s;
                    if constexpr (N == 3) e.point3 = xbest;
                    if constexpr (N == 2) e.point2 = xbest;
                    out.push_back(e);
                }
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const RawEvent& a, const RawEvent& b) { return a.time < b.time; });
    return out;
}

inline EventDef<3> gamma_events(double a) {
    EventDef<3> ev;
    ev.count = 3;
    ev.value = [](int i, const std::array<double, 3>& x) { return gamma_raw(i, x); };
    ev.scale = [](int, const std::array<double, 3>& x) {
        const double s = x[0] + x[1] + x[2];
        return s * s;
    };
    ev.rate = [a](int i, const std::array<double, 3>& x) {
        const Point3 p(x);
        return dot(field_symmetric(a, p), grad_gamma(i, p));
    };
    return ev;
}

}  // namespace detail

// Crossings of the cones by a computed trajectory: every sign change of any
// gamma_i refined by bisection on the step map; tangential grazes reported
// with refined = false and excluded from counts.
inline std::vector<CrossingEvent> detect_crossings(const Trajectory& traj, double a) {
    detail::RawRun<3> run;
    run.times = traj.times;
    run.states.reserve(traj.points.size());
    for (const auto& p : traj.points) run.states.push_back(p.array());
    auto field = [a](const std::array<double, 3>& x) { return detail::sym_field(a, x); };
    auto raw = detail::scan_events(run, field, detail::gamma_events(a));
    std::vector<CrossingEvent> out;
    out.reserve(raw.size());
    for (const auto& e : raw)
        out.push_back({e.time, Point3(e.point3), e.index,
                       e.leaving ? CrossDirection::LeavingS : CrossDirection::EnteringS,
                       e.refined, e.rate});
    return out;
}

// Adaptive integration of the symmetric system from x0.
inline Trajectory integrate(double a, const Point3& x0, const IntegratorOptions& opts = {}) {
    require(a > 0.0 && a <= 0.5, "integrate: a must lie in (0,1/2]");
    auto field = [a](const std::array<double, 3>& x) { return detail::sym_field(a, x); };
    auto run = detail::integrate_core<3>(field, x0.array(), opts);
    Trajectory traj;
    traj.times = std::move(run.times);
    traj.points.reserve(run.states.size());
    for (const auto& s : run.states) traj.points.emplace_back(s);
    traj.reason = run.reason;
    traj.volume_drift = run.drift;
    traj.conservation_ok = run.drift <= 1e-8;
    traj.accepted_steps = run.accepted;
    traj.rejected_steps = run.rejected;
    traj.events = detect_crossings(traj, a);
    return traj;
}

namespace detail {

inline std::pair<double, double> planar_l_grad(int i, double c, double x1, double x2) {
    // derivatives of the sign-normalized sextics
    const double p2 = x1 * x1, p3 = x1 * p2;
    const double q2 = x2 * x2, q3 = x2 * q2;
    switch (i) {
        case 1:
            return {-12.0 * p3 * q2 + 6.0 * p2 * q3 + 2.0 * x1 * q2 * q2 + 4.0 * c * x1 * x2 -
                        2.0 * c * q2,
                    -6.0 * p2 * p2 * x2 + 6.0 * p3 * q2 + 4.0 * p2 * q3 + 2.0 * c * p2 -
                        4.0 * c * x1 * x2};
        case 2:
            return {-6.0 * x1 * q2 * q2 + 6.0 * p2 * q3 + 4.0 * p3 * q2 + 2.0 * c * q2 -
                        4.0 * c * x1 * x2,
                    -12.0 * p2 * q3 + 6.0 * p3 * q2 + 2.0 * p2 * p2 * x2 + 4.0 * c * x1 * x2 -
                        2.0 * c * p2};
        default:
            return {4.0 * p3 * q2 - 6.0 * p2 * q3 + 2.0 * x1 * q2 * q2 + 4.0 * c * x1 * x2 +
                        2.0 * c * q2,
                    2.0 * p2 * p2 * x2 - 6.0 * p3 * q2 + 4.0 * p2 * q3 + 2.0 * c * p2 +
                        4.0 * c * x1 * x2};
    }
}

}  // namespace detail

// Planar counterpart on the surface c = 1; events against the curves l_i = 0.
inline PlanarTrajectory integrate_planar(double a, double x1, double x2,
                                         const IntegratorOptions& opts = {}) {
    require(a > 0.0 && a <= 0.5, "integrate_planar: a must lie in (0,1/2]");
    require(x1 > 0.0 && x2 > 0.0, "integrate_planar: start must be positive");
    auto field = [a](const std::array<double, 2>& x) {
        return std::array<double, 2>{detail::planar_component(a, x[0], x[1]),
                                     detail::planar_component(a, x[1], x[0])};
    };
    auto run = detail::integrate_core<2>(field, {x1, x2}, opts);

    detail::EventDef<2> ev;
    ev.count = 3;
    ev.value = [](int i, const std::array<double, 2>& x) {
        return planar_l(i, 1.0, x[0], x[1]);
    };
    ev.scale = [](int, const std::array<double, 2>& x) {
        const double x3 = 1.0 / (x[0] * x[1]);
        const double s = x[0] + x[1] + x3;
        const double w = x[0] * x[1];
        return w * w * s * s;
    };
    ev.rate = [a](int i, const std::array<double, 2>& x) {
        const auto [f, g] = planar_field(a, x[0], x[1]);
        const auto [dl1, dl2] = detail::planar_l_grad(i, 1.0, x[0], x[1]);
        return dl1 * f + dl2 * g;
    };
    auto raw = detail::scan_events(run, field, ev);

    PlanarTrajectory traj;
    traj.times = std::move(run.times);
    traj.points.reserve(run.states.size());
    for (const auto& s : run.states) traj.points.emplace_back(s[0], s[1]);
    traj.reason = run.reason;
    traj.accepted_steps = run.accepted;
    for (const auto& e : raw)
        traj.events.push_back({e.time, e.point2[0], e.point2[1], e.index,
                               e.leaving ? CrossDirection::LeavingS : CrossDirection::EnteringS,
                               e.refined});
    return traj;
}

// Deterministic uniform sampler (bit-reproducible across platforms).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    std::mt19937_64 eng_;
};

// Generic start on the surface x1 x2 x3 = c: pairwise-distinct coordinates
// (margin 1e-3 relative) and strictly inside/outside S.
inline Point3 sample_surface_start(Rng& rng, bool interior, double c = 1.0,
                                   double margin = 1e-3) {
    const double lo = interior ? std::log(0.35) : std::log(0.2);
    const double hi = interior ? std::log(2.8) : std::log(5.0);
    for (int tries = 0; tries < 100000; ++tries) {
        const double x1 = std::exp(rng.uniform(lo, hi));
        const double x2 = std::exp(rng.uniform(lo, hi));
        const double x3 = c / (x1 * x2);
        if (!(x3 > 1e-6) || !(x3 < 1e6)) continue;
        const Point3 p(x1, x2, x3);
        const double s = p.sum();
        if (std::fabs(x1 - x2) < margin * s || std::fabs(x2 - x3) < margin * s ||
            std::fabs(x1 - x3) < margin * s)
            continue;  // too close to an invariant curve or the diagonal
        const double g1 = gamma(1, p), g2 = gamma(2, p), g3 = gamma(3, p);
        const double m = margin * s * s;
        if (interior && g1 > m && g2 > m && g3 > m) return p;
        if (!interior && std::min({g1, g2, g3}) < -m) return p;
    }
    throw std::runtime_error("sample_surface_start: rejection sampling failed");
}

// Exterior start just outside the cone sector where the flux points inward
// (only meaningful for a in (3/14, 1/4)).
inline Point3 aimed_exterior_start(double a, double bump = 1e-4) {
    const FluxSplit split = critical_nus(a);
    require(split.regime == FluxSplit::Regime::SignChange,
            "aimed_exterior_start: requires a in (3/14, 1/4)");
    const double nu = 0.5 * (split.nu1 + split.nu2);
    const double mu = 1.0 - nu + 2.0 * std::sqrt(nu * (nu - 1.0));
    const double t = std::cbrt(1.0 / (nu * mu));
    std::array<double, 3> x{nu * t * (1.0 + bump), mu * t, t};
    const double scale = std::cbrt(1.0 / (x[0] * x[1] * x[2]));
    for (double& v : x) v *= scale;  // back onto the surface c = 1
    return Point3(x);
}

struct RunRecord {
    Point3 start;
    bool interior = true;
    bool aimed = false;
    RegionClass start_class;
    RegionClass final_class;
    StopReason reason = StopReason::HorizonReached;
    double volume_drift = 0.0;
    bool conservation_ok = true;
    int leaving = 0;
    int entering = 0;
    int grazes = 0;
    int escalations = 0;
    double horizon_used = 0.0;
    double final_time = 0.0;
    std::vector<CrossingEvent> events;
};

struct RegimeReport {
    double a = 0.0;
    int n = 0;
    std::uint64_t seed = 0;
    int theorem_case = 0;
    bool consistent = false;
    std::string violation;      // first concrete witness, empty if consistent
    std::vector<int> inconclusive;
    std::vector<RunRecord> runs;  // interior first, then exterior (+ aimed last)
};

inline int theorem_case_of(double a) {
    require(a > 0.0 && a < 0.5, "theorem_case_of: a must lie in (0,1/2)");
    if (std::fabs(a - kTangencyA) <= 1e-14) return 2;
    if (std::fabs(a - 0.25) <= 1e-12) return 5;
    if (a < kTangencyA) return 1;
    if (a < 0.25) return 3;
    return 4;
}

namespace detail {

inline RunRecord run_one(double a, const Point3& start, bool interior, bool aimed,
                         const IntegratorOptions& base, int expect_case) {
    RunRecord rec{start, interior, aimed, classify_region(start), classify_region(start)};
    IntegratorOptions opts = base;
    // Near a = 1/4 the crossing time can grow without bound: escalate the
    // horizon geometrically before declaring the run inconclusive.
    for (int esc = 0;; ++esc) {
        Trajectory traj = integrate(a, start, opts);
        rec.final_class = classify_region(traj.points.back());
        rec.reason = traj.reason;
        rec.volume_drift = traj.volume_drift;
        rec.conservation_ok = traj.conservation_ok;
        rec.leaving = traj.count(CrossDirection::LeavingS);
        rec.entering = traj.count(CrossDirection::EnteringS);
        rec.grazes = 0;
        for (const auto& e : traj.events)
            if (!e.refined) ++rec.grazes;
        rec.escalations = esc;
        rec.horizon_used = opts.horizon;
        rec.final_time = traj.times.back();
        rec.events = traj.events;

        const bool pending =
            traj.reason == StopReason::HorizonReached &&
            ((interior && expect_case <= 3 && rec.leaving == 0) ||
             (!interior && expect_case == 4 && rec.entering == 0) ||
             (!interior && expect_case == 3 && rec.entering > rec.leaving));
        if (!pending || esc >= 4) return rec;
        opts.horizon *= 4.0;
    }
}

}  // namespace detail

// Integrates n seeded generic interior and n exterior starts on the surface
// c = 1 and checks the observed crossing pattern against the regime table.
inline RegimeReport run_regime_experiment(double a, int n, std::uint64_t seed,
                                          const IntegratorOptions& opts = {},
                                          int threads = 0) {
    require(n >= 1, "run_regime_experiment: n must be >= 1");
    RegimeReport rep;
    rep.a = a;
    rep.n = n;
    rep.seed = seed;
    rep.theorem_case = theorem_case_of(a);

    struct Plan {
        Point3 start;
        bool interior;
        bool aimed;
    };
    std::vector<Plan> plans;
    plans.reserve(2 * n + 1);
    for (int i = 0; i < n; ++i) {
        Rng rng(seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(i + 1));
        plans.push_back({sample_surface_start(rng, true), true, false});
    }
    for (int i = 0; i < n; ++i) {
        Rng rng(seed + 0xC2B2AE3D27D4EB4Full * static_cast<std::uint64_t>(i + 1));
        plans.push_back({sample_surface_start(rng, false), false, false});
    }
    if (rep.theorem_case == 3) plans.push_back({aimed_exterior_start(a), false, true});

    std::vector<RunRecord> records;
    records.reserve(plans.size());
    for (const auto& p : plans) records.push_back(RunRecord{p.start, p.interior, p.aimed,
                                                            classify_region(p.start),
                                                            classify_region(p.start)});
    // independent trajectories; deterministic aggregation regardless of the
    // scheduling order
    unsigned hw = std::thread::hardware_concurrency();
    int nthreads = threads > 0 ? threads : static_cast<int>(std::min(hw ? hw : 1u, 8u));
    nthreads = std::min<int>(nthreads, static_cast<int>(plans.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= plans.size()) return;
            records[i] = detail::run_one(a, plans[i].start, plans[i].interior,
                                         plans[i].aimed, opts, rep.theorem_case);
        }
    };
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    auto fail = [&](std::size_t i, const std::string& what) {
        if (rep.violation.empty()) {
            rep.violation = "run " + std::to_string(i) + (records[i].interior ? " (interior" : " (exterior");
            if (records[i].aimed) rep.violation += ", aimed";
            rep.violation += "): " + what + " [start " + std::to_string(records[i].start.x1) +
                             ", " + std::to_string(records[i].start.x2) + ", " +
                             std::to_string(records[i].start.x3) + "]";
        }
    };

    const int k = rep.theorem_case;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RunRecord& r = records[i];
        const bool horizon_pending = r.reason == StopReason::HorizonReached;
        if (r.interior) {
            switch (k) {
                case 1:
                case 2:
                case 3:
                    if (r.entering > 0)
                        fail(i, "interior trajectory re-entered S (" +
                                    std::to_string(r.entering) + " entering events)");
                    else if (r.leaving > 1)
                        fail(i, "interior trajectory left S more than once");
                    else if (r.leaving == 0) {
                        if (horizon_pending)
                            rep.inconclusive.push_back(static_cast<int>(i));
                        else
                            fail(i, "interior trajectory never left S");
                    } else if (!r.final_class.exterior() &&
                               r.reason != StopReason::CoordinateUnderflow)
                        fail(i, "interior trajectory left but did not end exterior");
                    break;
                case 4:
                case 5:
                    if (r.leaving > 0) fail(i, "trajectory left S although a >= 1/4");
                    break;
            }
        } else {
            switch (k) {
                case 1:
                case 2:
                    if (r.entering > 0) fail(i, "exterior trajectory entered S");
                    break;
                case 3:
                    if (r.aimed) {
                        if (!(r.entering == 1 && r.leaving == 1))
                            fail(i, "aimed exterior start expected to enter then leave");
                    } else if (!((r.entering == 0 && r.leaving == 0) ||
                                 (r.entering == 1 && r.leaving == 1))) {
                        if (r.entering == 1 && r.leaving == 0 && horizon_pending)
                            rep.inconclusive.push_back(static_cast<int>(i));
                        else
                            fail(i, "exterior crossing pattern not 0 or 2 events");
                    }
                    break;
                case 4: {
                    const CrossingEvent* last = nullptr;
                    for (const auto& e : r.events)
                        if (e.refined) last = &e;
                    if (last != nullptr && last->direction == CrossDirection::LeavingS)
                        fail(i, "trajectory left S after entering although a > 1/4");
                    else if (r.entering == 0) {
                        if (horizon_pending)
                            rep.inconclusive.push_back(static_cast<int>(i));
                        else
                            fail(i, "exterior trajectory never entered S");
                    }
                    break;
                }
                case 5:
                    break;  // no requirement on exterior starts at a = 1/4
            }
        }
    }
    rep.runs = std::move(records);
    rep.consistent = rep.violation.empty();
    return rep;
}

// Fixed-step classical RK4 reproduction of the boundary-crossing experiment
// in the chart (x, y) = (x3/x1, x3/x2) on a backward mesh, plus the
// calibrated power-law asymptote and its intersection with the boundary.
struct IvpConfig {
    double a = 0.26;
    int mesh_points = 5000;         // N
    double b = 1.0 + 1e-6;          // left end of the mesh
    double x0 = 1.0 + 1e-3;         // initial x
    double y0 = 20.0;               // initial y
};

struct IvpResult {
    bool crossed = false;
    int mesh_index = -1;
    double crossing_x = 0.0;
    double crossing_y = 0.0;        // RK4 value at the first mesh point below the boundary
    double boundary_y = 0.0;        // boundary value there
    double coefficient = 0.0;       // calibrated asymptote coefficient
    double exponent = 0.0;          // 1/2 - 1/(4a)
    double asymptote_x = 0.0;       // intersection of asymptote and boundary
    double asymptote_y = 0.0;
};

namespace detail {

// dy/dx of the chart system; scale-free, evaluated on the representative
// with x1 x2 x3 = 1.
inline double chart_slope(double a, double x, double y) {
    const double x3 = std::cbrt(x * y);
    const double x1 = x3 / x;
    const double x2 = x3 / y;
    const double f1 = sym_component(a, x1, x2, x3);
    const double f2 = sym_component(a, x2, x1, x3);
    const double f3 = sym_component(a, x3, x1, x2);
    return (y * (f3 / x3 - f2 / x2)) / (x * (f3 / x3 - f1 / x1));
}

}  // namespace detail

inline IvpResult boundary_ivp_experiment(const IvpConfig& cfg = {}) {
    require(cfg.mesh_points >= 1, "boundary_ivp_experiment: need at least one mesh point");
    require(cfg.b > 1.0 && cfg.x0 > cfg.b, "boundary_ivp_experiment: need 1 < b < x0");
    require(cfg.y0 > 0.0, "boundary_ivp_experiment: y0 must be positive");
    const double a = cfg.a;
    const double h = (cfg.b - cfg.x0) / cfg.mesh_points;  // negative step

    IvpResult res;
    res.exponent = 0.5 - 1.0 / (4.0 * a);
    res.coefficient = calibrate_asymptotic(a, cfg.x0, cfg.y0);

    double x = cfg.x0, y = cfg.y0;
    for (int i = 1; i <= cfg.mesh_points; ++i) {
        const double k1 = detail::chart_slope(a, x, y);
        const double k2 = detail::chart_slope(a, x + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = detail::chart_slope(a, x + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = detail::chart_slope(a, x + h, y + h * k3);
        y += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        x = cfg.x0 + i * h;
        const double yb = boundary_asymptote(x);
        if (y - yb < 0.0) {
            res.crossed = true;
            res.mesh_index = i;
            res.crossing_x = x;
            res.crossing_y = y;
            res.boundary_y = yb;
            break;
        }
    }
    if (!res.crossed)
        throw std::runtime_error("boundary_ivp_experiment: no boundary crossing on the mesh");

    // intersection of the calibrated asymptote with the boundary curve
    auto gap = [&](double xx) {
        return asymptotic_solution(a, res.coefficient, xx) - boundary_asymptote(xx);
    };
    double lo = 1.0 + 1e-9, hi = cfg.x0;
    double glo = gap(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = gap(mid);
        if ((glo > 0.0) == (gm > 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * hi) break;
    }
    res.asymptote_x = 0.5 * (lo + hi);
    res.asymptote_y = asymptotic_solution(a, res.coefficient, res.asymptote_x);
    return res;
}

}  // namespace wallach
