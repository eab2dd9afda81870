#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wallach {

// Coordinates below this are treated as numerically invalid (underflow guard).
inline constexpr double kMinCoordinate = 1e-300;

struct Vec3 {
    double v1 = 0.0, v2 = 0.0, v3 = 0.0;

    double operator[](int i) const { return i == 0 ? v1 : (i == 1 ? v2 : v3); }
};

inline double dot(const Vec3& a, const Vec3& b) {
    return a.v1 * b.v1 + a.v2 * b.v2 + a.v3 * b.v3;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.v2 * b.v3 - a.v3 * b.v2,
            a.v3 * b.v1 - a.v1 * b.v3,
            a.v1 * b.v2 - a.v2 * b.v1};
}

inline double norm_inf(const Vec3& a) {
    return std::max({std::fabs(a.v1), std::fabs(a.v2), std::fabs(a.v3)});
}

inline double norm2(const Vec3& a) { return std::sqrt(dot(a, a)); }

// One phase point: a strictly positive triple of metric parameters.
struct Point3 {
    double x1, x2, x3;

    Point3(double x1_, double x2_, double x3_) : x1(x1_), x2(x2_), x3(x3_) {
        if (!(x1 > kMinCoordinate) || !(x2 > kMinCoordinate) || !(x3 > kMinCoordinate))
            throw std::domain_error("Point3: coordinates must be strictly positive");
        if (!std::isfinite(x1) || !std::isfinite(x2) || !std::isfinite(x3))
            throw std::domain_error("Point3: coordinates must be finite");
    }

    explicit Point3(const std::array<double, 3>& x) : Point3(x[0], x[1], x[2]) {}

    double operator[](int i) const { return i == 0 ? x1 : (i == 1 ? x2 : x3); }
    std::array<double, 3> array() const { return {x1, x2, x3}; }
    double sum() const { return x1 + x2 + x3; }
    double product() const { return x1 * x2 * x3; }
};

// Either one shared parameter a (symmetric system) or a triple (a1,a2,a3).
class SystemParams {
  public:
    static SystemParams symmetric(double a) {
        if (!(a > 0.0) || !(a <= 0.5))
            throw std::domain_error("SystemParams: symmetric a must lie in (0,1/2]");
        SystemParams p;
        p.symmetric_ = true;
        p.a_ = {a, a, a};
        return p;
    }

    static SystemParams general(double a1, double a2, double a3) {
        for (double ai : {a1, a2, a3})
            if (!(ai > 0.0) || !(ai <= 0.5))
                throw std::domain_error("SystemParams: each a_i must lie in (0,1/2]");
        SystemParams p;
        p.symmetric_ = false;
        p.a_ = {a1, a2, a3};
        return p;
    }

    bool is_symmetric() const { return symmetric_; }
    double a() const { return a_[0]; }
    double a1() const { return a_[0]; }
    double a2() const { return a_[1]; }
    double a3() const { return a_[2]; }

  private:
    SystemParams() = default;
    bool symmetric_ = true;
    std::array<double, 3> a_{};
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::domain_error(msg);
}

}  // namespace wallach
