#pragma once

#include <cmath>
#include <string>

#include "inextensa/errors.hpp"
#include "inextensa/linalg.hpp"

namespace inextensa {

// Axis-aligned box with an inclusive structured grid (both endpoints are
// nodes).  All field evaluations are restricted to the declared box.
struct Domain {
    Point3 lo{0.0, 0.0, 0.0};
    Point3 hi{1.0, 1.0, 1.0};
    int nx = 21, ny = 21, nz = 21;

    void validate() const {
        if (!(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z))
            throw InvalidParams("Domain: extents must be strictly positive");
        if (nx < 2 || ny < 2 || nz < 2)
            throw InvalidParams("Domain: grid counts must be >= 2");
    }

    double hx() const { return (hi.x - lo.x) / (nx - 1); }
    double hy() const { return (hi.y - lo.y) / (ny - 1); }
    double hz() const { return (hi.z - lo.z) / (nz - 1); }

    Point3 node(int i, int j, int k) const {
        auto c = [](double a, double b, int m, int n) {
            return m == n - 1 ? b : a + (b - a) * (double(m) / (n - 1));
        };
        return {c(lo.x, hi.x, i, nx), c(lo.y, hi.y, j, ny), c(lo.z, hi.z, k, nz)};
    }

    bool contains(const Point3& p, double slack = 1e-9) const {
        if (!(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z))) return false;
        double ex = slack * (1.0 + hi.x - lo.x);
        double ey = slack * (1.0 + hi.y - lo.y);
        double ez = slack * (1.0 + hi.z - lo.z);
        return p.x >= lo.x - ex && p.x <= hi.x + ex && p.y >= lo.y - ey && p.y <= hi.y + ey &&
               p.z >= lo.z - ez && p.z <= hi.z + ez;
    }

    void require_inside(const Point3& p) const {
        if (!contains(p))
            throw DomainError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                              ", " + std::to_string(p.z) + ") outside declared domain");
    }

    static Domain unit_box(int n = 21) { return Domain{{0, 0, 0}, {1, 1, 1}, n, n, n}; }
};

enum class Chart { cartesian, cylindrical };

inline const char* chart_name(Chart c) {
    return c == Chart::cartesian ? "cartesian" : "cylindrical";
}

// Reference metric of the chart.  Cylindrical coordinates are (R, Theta, Z)
// with G = diag(1, R^2, 1); the chart requires R > 0.
template <class T>
SymMat3<T> chart_metric(Chart chart, const Vec3<T>& p) {
    if (chart == Chart::cartesian) return SymMat3<T>::identity();
    return SymMat3<T>::diag(T(1.0), p.x * p.x, T(1.0));
}

inline SymMat3d chart_metric_at(Chart chart, const Point3& p) {
    if (chart == Chart::cylindrical && p.x <= 0.0)
        throw DomainError("cylindrical chart requires R > 0");
    return chart_metric(chart, p);
}

} // namespace inextensa
