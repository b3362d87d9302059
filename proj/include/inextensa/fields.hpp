#pragma once

#include <functional>
#include <utility>

#include "inextensa/domain.hpp"
#include "inextensa/dual.hpp"
#include "inextensa/linalg.hpp"

namespace inextensa {

// Point field types.  Evaluators are stored per differentiation order so a
// single closed-form definition (a lambda templated on the scalar) serves the
// plain, first-, second- and third-order truncated-Taylor paths.

struct DeformationMap {
    Domain domain;
    Chart chart = Chart::cartesian;
    std::function<Vec3<double>(const Vec3<double>&)> e0;
    std::function<Vec3<D1>(const Vec3<D1>&)> e1;
    std::function<Vec3<D2>(const Vec3<D2>&)> e2;
    std::function<Vec3<D3>(const Vec3<D3>&)> e3;
};

struct MetricField {
    Domain domain;
    Chart chart = Chart::cartesian;
    std::function<SymMat3<double>(const Vec3<double>&)> e0;
    std::function<SymMat3<D1>(const Vec3<D1>&)> e1;
    std::function<SymMat3<D2>(const Vec3<D2>&)> e2;
};

template <class F>
DeformationMap make_map(const Domain& domain, Chart chart, F&& f) {
    DeformationMap m;
    m.domain = domain;
    m.chart = chart;
    m.e0 = [f](const Vec3<double>& p) { return f(p.x, p.y, p.z); };
    m.e1 = [f](const Vec3<D1>& p) { return f(p.x, p.y, p.z); };
    m.e2 = [f](const Vec3<D2>& p) { return f(p.x, p.y, p.z); };
    m.e3 = [f](const Vec3<D3>& p) { return f(p.x, p.y, p.z); };
    return m;
}

template <class F>
MetricField make_metric(const Domain& domain, Chart chart, F&& f) {
    MetricField m;
    m.domain = domain;
    m.chart = chart;
    m.e0 = [f](const Vec3<double>& p) { return f(p.x, p.y, p.z); };
    m.e1 = [f](const Vec3<D1>& p) { return f(p.x, p.y, p.z); };
    m.e2 = [f](const Vec3<D2>& p) { return f(p.x, p.y, p.z); };
    return m;
}

// Pull-back strain of a deformation.  C_AB = g_ab F^a_A F^b_B with the
// ambient metric of the map's target chart (identity for Cartesian targets,
// diag(1, r^2, 1) at the image point for cylindrical ones).
template <class T>
SymMat3<T> pullback_metric(const DeformationMap& map, const Vec3<T>& p) {
    auto q = seed_point(p);
    Vec3<Dual3<T>> phi;
    if constexpr (std::is_same_v<T, double>) phi = map.e1(q);
    else if constexpr (std::is_same_v<T, D1>) phi = map.e2(q);
    else phi = map.e3(q);

    Mat3<T> f; // F[a][A] = d(phi^a)/dX^A
    for (int a = 0; a < 3; ++a)
        for (int A = 0; A < 3; ++A) f(a, A) = phi[a].g[A];

    SymMat3<T> g = SymMat3<T>::identity();
    if (map.chart == Chart::cylindrical) {
        T r = phi.x.v;
        g = SymMat3<T>::diag(T(1.0), r * r, T(1.0));
    }
    SymMat3<T> c;
    for (int A = 0; A < 3; ++A)
        for (int B = A; B < 3; ++B) {
            T s(0.0);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) s = s + g(a, b) * f(a, A) * f(b, B);
            c.slot(A, B) = s;
        }
    return c;
}

// Strain field induced by a deformation map; needs the map's order-(k+1)
// evaluator to expose order-k metric derivatives.
inline MetricField metric_from_map(const DeformationMap& map) {
    MetricField m;
    m.domain = map.domain;
    m.chart = map.chart;
    m.e0 = [map](const Vec3<double>& p) { return pullback_metric(map, p); };
    m.e1 = [map](const Vec3<D1>& p) { return pullback_metric(map, p); };
    m.e2 = [map](const Vec3<D2>& p) { return pullback_metric(map, p); };
    return m;
}

// Metric value with first and second partials, flattened from the nested
// truncated-Taylor evaluation.
struct MetricEval {
    SymMat3d value;
    std::array<SymMat3d, 3> d;                    // d[A] = dC/dX^A
    std::array<std::array<SymMat3d, 3>, 3> dd;    // dd[A][B], symmetrized in (A,B)
};

inline MetricEval flatten(const SymMat3<D2>& c) {
    MetricEval e;
    auto each = [&](auto&& fn) {
        fn(&SymMat3d::xx, &SymMat3<D2>::xx);
        fn(&SymMat3d::xy, &SymMat3<D2>::xy);
        fn(&SymMat3d::xz, &SymMat3<D2>::xz);
        fn(&SymMat3d::yy, &SymMat3<D2>::yy);
        fn(&SymMat3d::yz, &SymMat3<D2>::yz);
        fn(&SymMat3d::zz, &SymMat3<D2>::zz);
    };
    each([&](auto dm, auto sm) {
        const D2& entry = c.*sm;
        e.value.*dm = entry.v.v;
        for (int A = 0; A < 3; ++A) e.d[A].*dm = entry.v.g[A];
        for (int A = 0; A < 3; ++A)
            for (int B = A; B < 3; ++B) {
                double v = 0.5 * (entry.g[A].g[B] + entry.g[B].g[A]);
                e.dd[A][B].*dm = v;
                e.dd[B][A].*dm = v;
            }
    });
    return e;
}

} // namespace inextensa
