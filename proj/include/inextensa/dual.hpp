#pragma once

#include <array>
#include <cmath>
#include <type_traits>

namespace inextensa {

// Forward-mode truncated-Taylor scalar in the three reference coordinates
// (X, Y, Z).  Nesting raises the order: Dual3<double> carries first partials,
// Dual3<Dual3<double>> second partials, and so on.  Derivative rules are
// evaluated in the inner algebra, so every formula below is valid at any
// nesting depth.
template <class T>
struct Dual3 {
    T v{};
    std::array<T, 3> g{};

    Dual3() = default;
    Dual3(double c) : v(c) {}
    template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
    Dual3(const T& vv) : v(vv) {}

    Dual3 operator-() const {
        Dual3 r;
        r.v = -v;
        for (int i = 0; i < 3; ++i) r.g[i] = -g[i];
        return r;
    }

    Dual3& operator+=(const Dual3& o) {
        v = v + o.v;
        for (int i = 0; i < 3; ++i) g[i] = g[i] + o.g[i];
        return *this;
    }
    Dual3& operator-=(const Dual3& o) {
        v = v - o.v;
        for (int i = 0; i < 3; ++i) g[i] = g[i] - o.g[i];
        return *this;
    }
};

using D1 = Dual3<double>;
using D2 = Dual3<D1>;
using D3 = Dual3<D2>;

inline double scalar_value(double x) { return x; }
template <class T>
double scalar_value(const Dual3<T>& x) { return scalar_value(x.v); }

template <class T>
Dual3<T> operator+(const Dual3<T>& a, const Dual3<T>& b) {
    Dual3<T> r;
    r.v = a.v + b.v;
    for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] + b.g[i];
    return r;
}
template <class T>
Dual3<T> operator-(const Dual3<T>& a, const Dual3<T>& b) {
    Dual3<T> r;
    r.v = a.v - b.v;
    for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] - b.g[i];
    return r;
}
template <class T>
Dual3<T> operator*(const Dual3<T>& a, const Dual3<T>& b) {
    Dual3<T> r;
    r.v = a.v * b.v;
    for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    return r;
}
template <class T>
Dual3<T> operator/(const Dual3<T>& a, const Dual3<T>& b) {
    Dual3<T> r;
    r.v = a.v / b.v;
    for (int i = 0; i < 3; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) / b.v;
    return r;
}

// Mixed scalar overloads keep hot loops free of zero-gradient temporaries.
template <class T>
Dual3<T> operator+(const Dual3<T>& a, double s) {
    Dual3<T> r = a;
    r.v = a.v + s;
    return r;
}
template <class T>
Dual3<T> operator+(double s, const Dual3<T>& a) { return a + s; }
template <class T>
Dual3<T> operator-(const Dual3<T>& a, double s) {
    Dual3<T> r = a;
    r.v = a.v - s;
    return r;
}
template <class T>
Dual3<T> operator-(double s, const Dual3<T>& a) {
    Dual3<T> r = -a;
    r.v = s - a.v;
    return r;
}
template <class T>
Dual3<T> operator*(const Dual3<T>& a, double s) {
    Dual3<T> r;
    r.v = a.v * s;
    for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] * s;
    return r;
}
template <class T>
Dual3<T> operator*(double s, const Dual3<T>& a) { return a * s; }
template <class T>
Dual3<T> operator/(const Dual3<T>& a, double s) { return a * (1.0 / s); }
template <class T>
Dual3<T> operator/(double s, const Dual3<T>& a) { return Dual3<T>(s) / a; }

using std::atan;
using std::atan2;
using std::cos;
using std::log;
using std::sin;
using std::sqrt;

template <class T>
Dual3<T> sqrt(const Dual3<T>& x) {
    Dual3<T> r;
    r.v = sqrt(x.v);
    T two_s = r.v + r.v;
    for (int i = 0; i < 3; ++i) r.g[i] = x.g[i] / two_s;
    return r;
}
template <class T>
Dual3<T> sin(const Dual3<T>& x) {
    Dual3<T> r;
    r.v = sin(x.v);
    T c = cos(x.v);
    for (int i = 0; i < 3; ++i) r.g[i] = c * x.g[i];
    return r;
}
template <class T>
Dual3<T> cos(const Dual3<T>& x) {
    Dual3<T> r;
    r.v = cos(x.v);
    T ms = -sin(x.v);
    for (int i = 0; i < 3; ++i) r.g[i] = ms * x.g[i];
    return r;
}
template <class T>
Dual3<T> log(const Dual3<T>& x) {
    Dual3<T> r;
    r.v = log(x.v);
    for (int i = 0; i < 3; ++i) r.g[i] = x.g[i] / x.v;
    return r;
}
template <class T>
Dual3<T> atan(const Dual3<T>& x) {
    Dual3<T> r;
    r.v = atan(x.v);
    T d = 1.0 + x.v * x.v;
    for (int i = 0; i < 3; ++i) r.g[i] = x.g[i] / d;
    return r;
}
template <class T>
Dual3<T> atan2(const Dual3<T>& y, const Dual3<T>& x) {
    Dual3<T> r;
    r.v = atan2(y.v, x.v);
    T d = x.v * x.v + y.v * y.v;
    for (int i = 0; i < 3; ++i) r.g[i] = (x.v * y.g[i] - y.v * x.g[i]) / d;
    return r;
}

template <class T>
T ipow(const T& x, int n) {
    T r(1.0);
    for (int i = 0; i < n; ++i) r = r * x;
    return r;
}

} // namespace inextensa
