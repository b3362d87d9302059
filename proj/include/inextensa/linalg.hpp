#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "inextensa/dual.hpp"

namespace inextensa {

template <class T>
struct Vec3 {
    T x{}, y{}, z{};

    T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

template <class T>
Vec3<T> operator+(const Vec3<T>& a, const Vec3<T>& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
template <class T>
Vec3<T> operator-(const Vec3<T>& a, const Vec3<T>& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
template <class T, class S>
Vec3<T> operator*(const Vec3<T>& a, S s) { return {a.x * s, a.y * s, a.z * s}; }
template <class T, class S>
Vec3<T> operator*(S s, const Vec3<T>& a) { return a * s; }
template <class T>
T dot(const Vec3<T>& a, const Vec3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3<double>& a) { return std::sqrt(dot(a, a)); }
inline double max_abs(const Vec3<double>& a) {
    return std::max({std::abs(a.x), std::abs(a.y), std::abs(a.z)});
}

// Row-major dense 3x3.  a(i,j) is row i, column j.
template <class T>
struct Mat3 {
    std::array<T, 9> m{};

    T& operator()(int i, int j) { return m[3 * i + j]; }
    const T& operator()(int i, int j) const { return m[3 * i + j]; }

    static Mat3 identity() {
        Mat3 r;
        r(0, 0) = T(1.0);
        r(1, 1) = T(1.0);
        r(2, 2) = T(1.0);
        return r;
    }
};

// Symmetric 3x3 held in six slots; symmetry is structural, not numeric.
template <class T>
struct SymMat3 {
    T xx{}, xy{}, xz{}, yy{}, yz{}, zz{};

    const T& operator()(int i, int j) const {
        if (i > j) std::swap(i, j);
        if (i == 0) return j == 0 ? xx : (j == 1 ? xy : xz);
        if (i == 1) return j == 1 ? yy : yz;
        return zz;
    }
    T& slot(int i, int j) {
        if (i > j) std::swap(i, j);
        if (i == 0) return j == 0 ? xx : (j == 1 ? xy : xz);
        if (i == 1) return j == 1 ? yy : yz;
        return zz;
    }

    static SymMat3 identity() {
        SymMat3 r;
        r.xx = T(1.0);
        r.yy = T(1.0);
        r.zz = T(1.0);
        return r;
    }
    static SymMat3 diag(const T& a, const T& b, const T& c) {
        SymMat3 r;
        r.xx = a;
        r.yy = b;
        r.zz = c;
        return r;
    }

    Mat3<T> full() const {
        Mat3<T> r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(i, j);
        return r;
    }
};

using Mat3d = Mat3<double>;
using SymMat3d = SymMat3<double>;
using Point3 = Vec3<double>;

template <class T>
Mat3<T> operator+(const Mat3<T>& a, const Mat3<T>& b) {
    Mat3<T> r;
    for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] + b.m[i];
    return r;
}
template <class T>
Mat3<T> operator-(const Mat3<T>& a, const Mat3<T>& b) {
    Mat3<T> r;
    for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] - b.m[i];
    return r;
}
template <class T, class S>
Mat3<T> operator*(const Mat3<T>& a, S s) {
    Mat3<T> r;
    for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] * s;
    return r;
}
template <class T, class S>
Mat3<T> operator*(S s, const Mat3<T>& a) { return a * s; }

template <class T>
Mat3<T> operator*(const Mat3<T>& a, const Mat3<T>& b) {
    Mat3<T> r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
    return r;
}
template <class T>
Vec3<T> operator*(const Mat3<T>& a, const Vec3<T>& v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

template <class T>
Mat3<T> transpose(const Mat3<T>& a) {
    Mat3<T> r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = a(j, i);
    return r;
}

template <class T>
T det(const Mat3<T>& a) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}
template <class T>
T trace(const Mat3<T>& a) { return a(0, 0) + a(1, 1) + a(2, 2); }

template <class T>
Mat3<T> inverse(const Mat3<T>& a) {
    T d = det(a);
    Mat3<T> r;
    r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / d;
    r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / d;
    r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / d;
    r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / d;
    r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / d;
    r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / d;
    r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / d;
    r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / d;
    r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / d;
    return r;
}

template <class T>
T det(const SymMat3<T>& a) {
    return a.xx * (a.yy * a.zz - a.yz * a.yz) - a.xy * (a.xy * a.zz - a.yz * a.xz) +
           a.xz * (a.xy * a.yz - a.yy * a.xz);
}
template <class T>
T trace(const SymMat3<T>& a) { return a.xx + a.yy + a.zz; }

template <class T>
SymMat3<T> inverse(const SymMat3<T>& a) {
    T d = det(a);
    SymMat3<T> r;
    r.xx = (a.yy * a.zz - a.yz * a.yz) / d;
    r.xy = (a.xz * a.yz - a.xy * a.zz) / d;
    r.xz = (a.xy * a.yz - a.xz * a.yy) / d;
    r.yy = (a.xx * a.zz - a.xz * a.xz) / d;
    r.yz = (a.xy * a.xz - a.xx * a.yz) / d;
    r.zz = (a.xx * a.yy - a.xy * a.xy) / d;
    return r;
}

template <class T>
SymMat3<T> operator+(const SymMat3<T>& a, const SymMat3<T>& b) {
    SymMat3<T> r;
    r.xx = a.xx + b.xx;
    r.xy = a.xy + b.xy;
    r.xz = a.xz + b.xz;
    r.yy = a.yy + b.yy;
    r.yz = a.yz + b.yz;
    r.zz = a.zz + b.zz;
    return r;
}
template <class T>
SymMat3<T> operator-(const SymMat3<T>& a, const SymMat3<T>& b) {
    SymMat3<T> r;
    r.xx = a.xx - b.xx;
    r.xy = a.xy - b.xy;
    r.xz = a.xz - b.xz;
    r.yy = a.yy - b.yy;
    r.yz = a.yz - b.yz;
    r.zz = a.zz - b.zz;
    return r;
}
template <class T, class S>
SymMat3<T> operator*(const SymMat3<T>& a, S s) {
    SymMat3<T> r;
    r.xx = a.xx * s;
    r.xy = a.xy * s;
    r.xz = a.xz * s;
    r.yy = a.yy * s;
    r.yz = a.yz * s;
    r.zz = a.zz * s;
    return r;
}
template <class T, class S>
SymMat3<T> operator*(S s, const SymMat3<T>& a) { return a * s; }

template <class T>
Vec3<T> operator*(const SymMat3<T>& a, const Vec3<T>& v) {
    return {a.xx * v.x + a.xy * v.y + a.xz * v.z,
            a.xy * v.x + a.yy * v.y + a.yz * v.z,
            a.xz * v.x + a.yz * v.y + a.zz * v.z};
}

// Symmetric part of a product that is symmetric analytically.
template <class T>
SymMat3<T> sym(const Mat3<T>& a) {
    SymMat3<T> r;
    r.xx = a(0, 0);
    r.yy = a(1, 1);
    r.zz = a(2, 2);
    r.xy = (a(0, 1) + a(1, 0)) * 0.5;
    r.xz = (a(0, 2) + a(2, 0)) * 0.5;
    r.yz = (a(1, 2) + a(2, 1)) * 0.5;
    return r;
}

inline double max_abs(const Mat3d& a) {
    double r = 0;
    for (double v : a.m) r = std::max(r, std::abs(v));
    return r;
}
inline double max_abs(const SymMat3d& a) {
    return std::max({std::abs(a.xx), std::abs(a.xy), std::abs(a.xz), std::abs(a.yy),
                     std::abs(a.yz), std::abs(a.zz)});
}

inline double orthogonality_defect(const Mat3d& r) {
    return max_abs(sym(transpose(r) * r) - SymMat3d::identity());
}

// Seed the independent variables; nest for higher orders.
template <class T>
Vec3<Dual3<T>> seed_point(const Vec3<T>& p) {
    Vec3<Dual3<T>> q;
    q.x.v = p.x;
    q.y.v = p.y;
    q.z.v = p.z;
    q.x.g[0] = T(1.0);
    q.y.g[1] = T(1.0);
    q.z.g[2] = T(1.0);
    return q;
}

} // namespace inextensa
