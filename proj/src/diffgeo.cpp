#include "inextensa/diffgeo.hpp"

#include <algorithm>
#include <cmath>

namespace inextensa::diffgeo {

namespace {
constexpr double kSpdTol = 1e-14;
constexpr double kPi = 3.14159265358979323846;
} // namespace

void require_spd(const SymMat3d& c, const char* what) {
    double m1 = c.xx;
    double m2 = c.xx * c.yy - c.xy * c.xy;
    double m3 = det(c);
    if (!(m1 > kSpdTol && m2 > kSpdTol && m3 > kSpdTol))
        throw SingularMetric(std::string(what) +
                             ": leading minors must exceed 1e-14 (got " + std::to_string(m1) +
                             ", " + std::to_string(m2) + ", " + std::to_string(m3) + ")");
}

MetricEval eval_metric(const MetricField& metric, const Point3& p) {
    metric.domain.require_inside(p);
    MetricEval e = flatten(metric.e2(seed_point(seed_point(p))));
    require_spd(e.value);
    return e;
}

Christoffel christoffel_of(const MetricEval& e) {
    SymMat3d cinv = inverse(e.value);
    Christoffel gamma{};
    for (int C = 0; C < 3; ++C)
        for (int A = 0; A < 3; ++A)
            for (int B = A; B < 3; ++B) {
                double s = 0;
                for (int D = 0; D < 3; ++D)
                    s += cinv(C, D) * (e.d[A](B, D) + e.d[B](A, D) - e.d[D](A, B));
                gamma[C][A][B] = 0.5 * s;
                gamma[C][B][A] = gamma[C][A][B];
            }
    return gamma;
}

Christoffel christoffel(const MetricField& metric, const Point3& p) {
    return christoffel_of(eval_metric(metric, p));
}

SymMat3d ricci_of(const MetricEval& e) {
    SymMat3d cinv = inverse(e.value);
    Christoffel gamma = christoffel_of(e);

    // dGamma[E][C][A][B] = d_E Gamma^C_AB, with
    // d_E C^{CD} = -C^{CM} (d_E C_MN) C^{ND}.
    std::array<SymMat3d, 3> dcinv;
    for (int E = 0; E < 3; ++E) {
        Mat3d t = cinv.full() * e.d[E].full() * cinv.full();
        dcinv[E] = sym(t) * -1.0;
    }
    auto dgamma = [&](int E, int C, int A, int B) {
        double s = 0;
        for (int D = 0; D < 3; ++D) {
            s += dcinv[E](C, D) * (e.d[A](B, D) + e.d[B](A, D) - e.d[D](A, B));
            s += cinv(C, D) * (e.dd[A][E](B, D) + e.dd[B][E](A, D) - e.dd[D][E](A, B));
        }
        return 0.5 * s;
    };

    SymMat3d ric;
    for (int A = 0; A < 3; ++A)
        for (int B = A; B < 3; ++B) {
            double s = 0;
            for (int C = 0; C < 3; ++C) s += dgamma(A, C, C, B) - dgamma(C, C, A, B);
            for (int C = 0; C < 3; ++C)
                for (int D = 0; D < 3; ++D)
                    s += gamma[C][A][D] * gamma[D][C][B] - gamma[C][C][D] * gamma[D][A][B];
            ric.slot(A, B) = s;
        }
    return ric;
}

SymMat3d ricci(const MetricField& metric, const Point3& p) {
    return ricci_of(eval_metric(metric, p));
}

Mat3d deformation_gradient(const DeformationMap& map, const Point3& p) {
    map.domain.require_inside(p);
    Vec3<D1> phi = map.e1(seed_point(p));
    Mat3d f;
    for (int a = 0; a < 3; ++a)
        for (int A = 0; A < 3; ++A) f(a, A) = phi[a].g[A];
    return f;
}

SymMat3d right_cauchy_green(const DeformationMap& map, const Point3& p) {
    map.domain.require_inside(p);
    Mat3d f = deformation_gradient(map, p);
    if (std::abs(det(f)) <= kSpdTol)
        throw SingularMap("right_cauchy_green: |det F| <= 1e-14");
    return pullback_metric(map, p);
}

Invariants invariants(const SymMat3d& c, const SymMat3d& g) {
    require_spd(c, "strain");
    require_spd(g, "reference metric");
    Vec3<double> i = invariants_t(c, g);
    return {i.x, i.y, i.z};
}

double jacobian_det(const Mat3d& f, const SymMat3d& G, const SymMat3d& g) {
    require_spd(G, "reference metric");
    require_spd(g, "ambient metric");
    return std::sqrt(det(g) / det(G)) * det(f);
}

namespace {

// Analytic eigendecomposition of a symmetric 3x3 matrix: trigonometric
// solution of the characteristic cubic with clamped acos, eigenvectors from
// cross products of rows with a rank-deficiency fallback.
Vec3<double> eigenvalues_sym(const SymMat3d& a) {
    double p1 = a.xy * a.xy + a.xz * a.xz + a.yz * a.yz;
    double q = trace(a) / 3.0;
    if (p1 == 0.0) {
        std::array<double, 3> l{a.xx, a.yy, a.zz};
        std::sort(l.begin(), l.end(), std::greater<>());
        return {l[0], l[1], l[2]};
    }
    double p2 = (a.xx - q) * (a.xx - q) + (a.yy - q) * (a.yy - q) + (a.zz - q) * (a.zz - q) +
                2.0 * p1;
    double p = std::sqrt(p2 / 6.0);
    SymMat3d b = (a - SymMat3d::diag(q, q, q)) * (1.0 / p);
    double r = det(b) / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    double l1 = q + 2.0 * p * std::cos(phi);
    double l3 = q + 2.0 * p * std::cos(phi + 2.0 * kPi / 3.0);
    double l2 = 3.0 * q - l1 - l3;
    return {l1, l2, l3};
}

Vec3<double> normalized_or(const Vec3<double>& v, const Vec3<double>& fallback) {
    double n = norm(v);
    if (n < 1e-300) return fallback;
    return v * (1.0 / n);
}

// Eigenvector for eigenvalue lambda: the largest cross product of two rows of
// (A - lambda I) spans the null direction; degenerate pairs fall back to any
// unit vector orthogonal to the dominant row.
Vec3<double> eigenvector_sym(const SymMat3d& a, double lambda, double scale) {
    Mat3d m = a.full() - (SymMat3d::diag(lambda, lambda, lambda)).full();
    Vec3<double> rows[3] = {{m(0, 0), m(0, 1), m(0, 2)},
                            {m(1, 0), m(1, 1), m(1, 2)},
                            {m(2, 0), m(2, 1), m(2, 2)}};
    Vec3<double> c01 = cross(rows[0], rows[1]);
    Vec3<double> c02 = cross(rows[0], rows[2]);
    Vec3<double> c12 = cross(rows[1], rows[2]);
    double n01 = norm(c01), n02 = norm(c02), n12 = norm(c12);
    double nmax = std::max({n01, n02, n12});
    if (nmax > 1e-14 * scale * scale) {
        if (nmax == n01) return c01 * (1.0 / n01);
        if (nmax == n02) return c02 * (1.0 / n02);
        return c12 * (1.0 / n12);
    }
    // (A - lambda I) is (numerically) rank <= 1: pick orthogonal to its
    // largest row, or any axis if the matrix vanished.
    int imax = 0;
    double rmax = norm(rows[0]);
    for (int i = 1; i < 3; ++i)
        if (norm(rows[i]) > rmax) rmax = norm(rows[i]), imax = i;
    if (rmax < 1e-14 * scale) return {1, 0, 0};
    Vec3<double> r0 = rows[imax] * (1.0 / rmax);
    Vec3<double> t = std::abs(r0.x) < 0.9 ? Vec3<double>{1, 0, 0} : Vec3<double>{0, 1, 0};
    return normalized_or(cross(r0, t), {0, 0, 1});
}

} // namespace

Eigen3 sym_eigen(const SymMat3d& a) {
    Vec3<double> l = eigenvalues_sym(a);
    double scale = std::max({std::abs(l.x), std::abs(l.y), std::abs(l.z), 1e-30});
    Eigen3 e;
    e.lambda = l;
    // Isotropic to roundoff: any orthonormal frame diagonalizes.
    if (l.x - l.z <= 1e-12 * scale) {
        e.V = Mat3d::identity();
        return e;
    }
    // Start from the extreme eigenvalue with the larger spectral gap; its
    // eigenvector is the best conditioned one.
    bool top = (l.x - l.y) >= (l.y - l.z);
    Vec3<double> v_first = eigenvector_sym(a, top ? l.x : l.z, scale);
    Vec3<double> v_second = eigenvector_sym(a, top ? l.z : l.x, scale);
    v_second = v_second - v_first * dot(v_first, v_second);
    double n = norm(v_second);
    if (n < 1e-6) {
        Vec3<double> t = std::abs(v_first.x) < 0.9 ? Vec3<double>{1, 0, 0}
                                                   : Vec3<double>{0, 1, 0};
        v_second = normalized_or(cross(v_first, t), {0, 0, 1});
    } else {
        v_second = v_second * (1.0 / n);
    }
    Vec3<double> v1 = top ? v_first : v_second;
    Vec3<double> v3 = top ? v_second : v_first;
    Vec3<double> v2 = cross(v3, v1);
    for (int i = 0; i < 3; ++i) {
        e.V(i, 0) = v1[i];
        e.V(i, 1) = v2[i];
        e.V(i, 2) = v3[i];
    }
    return e;
}

SpdSqrt spd_sqrt(const SymMat3d& c) {
    require_spd(c, "spd_sqrt");
    if (c.xy == 0.0 && c.xz == 0.0 && c.yz == 0.0) {
        SymMat3d u = SymMat3d::diag(std::sqrt(c.xx), std::sqrt(c.yy), std::sqrt(c.zz));
        SymMat3d uinv = SymMat3d::diag(1.0 / u.xx, 1.0 / u.yy, 1.0 / u.zz);
        return {u, uinv};
    }
    Eigen3 e = sym_eigen(c);
    Vec3<double> s{std::sqrt(e.lambda.x), std::sqrt(e.lambda.y), std::sqrt(e.lambda.z)};
    Mat3d u, uinv;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double a = 0, b = 0;
            for (int k = 0; k < 3; ++k) {
                a += e.V(i, k) * s[k] * e.V(j, k);
                b += e.V(i, k) / s[k] * e.V(j, k);
            }
            u(i, j) = a;
            uinv(i, j) = b;
        }
    return {sym(u), sym(uinv)};
}

MetricSqrt metric_sqrt(const MetricEval& e) {
    Eigen3 eg = sym_eigen(e.value);
    Vec3<double> s{std::sqrt(eg.lambda.x), std::sqrt(eg.lambda.y), std::sqrt(eg.lambda.z)};
    MetricSqrt r;
    {
        SpdSqrt u = spd_sqrt(e.value);
        r.U = u.U;
        r.Uinv = u.Uinv;
    }
    // dU from the Sylvester equation dU U + U dU = dC, diagonal in the
    // eigenbasis of U: (V^T dU V)_ij = (V^T dC V)_ij / (s_i + s_j).
    for (int A = 0; A < 3; ++A) {
        Mat3d rhs = transpose(eg.V) * e.d[A].full() * eg.V;
        Mat3d du;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) du(i, j) = rhs(i, j) / (s[i] + s[j]);
        r.dU[A] = sym(eg.V * du * transpose(eg.V));
    }
    return r;
}

Principal2x2 principal_decomposition_2x2(double c11, double c12, double c22) {
    if (!(c11 > kSpdTol && c11 * c22 - c12 * c12 > kSpdTol))
        throw NotSPD("principal_decomposition_2x2: block is not SPD");
    double mean = 0.5 * (c11 + c22);
    double diff = 0.5 * (c11 - c22);
    double rad = std::sqrt(diff * diff + c12 * c12);
    double theta = (c12 == 0.0 && diff >= 0.0) ? 0.0 : 0.5 * std::atan2(2.0 * c12, c11 - c22);
    return {mean + rad, mean - rad, theta};
}

std::pair<SymMat3d, SymMat3d> raise_indices(const SymMat3d& c, const SymMat3d& g) {
    require_spd(c, "strain");
    require_spd(g, "reference metric");
    SymMat3d ginv = inverse(g);
    SymMat3d craised = sym(ginv.full() * c.full() * ginv.full());
    SymMat3d braised = inverse(c);
    return {craised, braised};
}

Mat3d polar_project(const Mat3d& m) {
    SpdSqrt s = spd_sqrt(sym(transpose(m) * m));
    return m * s.Uinv.full();
}

} // namespace inextensa::diffgeo
