#include "inextensa/families.hpp"

#include <cmath>

#include "inextensa/diffgeo.hpp"

namespace inextensa::families {

namespace {
constexpr double kOffsetMargin = 1e-6;

double min_abs_on_interval(double offset, double lo, double hi) {
    double a = lo + offset, b = hi + offset;
    if (a <= 0.0 && b >= 0.0) return 0.0;
    return std::min(std::abs(a), std::abs(b));
}
} // namespace

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::z0: return "z0";
        case Kind::z1: return "z1";
        case Kind::z2: return "z2";
        case Kind::f5z: return "5z";
    }
    return "?";
}

Kind kind_from_name(const std::string& s) {
    if (s == "z0") return Kind::z0;
    if (s == "z1") return Kind::z1;
    if (s == "z2") return Kind::z2;
    if (s == "5z") return Kind::f5z;
    throw InvalidParams("unknown family \"" + s + "\" (expected z0|z1|z2|5z)");
}

Domain default_domain(Kind kind, int n) {
    if (kind == Kind::f5z) return Domain{{0.5, -0.5, 0.0}, {1.5, 0.5, 1.0}, n, n, n};
    return Domain::unit_box(n);
}

void validate(const FamilySpec& spec, const Domain& domain) {
    domain.validate();
    switch (spec.kind) {
        case Kind::z0: {
            const Mat3d& a = spec.z0.a;
            double col3 = a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2) + a(2, 2) * a(2, 2);
            if (std::abs(col3 - 1.0) > 1e-12)
                throw InvalidParams("z0: third column of a must satisfy "
                                    "a13^2 + a23^2 + a33^2 = 1");
            if (!(det(a) > 0.0)) throw InvalidParams("z0: det a must be positive");
            break;
        }
        case Kind::z1: {
            const auto& C = spec.z1.C;
            if (C[0] == 0.0) throw InvalidParams("InvalidParams: C1 must be nonzero");
            if (C[2] == 0.0) throw InvalidParams("InvalidParams: C3 must be nonzero");
            if (min_abs_on_interval(C[3], domain.lo.z, domain.hi.z) < kOffsetMargin)
                throw DomainConflict("z1: |Z + C4| >= 1e-6 must hold on the domain");
            break;
        }
        case Kind::z2: {
            const auto& C = spec.z2.C;
            if (C[1] == 0.0) throw InvalidParams("InvalidParams: C2 must be nonzero");
            if (C[2] == 0.0) throw InvalidParams("InvalidParams: C3 must be nonzero");
            if (min_abs_on_interval(C[4], domain.lo.z, domain.hi.z) < kOffsetMargin)
                throw DomainConflict("z2: |Z + C5| >= 1e-6 must hold on the domain");
            break;
        }
        case Kind::f5z: {
            const auto& p = spec.f5z;
            if (p.C[0] == 0.0) throw InvalidParams("InvalidParams: C1 must be nonzero");
            if (p.sign != 1 && p.sign != -1) throw InvalidParams("5z: sign must be +1 or -1");
            if (!(domain.lo.x > 0.0))
                throw DomainConflict("5z: wedge domain requires X > 0 "
                                     "(principal branch of the angle)");
            if (domain.lo.x < kOffsetMargin)
                throw DomainConflict("5z: R >= 1e-6 must hold on the domain");
            break;
        }
    }
}

DeformationMap make_family(const FamilySpec& spec, const Domain& domain) {
    validate(spec, domain);
    switch (spec.kind) {
        case Kind::z0: {
            Mat3d a = spec.z0.a;
            return make_map(domain, Chart::cartesian, [a](auto X, auto Y, auto Z) {
                using T = decltype(X);
                return Vec3<T>{a(0, 0) * X + a(0, 1) * Y + a(0, 2) * Z,
                               a(1, 0) * X + a(1, 1) * Y + a(1, 2) * Z,
                               a(2, 0) * X + a(2, 1) * Y + a(2, 2) * Z};
            });
        }
        case Kind::z1: {
            auto C = spec.z1.C;
            return make_map(domain, Chart::cartesian, [C](auto X, auto Y, auto Z) {
                using T = decltype(X);
                T ang = C[0] * (X + C[4]);
                T rad = Z + C[3];
                return Vec3<T>{rad * sin(ang) + C[5], C[1] * X + C[2] * Y + C[6],
                               rad * cos(ang) + C[7]};
            });
        }
        case Kind::z2: {
            auto C = spec.z2.C;
            return make_map(domain, Chart::cartesian, [C](auto X, auto Y, auto Z) {
                using T = decltype(X);
                T ang = C[0] * X + C[2] * Y + C[3];
                T rad = Z + C[4];
                return Vec3<T>{rad * sin(ang) + C[5], C[1] * X + C[6], rad * cos(ang) + C[7]};
            });
        }
        case Kind::f5z: {
            auto P = spec.f5z;
            double s = double(P.sign);
            return make_map(domain, Chart::cartesian, [P, s](auto X, auto Y, auto Z) {
                using T = decltype(X);
                T r2 = X * X + Y * Y;
                T r = sqrt(r2);
                T ang = P.C[1] * log(r) * 1.0 + (s / (P.C[0] * P.C[0])) * atan2(Y, X) + P.C[2];
                T rr = P.C[0] * r;
                return Vec3<T>{rr * cos(ang), rr * sin(ang), Z + P.C[3]};
            });
        }
    }
    throw InvalidParams("make_family: bad kind");
}

DeformationMap make_5z_cylindrical(const F5ZParams& p, const Domain& domain_cyl) {
    if (!(domain_cyl.lo.x > 0.0))
        throw DomainConflict("5z cylindrical: chart requires R > 0");
    double s = double(p.sign);
    auto C = p.C;
    return make_map(domain_cyl, Chart::cylindrical, [C, s](auto R, auto Th, auto Z) {
        using T = decltype(R);
        return Vec3<T>{C[0] * R, C[1] * log(R) + (s / (C[0] * C[0])) * Th + C[2], Z + C[3]};
    });
}

namespace {

template <class T>
SymMat3<T> c_z1(const std::array<double, 8>& C, const T& Z) {
    T w = Z + C[3];
    SymMat3<T> c;
    c.xx = C[1] * C[1] + C[0] * C[0] * w * w;
    c.xy = T(C[1] * C[2]);
    c.yy = T(C[2] * C[2]);
    c.zz = T(1.0);
    return c;
}

template <class T>
SymMat3<T> c_z2(const std::array<double, 8>& C, const T& Z) {
    T w = Z + C[4];
    T w2 = w * w;
    SymMat3<T> c;
    c.xx = C[1] * C[1] + C[0] * C[0] * w2;
    c.xy = C[0] * C[2] * w2;
    c.yy = C[2] * C[2] * w2;
    c.zz = T(1.0);
    return c;
}

// Cylindrical components of the 5Z strain as a function of R.
template <class T>
SymMat3<T> c_5z_cyl(const F5ZParams& p, const T& R) {
    SymMat3<T> c;
    double c1 = p.C[0], c2 = p.C[1];
    c.xx = T(c1 * c1 * (1.0 + c2 * c2));
    c.xy = double(p.sign) * c2 * R;
    c.yy = R * R / (c1 * c1);
    c.zz = T(1.0);
    return c;
}

// Cartesian components: C_cart = T^t C_cyl T with T = d(R,Theta,Z)/d(X,Y,Z).
template <class T>
SymMat3<T> c_5z_cart(const F5ZParams& p, const T& X, const T& Y) {
    T r2 = X * X + Y * Y;
    T r = sqrt(r2);
    Mat3<T> t;
    t(0, 0) = X / r;
    t(0, 1) = Y / r;
    t(1, 0) = -1.0 * Y / r2;
    t(1, 1) = X / r2;
    t(2, 2) = T(1.0);
    SymMat3<T> ccyl = c_5z_cyl(p, r);
    return sym(transpose(t) * ccyl.full() * t);
}

} // namespace

SymMat3d closed_form_C(const FamilySpec& spec, const Point3& p) {
    switch (spec.kind) {
        case Kind::z0: {
            const Mat3d& a = spec.z0.a;
            return sym(transpose(a) * a);
        }
        case Kind::z1: return c_z1(spec.z1.C, p.z);
        case Kind::z2: return c_z2(spec.z2.C, p.z);
        case Kind::f5z: return c_5z_cyl(spec.f5z, std::hypot(p.x, p.y));
    }
    throw InvalidParams("closed_form_C: bad kind");
}

SymMat3d closed_form_C_cartesian_5z(const F5ZParams& p, const Point3& pt) {
    return c_5z_cart(p, pt.x, pt.y);
}

double closed_form_J(const FamilySpec& spec, const Point3& p) {
    switch (spec.kind) {
        case Kind::z0: return det(spec.z0.a);
        case Kind::z1: return spec.z1.C[0] * spec.z1.C[2] * (spec.z1.C[3] + p.z);
        case Kind::z2: return -spec.z2.C[1] * spec.z2.C[2] * (spec.z2.C[4] + p.z);
        case Kind::f5z: return double(spec.f5z.sign);
    }
    throw InvalidParams("closed_form_J: bad kind");
}

MetricField metric_field(const FamilySpec& spec, const Domain& domain) {
    validate(spec, domain);
    switch (spec.kind) {
        case Kind::z0: {
            SymMat3d c = closed_form_C(spec, {0, 0, 0});
            return make_metric(domain, Chart::cartesian, [c](auto X, auto, auto) {
                using T = decltype(X);
                SymMat3<T> r;
                r.xx = T(c.xx);
                r.xy = T(c.xy);
                r.xz = T(c.xz);
                r.yy = T(c.yy);
                r.yz = T(c.yz);
                r.zz = T(c.zz);
                return r;
            });
        }
        case Kind::z1: {
            auto C = spec.z1.C;
            return make_metric(domain, Chart::cartesian,
                               [C](auto, auto, auto Z) { return c_z1(C, Z); });
        }
        case Kind::z2: {
            auto C = spec.z2.C;
            return make_metric(domain, Chart::cartesian,
                               [C](auto, auto, auto Z) { return c_z2(C, Z); });
        }
        case Kind::f5z: {
            F5ZParams p = spec.f5z;
            return make_metric(domain, Chart::cartesian,
                               [p](auto X, auto Y, auto) { return c_5z_cart(p, X, Y); });
        }
    }
    throw InvalidParams("metric_field: bad kind");
}

FiberImage fiber_image(const FamilySpec& spec, const Domain& domain, double x0, double y0,
                       int samples) {
    if (samples < 2) throw InvalidParams("fiber_image: need at least 2 samples");
    DeformationMap map = make_family(spec, domain);
    if (!domain.contains({x0, y0, domain.lo.z}))
        throw InvalidParams("fiber_image: fiber base outside domain");

    FiberImage im;
    im.points.reserve(samples);
    im.straightness_defect = 0.0;
    im.speed_defect = 0.0;
    for (int k = 0; k < samples; ++k) {
        double z = domain.lo.z + (domain.hi.z - domain.lo.z) * double(k) / (samples - 1);
        Point3 p{x0, y0, z};
        im.points.push_back(map.e0(p));
        Mat3d f = diffgeo::deformation_gradient(map, p);
        Vec3<double> dphi{f(0, 2), f(1, 2), f(2, 2)};
        im.speed_defect = std::max(im.speed_defect, std::abs(norm(dphi) - 1.0));
    }
    Vec3<double> chord = im.points.back() - im.points.front();
    double clen = norm(chord);
    if (clen > 0) {
        Vec3<double> dir = chord * (1.0 / clen);
        for (const Point3& q : im.points) {
            Vec3<double> d = q - im.points.front();
            Vec3<double> off = d - dir * dot(dir, d);
            im.straightness_defect = std::max(im.straightness_defect, norm(off));
        }
    }
    return im;
}

} // namespace inextensa::families
