#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "inextensa/compat.hpp"
#include "inextensa/diffgeo.hpp"
#include "inextensa/families.hpp"
#include "support/generators.hpp"

using namespace inextensa;
using namespace inextensa::compat;
using testsupport::random_family;
using testsupport::random_rotation;

namespace {

MetricAnsatzZ const_ansatz(double f, double g, double h) {
    MetricAnsatzZ a;
    a.f = constant_zfn(f);
    a.g = constant_zfn(g);
    a.h = constant_zfn(h);
    return a;
}

MetricField bending_metric(double a0, double a1, double b0, const Domain& d) {
    return make_metric(d, Chart::cartesian, [=](auto X, auto, auto Z) {
        using T = decltype(X);
        (void)X;
        T lam = a0 + a1 * Z;
        return SymMat3<T>::diag(lam * lam, T(b0 * b0), T(1.0));
    });
}

} // namespace

TEST_CASE("ricci_ode_residuals: constants, the first branch, and a pinned negative") {
    auto r = ricci_ode_residuals(const_ansatz(1, 0, 1), 0.3);
    for (double v : r) CHECK(v == 0.0);

    // (f, g, h) = (C2^2 + C1^2 (Z+C4)^2, C2 C3, C3^2) solves all four.
    MetricAnsatzZ b1 = branch1_ansatz(1.3, 0.4, 0.9, 0.2, 0, 1);
    for (double z : {0.0, 0.35, 0.8}) {
        auto rr = ricci_ode_residuals(b1, z);
        for (double v : rr) CHECK(std::abs(v) < 1e-12);
    }

    // (f, g, h) = (1 + Z^2, 0, 1): residual_1 = 2 f f'' - f'^2 = 4.
    MetricAnsatzZ neg;
    neg.f = poly_zfn({1, 0, 1});
    neg.g = constant_zfn(0);
    neg.h = constant_zfn(1);
    for (double z : {0.0, 0.5, 1.0})
        CHECK(ricci_ode_residuals(neg, z)[0] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("solve_second_derivatives: pinned values and branch fixed point") {
    auto s = solve_second_derivatives(1, 0, 1, 0, 0, 0);
    CHECK(s[0] == 0.0);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.0);

    s = solve_second_derivatives(2, 1, 1, 2, 1, 0);
    CHECK(s[0] == doctest::Approx(2.0));
    CHECK(s[1] == doctest::Approx(1.0));
    CHECK(s[2] == doctest::Approx(1.0));

    // Branch-1 data at Z = 1: f'' = 2 C1^2, g'' = h'' = 0.
    double c1 = 0.7, c2 = 0.5, c3 = 2.0;
    double z = 1.0;
    double f = c2 * c2 + c1 * c1 * z * z, g = c2 * c3, h = c3 * c3;
    double fp = 2 * c1 * c1 * z;
    s = solve_second_derivatives(f, g, h, fp, 0, 0);
    CHECK(s[0] == doctest::Approx(2 * c1 * c1).epsilon(1e-12));
    CHECK(std::abs(s[1]) < 1e-12);
    CHECK(std::abs(s[2]) < 1e-12);

    CHECK_THROWS_AS(solve_second_derivatives(1, 1, 1, 0, 0, 0), DegenerateDenominator);
}

TEST_CASE("solve_second_derivatives zeroes the first three residuals") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        double f = rng.uniform(0.5, 3.0), h = rng.uniform(0.5, 3.0);
        double g = rng.uniform(-0.9, 0.9) * std::sqrt(f * h);
        double fp = rng.uniform(-2, 2), gp = rng.uniform(-2, 2), hp = rng.uniform(-2, 2);
        auto [fpp, gpp, hpp] = solve_second_derivatives(f, g, h, fp, gp, hp);
        // Substitute back into the displayed polynomials.
        double r1 = 2 * f * h * fpp + f * fp * hp - 2 * f * gp * gp - 2 * g * g * fpp +
                    2 * g * fp * gp - h * fp * fp;
        double r2 = 2 * h * gp * gp - h * fp * hp - 2 * g * gp * hp + f * hp * hp +
                    2 * g * g * hpp - 2 * f * h * hpp;
        double r3 = h * fp * gp - 2 * g * fp * hp + f * gp * hp + 2 * g * g * gpp -
                    2 * f * h * gpp;
        CHECK(std::abs(r1) < 1e-12 * (1 + std::abs(fpp)));
        CHECK(std::abs(r2) < 1e-12 * (1 + std::abs(hpp)));
        CHECK(std::abs(r3) < 1e-12 * (1 + std::abs(gpp)));
    }
}

TEST_CASE("reduced_flatness: constants, both branches, pinned negative") {
    CHECK(reduced_flatness(const_ansatz(2, 0.3, 1.5), 0.4) == 0.0);
    MetricAnsatzZ b2 = branch2_ansatz(0.8, 0.6, 1.1, 0.3, 0, 1);
    for (double z : {0.1, 0.6, 0.95}) CHECK(std::abs(reduced_flatness(b2, z)) < 1e-12);

    MetricAnsatzZ neg;
    neg.f = poly_zfn({1, 0, 1});
    neg.g = poly_zfn({0, 1});
    neg.h = constant_zfn(1);
    CHECK(reduced_flatness(neg, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("frame_scalars: pinned examples") {
    // a = Z, b = 0, c = 1 on Z > 0.
    CoframeZ cf;
    cf.zlo = 0.5;
    cf.zhi = 2.0;
    cf.a = poly_zfn({0, 1});
    cf.b = constant_zfn(0);
    cf.c = constant_zfn(1);
    auto s = frame_scalars_at(cf, 1.25);
    CHECK(s[0] == doctest::Approx(1.0 / 1.25).epsilon(1e-14));
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.0);

    // a = C2, b = C3 (Z + C4), c = C1 (Z + C4): the second branch.
    double c1 = 1.4, c2 = 0.8, c3 = 0.5, c4 = 0.25;
    CoframeZ b2 = branch2_coframe(c1, c2, c3, c4, 0, 1);
    s = frame_scalars_at(b2, 0.5);
    CHECK(s[0] == doctest::Approx(0.0));
    CHECK(s[1] == doctest::Approx(1.0 / (0.5 + c4)).epsilon(1e-14));
    CHECK(std::abs(s[2]) < 1e-15);

    CoframeZ constant;
    constant.a = constant_zfn(1.5);
    constant.b = constant_zfn(0.3);
    constant.c = constant_zfn(0.9);
    s = frame_scalars_at(constant, 0.7);
    CHECK(s[0] == 0.0);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.0);
}

TEST_CASE("structural_residuals: both solution branches vanish, constant psi fails") {
    auto branchy = [](bool xi_branch, double c0) {
        FrameScalars s;
        if (xi_branch) {
            s.xi = make_zfn([c0](auto z) { return 1.0 / (z + c0); });
            s.eta = constant_zfn(0);
        } else {
            s.xi = constant_zfn(0);
            s.eta = make_zfn([c0](auto z) { return 1.0 / (z + c0); });
        }
        s.psi = constant_zfn(0);
        return s;
    };
    for (double z : {0.0, 0.4, 0.9}) {
        auto r1 = structural_residuals(branchy(true, 0.5), z);
        auto r2 = structural_residuals(branchy(false, 0.5), z);
        for (double v : r1) CHECK(std::abs(v) < 1e-14);
        for (double v : r2) CHECK(std::abs(v) < 1e-14);
    }

    FrameScalars bad;
    bad.xi = constant_zfn(0);
    bad.eta = constant_zfn(0);
    double psi0 = 0.8;
    bad.psi = constant_zfn(psi0);
    auto r = structural_residuals(bad, 0.3);
    CHECK(r[0] == doctest::Approx(psi0 * psi0));
}

TEST_CASE("moving-frame and coordinate flatness residuals vanish together") {
    Rng rng(11);
    int agreements = 0;
    for (int t = 0; t < 200; ++t) {
        bool solution = t % 2 == 0;
        CoframeZ cf;
        cf.zlo = 0;
        cf.zhi = 1;
        if (solution) {
            double c1 = rng.signed_uniform(0.4, 1.5), c2 = rng.signed_uniform(0.4, 1.5);
            double c3 = rng.uniform(-1, 1), c4 = rng.uniform(0.3, 1.2);
            cf = t % 4 == 0 ? branch1_coframe(c1, c2, c3, c4, 0, 1)
                            : branch2_coframe(c1, c2, c3, c4, 0, 1);
        } else {
            cf.a = poly_zfn({rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5),
                             rng.uniform(-0.3, 0.3)});
            cf.b = poly_zfn({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
            cf.c = poly_zfn({rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5)});
        }
        double z = rng.uniform(0.05, 0.95);
        FrameScalars fs = frame_scalars(cf);
        auto sr = structural_residuals(fs, z);
        double smax = 0;
        for (double v : sr) smax = std::max(smax, std::abs(v));
        MetricAnsatzZ az = ansatz_from_coframe(cf);
        auto rr = ricci_ode_residuals(az, z);
        double rmax = 0;
        for (double v : rr) rmax = std::max(rmax, std::abs(v));
        CHECK((smax <= 1e-10) == (rmax <= 1e-9));
        if ((smax <= 1e-10) == solution) ++agreements;
    }
    CHECK(agreements == 200);
}

TEST_CASE("residual consistency with the curvature of the assembled field") {
    // Both residual routes must share their zero set on sampled ansatz data.
    Rng rng(13);
    Domain d = Domain::unit_box(3);
    for (int t = 0; t < 200; ++t) {
        bool solution = t % 2 == 0;
        MetricAnsatzZ az;
        if (solution) {
            double c1 = rng.signed_uniform(0.4, 1.5), c2 = rng.uniform(-1, 1);
            double c3 = rng.signed_uniform(0.4, 1.5), c4 = rng.uniform(0.3, 1.2);
            az = t % 4 == 0 ? branch1_ansatz(c1, c2, c3, c4, 0, 1)
                            : branch2_ansatz(c1, c2, c3, c4, 0, 1);
        } else {
            // Solidly curved negatives keep both residual routes clear of
            // the pass thresholds.
            az.f = poly_zfn({rng.uniform(1.2, 2), rng.uniform(-0.4, 0.4),
                             rng.signed_uniform(0.3, 0.6)});
            az.g = poly_zfn({rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3)});
            az.h = poly_zfn({rng.uniform(1.2, 2), rng.signed_uniform(0.2, 0.4)});
        }
        double z = rng.uniform(0.05, 0.95);
        auto rr = ricci_ode_residuals(az, z);
        double rmax = 0;
        for (double v : rr) rmax = std::max(rmax, std::abs(v));
        MetricField m = metric_from_ansatz(az, d);
        double ricmax = max_abs(diffgeo::ricci(m, {0.5, 0.5, z}));
        CHECK((rmax <= 1e-9) == (ricmax <= 1e-9));
    }
}

TEST_CASE("integrate_flat_ansatz: branch trajectories match the closed forms") {
    // branch 1 initial data.  The strain is SPD only away from Z = -C4
    // (the planar determinant is C1^2 C3^2 (Z + C4)^2), so the offset keeps
    // the initial state inside the SPD region.
    {
        double c1 = 1.0, c2 = 0.5, c3 = 2.0, c4 = 0.3;
        std::array<double, 6> y0{c2 * c2 + c1 * c1 * c4 * c4, c2 * c3, c3 * c3,
                                 2 * c1 * c1 * c4, 0, 0};
        auto res = integrate_flat_ansatz(y0, 0.0, 1.0, 1000);
        CHECK(res.best.branch == "branch1");
        CHECK(res.best.max_deviation < 1e-8);
        CHECK(!res.homogeneous);
    }
    // branch 2 initial data
    {
        double c1 = 0.9, c2 = 0.7, c3 = 1.2, c4 = 0.4;
        auto at = [&](double z) {
            double w = z + c4;
            return std::array<double, 6>{c2 * c2 + c1 * c1 * w * w, c1 * c3 * w * w,
                                         c3 * c3 * w * w, 2 * c1 * c1 * w, 2 * c1 * c3 * w,
                                         2 * c3 * c3 * w};
        };
        auto res = integrate_flat_ansatz(at(0.0), 0.0, 1.0, 1000);
        CHECK(res.best.branch == "branch2");
        CHECK(res.best.max_deviation < 1e-8);
    }
    // constant data: homogeneous flag, degenerate branch-1 fit with C1 = 0
    {
        std::array<double, 6> y0{1.5, 0.2, 1.1, 0, 0, 0};
        auto res = integrate_flat_ansatz(y0, 0.0, 1.0, 200);
        CHECK(res.homogeneous);
        CHECK(res.best.branch == "branch1");
        CHECK(res.best.C[0] == 0.0);
        for (const auto& st : res.trajectory) {
            CHECK(st.y[0] == doctest::Approx(1.5));
            CHECK(st.y[2] == doctest::Approx(1.1));
        }
    }
    // inconsistent initial data is rejected
    {
        std::array<double, 6> y0{1.0, 0.0, 1.0, 1.0, 0.0, -1.0}; // g'^2 - f'h' = 1
        CHECK_THROWS_AS(integrate_flat_ansatz(y0, 0.0, 1.0, 100), InconsistentInitialData);
    }
}

TEST_CASE("connection_omega: bending metric values and skewness") {
    Domain d = Domain::unit_box(5);
    double a1 = 1.0;
    MetricField m = bending_metric(1.0, a1, 1.5, d);
    Omega om = connection_omega(m, {0.3, 0.3, 0.4});
    CHECK(om[0][2][0] == doctest::Approx(a1).epsilon(1e-12)); // Omega^1_31
    CHECK(om[2][0][0] == doctest::Approx(-a1).epsilon(1e-12)); // Omega^3_11
    // identity metric: all zero
    MetricField id = make_metric(d, Chart::cartesian, [](auto X, auto, auto) {
        using T = decltype(X);
        (void)X;
        return SymMat3<T>::identity();
    });
    Omega z = connection_omega(id, {0.5, 0.5, 0.5});
    double zmax = 0;
    for (int c = 0; c < 3; ++c)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) zmax = std::max(zmax, std::abs(z[c][a][b]));
    CHECK(zmax == 0.0);

    // K = Omega . direction is skew for the z2 strain.
    Rng rng(17);
    families::FamilySpec spec = random_family(families::Kind::z2, rng);
    MetricField mz2 = families::metric_field(spec, d);
    for (int t = 0; t < 5; ++t) {
        Point3 p{rng.uniform01(), rng.uniform01(), rng.uniform01()};
        Vec3<double> dir{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Omega o = connection_omega(mz2, p);
        Mat3d k;
        for (int c = 0; c < 3; ++c)
            for (int a = 0; a < 3; ++a)
                k(c, a) = o[c][a][0] * dir.x + o[c][a][1] * dir.y + o[c][a][2] * dir.z;
        CHECK(max_abs(k + transpose(k)) < 1e-11);
    }
}

TEST_CASE("rodrigues_exp: identity, pinned plane rotation, inverse property") {
    CHECK(max_abs(rodrigues_exp(Mat3d{}, 1.0) - Mat3d::identity()) == 0.0);

    double kk = 0.8;
    Mat3d k{};
    k(0, 2) = kk;
    k(2, 0) = -kk;
    Mat3d r = rodrigues_exp(k, 1.0);
    CHECK(r(0, 0) == doctest::Approx(std::cos(kk)).epsilon(1e-14));
    CHECK(r(0, 2) == doctest::Approx(std::sin(kk)).epsilon(1e-14));
    CHECK(r(2, 0) == doctest::Approx(-std::sin(kk)).epsilon(1e-14));
    CHECK(r(1, 1) == doctest::Approx(1.0));

    Rng rng(23);
    for (int t = 0; t < 20; ++t) {
        Mat3d s{};
        s(0, 1) = rng.uniform(-2, 2);
        s(0, 2) = rng.uniform(-2, 2);
        s(1, 2) = rng.uniform(-2, 2);
        s(1, 0) = -s(0, 1);
        s(2, 0) = -s(0, 2);
        s(2, 1) = -s(1, 2);
        double sp = rng.uniform(-1.5, 1.5);
        Mat3d fwd = rodrigues_exp(s, sp);
        Mat3d bwd = rodrigues_exp(s, -sp);
        CHECK(max_abs(fwd * bwd - Mat3d::identity()) < 1e-12);
        CHECK(orthogonality_defect(fwd) < 1e-12);
        CHECK(det(fwd) == doctest::Approx(1.0).epsilon(1e-12));
    }
    Mat3d notskew{};
    notskew(0, 1) = 1.0;
    CHECK_THROWS_AS(rodrigues_exp(notskew, 1.0), NotSkew);
}

TEST_CASE("transport_rotation: constant metric, bending closed form, path independence") {
    Domain d = Domain::unit_box(5);
    MetricField id = make_metric(d, Chart::cartesian, [](auto X, auto, auto) {
        using T = decltype(X);
        (void)X;
        return SymMat3<T>::diag(T(1.3), T(0.8), T(1.0));
    });
    Rng rng(29);
    Mat3d r0 = random_rotation(rng);
    Mat3d r = transport_rotation(id, {{0, 0, 0}, {1, 1, 1}, 500}, r0);
    CHECK(max_abs(r - r0) < 1e-12);

    // Bending strain: transport along X from the origin matches the
    // closed-form plane rotation by a1 (X - X0).
    double a1 = 1.0;
    MetricField bend = bending_metric(1.0, a1, 1.5, d);
    double X = 1.0;
    Mat3d got = transport_rotation(bend, {{0, 0, 0}, {X, 0, 0}, 1000}, Mat3d::identity());
    Mat3d k{};
    k(0, 2) = a1 * X;
    k(2, 0) = -a1 * X;
    Mat3d expect = rodrigues_exp(k, 1.0);
    CHECK(max_abs(got - expect) < 1e-9);

    // z2 strain: two different two-segment paths to the same endpoint.
    families::FamilySpec spec = random_family(families::Kind::z2, rng);
    MetricField mz2 = families::metric_field(spec, d);
    Point3 start{0.1, 0.1, 0.1}, end{0.9, 0.8, 0.7};
    Point3 mid1{0.9, 0.1, 0.1}, mid2{0.1, 0.8, 0.7};
    Mat3d ra = transport_rotation(mz2, {start, mid1, 800}, Mat3d::identity());
    ra = transport_rotation(mz2, {mid1, end, 800}, ra);
    Mat3d rb = transport_rotation(mz2, {start, mid2, 800}, Mat3d::identity());
    rb = transport_rotation(mz2, {mid2, end, 800}, rb);
    CHECK(max_abs(ra - rb) < 1e-8);

    // Non-flat metrics are rejected.
    MetricField notflat = make_metric(d, Chart::cartesian, [](auto X, auto, auto Z) {
        using T = decltype(X);
        (void)X;
        return SymMat3<T>::diag(1.0 + Z * Z, T(1.0), T(1.0));
    });
    CHECK_THROWS_AS(
        transport_rotation(notflat, {{0, 0, 0}, {1, 1, 1}, 100}, Mat3d::identity()),
        NotFlat);
}

TEST_CASE("reconstruct_map: identity metric gives the identity map") {
    Domain d = Domain::unit_box(4);
    MetricField id = make_metric(d, Chart::cartesian, [](auto X, auto, auto) {
        using T = decltype(X);
        (void)X;
        return SymMat3<T>::identity();
    });
    ReconstructOptions opts;
    opts.steps_per_unit = 200;
    auto res = reconstruct_map(id, d, {0, 0, 0}, Mat3d::identity(), opts);
    double worst = 0;
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) {
                size_t idn = (size_t(k) * d.ny + j) * d.nx + i;
                worst = std::max(worst, max_abs(res.phi[idn] - d.node(i, j, k)));
            }
    CHECK(worst < 1e-12);
    CHECK(res.fxf_defect < 1e-12);
    CHECK(res.path_independence_defect < 1e-12);
}

TEST_CASE("reconstruct_map: bending strain reproduces the closed-form deformation") {
    double a0 = 1.0, a1 = 1.0, b0 = 1.5;
    Domain d = Domain::unit_box(5);
    MetricField bend = bending_metric(a0, a1, b0, d);
    ReconstructOptions opts;
    opts.steps_per_unit = 400;
    auto res = reconstruct_map(bend, d, {0, 0, 0}, Mat3d::identity(), opts);
    // phi = ((a0 + a1 Z)/a1 sin(a1 X), b0 Y, (a0 + a1 Z)/a1 cos(a1 X)) shifted
    // so the base point stays put.
    double worst = 0;
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) {
                Point3 p = d.node(i, j, k);
                double rad = (a0 + a1 * p.z) / a1;
                Point3 expect{rad * std::sin(a1 * p.x), b0 * p.y,
                              rad * std::cos(a1 * p.x) - a0 / a1};
                size_t idn = (size_t(k) * d.ny + j) * d.nx + i;
                worst = std::max(worst, max_abs(res.phi[idn] - expect));
            }
    CHECK(worst < 1e-6);
    CHECK(res.fxf_defect < 1e-6);
    CHECK(res.mixed_partial_defect < 1e-7);
    CHECK(res.path_independence_defect < 1e-8);
}

TEST_CASE("reconstruct_map: branch-2 strain round trip") {
    MetricAnsatzZ b2 = branch2_ansatz(1.0, 1.0, 0.5, 0.5, 0, 1);
    Domain d = Domain::unit_box(4);
    MetricField m = metric_from_ansatz(b2, d);
    ReconstructOptions opts;
    opts.steps_per_unit = 400;
    auto res = reconstruct_map(m, d, {0, 0, 0}, Mat3d::identity(), opts);
    CHECK(res.fxf_defect < 1e-6);
    CHECK(res.mixed_partial_defect < 1e-7);
    CHECK(res.path_independence_defect < 1e-8);
}

TEST_CASE("reconstruct_map: non-flat input is rejected") {
    Domain d = Domain::unit_box(4);
    MetricField notflat = make_metric(d, Chart::cartesian, [](auto X, auto, auto Z) {
        using T = decltype(X);
        (void)X;
        return SymMat3<T>::diag(1.0 + Z * Z, T(1.0), T(1.0));
    });
    CHECK_THROWS_AS(reconstruct_map(notflat, d, {0, 0, 0}, Mat3d::identity()), NotFlat);
}

TEST_CASE("spline ansatz reproduces sampled branch data") {
    // Spline through branch-1 samples stays near the closed form, and its
    // ODE residuals stay small at the knots.
    double c1 = 1.1, c2 = 0.5, c3 = 1.4, c4 = 0.3;
    MetricAnsatzZ exact = branch1_ansatz(c1, c2, c3, c4, 0, 1);
    std::vector<double> z, f, g, h;
    for (int i = 0; i <= 24; ++i) {
        double zz = i / 24.0;
        z.push_back(zz);
        f.push_back(zjet2(exact.f, zz).v);
        g.push_back(zjet2(exact.g, zz).v);
        h.push_back(zjet2(exact.h, zz).v);
    }
    MetricAnsatzZ spl;
    spl.f = spline_zfn(z, f);
    spl.g = spline_zfn(z, g);
    spl.h = spline_zfn(z, h);
    for (double zz : {0.3, 0.5, 0.7}) {
        CHECK(std::abs(zjet2(spl.f, zz).v - zjet2(exact.f, zz).v) < 1e-6);
        auto r = ricci_ode_residuals(spl, zz);
        for (double v : r) CHECK(std::abs(v) < 1e-2); // natural spline, C2 only
    }
}
