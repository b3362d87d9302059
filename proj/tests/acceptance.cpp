// Acceptance suite: one pass/fail line per criterion.
//
// The 5z legs of criterion 1 are expected failures: that strain field is
// flat, inextensible and has constant invariants, but its constitutive
// divergence rows (and hence the material-independent equilibrium rows) do
// not vanish, so it is not universal for this constitutive class.  The suite
// verifies that it fails for exactly that reason and nothing else; an
// unexpected pass there is reported as a regression.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "inextensa/compat.hpp"
#include "inextensa/diffgeo.hpp"
#include "inextensa/families.hpp"
#include "inextensa/specio.hpp"
#include "inextensa/universality.hpp"
#include "support/fd.hpp"
#include "support/generators.hpp"

using namespace inextensa;
using namespace inextensa::testsupport;
namespace dg = inextensa::diffgeo;
namespace un = inextensa::universality;
namespace cp = inextensa::compat;

namespace {

int g_unexpected = 0;
std::chrono::steady_clock::time_point g_t0;

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

void report(const std::string& name, bool pass, const std::string& detail,
            bool expected_fail = false) {
    if (expected_fail) {
        // the criterion is implemented as stated and must fail for the
        // documented reason; failing to fail is the regression
        std::printf("%s %-58s %s\n", pass ? "FAIL" : "XFAIL", name.c_str(), detail.c_str());
        if (pass) ++g_unexpected;
        return;
    }
    std::printf("%s %-58s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!pass) ++g_unexpected;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct FamilySweep {
    double czz = 0, ricci = 0, cauchy_div = 0, cauchy_rest = 0, hyper = 0;
    double closed_form = 0, jacobian = 0;
    double eq_scaled = 0;
};

FamilySweep sweep_family(families::Kind kind, int draws, int grid_n, int eq_grid_n,
                         int materials, Rng& rng) {
    FamilySweep s;
    for (int dr = 0; dr < draws; ++dr) {
        families::FamilySpec spec = random_family(kind, rng);
        Domain d = families::default_domain(kind, grid_n);
        DeformationMap map = families::make_family(spec, d);
        MetricField metric = families::metric_field(spec, d);
        for (int k = 0; k < d.nz; ++k)
            for (int j = 0; j < d.ny; ++j)
                for (int i = 0; i < d.nx; ++i) {
                    Point3 p = d.node(i, j, k);
                    SymMat3d c = pullback_metric(map, p);
                    s.czz = std::max(s.czz, std::abs(c.zz - 1.0));
                    SymMat3d cf = kind == families::Kind::f5z
                                      ? families::closed_form_C_cartesian_5z(spec.f5z, p)
                                      : families::closed_form_C(spec, p);
                    s.closed_form = std::max(s.closed_form, max_abs(c - cf));
                    Mat3d f = dg::deformation_gradient(map, p);
                    double jd = dg::jacobian_det(f, SymMat3d::identity(),
                                                 SymMat3d::identity());
                    s.jacobian = std::max(
                        s.jacobian, std::abs(jd - families::closed_form_J(spec, p)));
                    s.ricci = std::max(s.ricci, max_abs(dg::ricci(metric, p)));
                    auto cr = un::cauchy_universality_residuals(metric, p);
                    for (int t = 0; t < 6; ++t)
                        s.cauchy_div = std::max(s.cauchy_div, std::abs(cr.v[t]));
                    for (int t = 6; t < un::CauchyResiduals::count; ++t)
                        s.cauchy_rest = std::max(s.cauchy_rest, std::abs(cr.v[t]));
                    s.hyper = std::max(
                        s.hyper, un::hyper_universality_residuals(metric, p).max_abs());
                }
        Domain de = families::default_domain(kind, eq_grid_n);
        auto eq = un::full_equilibrium_residual(families::metric_field(spec, de), de,
                                                un::MaterialKind::response, materials,
                                                1000 + dr, 1e-7, /*substeps=*/16);
        s.eq_scaled = std::max(s.eq_scaled, eq.max_scaled);
    }
    return s;
}

void criterion1_and_2_and_3() {
    Rng rng(20260810);
    const int draws = 20;
    for (auto kind : {families::Kind::z0, families::Kind::z1, families::Kind::z2,
                      families::Kind::f5z}) {
        auto t = std::chrono::steady_clock::now();
        FamilySweep s = sweep_family(kind, draws, 7, 7, 10, rng);
        std::string nm = families::kind_name(kind);
        bool f5 = kind == families::Kind::f5z;
        report("1a [" + nm + "] C_ZZ = 1 within 1e-12", s.czz <= 1e-12,
               "max " + fmt(s.czz));
        report("1b [" + nm + "] Ricci(C) <= 1e-9", s.ricci <= 1e-9, "max " + fmt(s.ricci));
        report("1c [" + nm + "] universality residuals <= 1e-9 (divergence rows)",
               s.cauchy_div <= 1e-9, "max " + fmt(s.cauchy_div), f5);
        report("1c [" + nm + "] universality residuals <= 1e-9 (other rows)",
               s.cauchy_rest <= 1e-9, "max " + fmt(s.cauchy_rest));
        report("1c [" + nm + "] full equilibrium <= 1e-7, 10 materials",
               s.eq_scaled <= 1e-7, "max " + fmt(s.eq_scaled), f5);
        report("1d [" + nm + "] hyperelastic residuals <= 1e-9", s.hyper <= 1e-9,
               "max " + fmt(s.hyper), f5);
        report("2  [" + nm + "] F^T F vs closed form <= 1e-10", s.closed_form <= 1e-10,
               "max " + fmt(s.closed_form));
        report("2  [" + nm + "] J vs closed form <= 1e-12", s.jacobian <= 1e-12,
               "max " + fmt(s.jacobian));
        std::printf("     [%s sweep: %.1f s]\n", nm.c_str(), seconds_since(t));
    }

    // Criterion 3: invariant structure and classification labels.
    Rng rng3(314159);
    double slice_var = 0;
    bool labels_ok = true;
    for (auto kind : {families::Kind::z1, families::Kind::z2}) {
        for (int dr = 0; dr < 5; ++dr) {
            families::FamilySpec spec = random_family(kind, rng3);
            Domain d = Domain::unit_box(7);
            MetricField m = families::metric_field(spec, d);
            for (int k = 0; k < d.nz; ++k) {
                auto iv0 = dg::invariants(m.e0(d.node(0, 0, k)), SymMat3d::identity());
                for (int j = 0; j < d.ny; ++j)
                    for (int i = 0; i < d.nx; ++i) {
                        auto iv = dg::invariants(m.e0(d.node(i, j, k)),
                                                 SymMat3d::identity());
                        slice_var = std::max({slice_var, std::abs(iv.I1 - iv0.I1),
                                              std::abs(iv.I2 - iv0.I2),
                                              std::abs(iv.I3 - iv0.I3)});
                    }
            }
            labels_ok = labels_ok && un::classify_invariants(m, d).label == un::Case::case_i;
        }
    }
    report("3  z1/z2 invariants vary only in Z (<= 1e-10)", slice_var <= 1e-10,
           "max slice variation " + fmt(slice_var));

    double span = 0, i3dev = 0;
    bool f5labels = true;
    for (int dr = 0; dr < 5; ++dr) {
        families::FamilySpec spec = random_family(families::Kind::f5z, rng3);
        Domain d = families::default_domain(families::Kind::f5z, 7);
        MetricField m = families::metric_field(spec, d);
        double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
        for (int k = 0; k < d.nz; ++k)
            for (int j = 0; j < d.ny; ++j)
                for (int i = 0; i < d.nx; ++i) {
                    auto iv = dg::invariants(m.e0(d.node(i, j, k)), SymMat3d::identity());
                    double v[3] = {iv.I1, iv.I2, iv.I3};
                    for (int t = 0; t < 3; ++t) {
                        lo[t] = std::min(lo[t], v[t]);
                        hi[t] = std::max(hi[t], v[t]);
                    }
                    i3dev = std::max(i3dev, std::abs(iv.I3 - 1.0));
                }
        for (int t = 0; t < 3; ++t) span = std::max(span, hi[t] - lo[t]);
        f5labels = f5labels && un::classify_invariants(m, d).label == un::Case::case_ii;
    }
    report("3  5z invariants constant (<= 1e-9), I3 = 1 (<= 1e-10)",
           span <= 1e-9 && i3dev <= 1e-10,
           "span " + fmt(span) + ", |I3-1| " + fmt(i3dev));
    report("3  classify_invariants labels case_i / case_ii", labels_ok && f5labels, "");
}

void criterion4() {
    Rng rng(424242);
    const double tol = 1e-9;
    bool agree = true;
    int negatives_rejected = 0;
    auto verdicts = [&](const MetricField& m, const Domain& d) {
        double cmax = 0, hmax = 0;
        for (int k = 0; k < d.nz; ++k)
            for (int j = 0; j < d.ny; ++j)
                for (int i = 0; i < d.nx; ++i) {
                    Point3 p = d.node(i, j, k);
                    cmax = std::max(cmax,
                                    un::cauchy_universality_residuals(m, p).max_abs());
                    hmax = std::max(hmax, un::hyper_universality_residuals(m, p).max_abs());
                }
        return std::pair<bool, bool>(cmax <= tol, hmax <= tol);
    };
    for (auto kind : {families::Kind::z0, families::Kind::z1, families::Kind::z2,
                      families::Kind::f5z}) {
        Domain d = families::default_domain(kind, 5);
        families::FamilySpec spec = random_family(kind, rng);
        auto [c, h] = verdicts(families::metric_field(spec, d), d);
        agree = agree && (c == h);
    }
    for (int t = 0; t < 20; ++t) {
        auto kind = t % 2 == 0 ? families::Kind::z1 : families::Kind::z2;
        Domain d = Domain::unit_box(5);
        families::FamilySpec spec = random_family(kind, rng);
        MetricField base = families::metric_field(spec, d);
        double amp = rng.uniform(0.05, 0.3);
        int mode = t % 3;
        MetricField m;
        m.domain = d;
        m.chart = Chart::cartesian;
        auto apply = [amp, mode](auto c, auto X, auto Y, auto) {
            if (mode == 0) c.xx = c.xx + amp * X * X;
            else if (mode == 1) c.yy = c.yy + amp * sin(X) * sin(X);
            else c.xy = c.xy + amp * X * Y * 0.5;
            return c;
        };
        m.e0 = [base, apply](const Vec3<double>& p) {
            return apply(base.e0(p), p.x, p.y, p.z);
        };
        m.e1 = [base, apply](const Vec3<D1>& p) { return apply(base.e1(p), p.x, p.y, p.z); };
        m.e2 = [base, apply](const Vec3<D2>& p) { return apply(base.e2(p), p.x, p.y, p.z); };
        auto [c, h] = verdicts(m, d);
        agree = agree && (c == h);
        if (!c) ++negatives_rejected;
    }
    report("4  cauchy and hyper verdicts agree (catalog + 20 negatives)",
           agree && negatives_rejected == 20,
           std::to_string(negatives_rejected) + "/20 negatives rejected by both");
}

void criterion5() {
    // Branch trajectories against their closed forms.
    double dev1, dev2;
    {
        double c1 = 1.0, c2 = 0.5, c3 = 2.0, c4 = 0.3;
        std::array<double, 6> y0{c2 * c2 + c1 * c1 * c4 * c4, c2 * c3, c3 * c3,
                                 2 * c1 * c1 * c4, 0, 0};
        auto res = cp::integrate_flat_ansatz(y0, 0.0, 1.0, 1000);
        dev1 = res.best.branch == "branch1" ? res.best.max_deviation : 1e300;
    }
    {
        double c1 = 0.9, c2 = 0.7, c3 = 1.2, c4 = 0.4;
        double w = c4;
        std::array<double, 6> y0{c2 * c2 + c1 * c1 * w * w, c1 * c3 * w * w,
                                 c3 * c3 * w * w, 2 * c1 * c1 * w, 2 * c1 * c3 * w,
                                 2 * c3 * c3 * w};
        auto res = cp::integrate_flat_ansatz(y0, 0.0, 1.0, 1000);
        dev2 = res.best.branch == "branch2" ? res.best.max_deviation : 1e300;
    }
    report("5  RK4 trajectories match the closed-form branches (<= 1e-8)",
           dev1 <= 1e-8 && dev2 <= 1e-8, "dev " + fmt(dev1) + " / " + fmt(dev2));

    double smax = 0;
    for (double z : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        cp::FrameScalars s1;
        s1.xi = cp::make_zfn([](auto zz) { return 1.0 / (zz + 0.5); });
        s1.eta = cp::constant_zfn(0);
        s1.psi = cp::constant_zfn(0);
        cp::FrameScalars s2;
        s2.xi = cp::constant_zfn(0);
        s2.eta = cp::make_zfn([](auto zz) { return 1.0 / (zz + 0.5); });
        s2.psi = cp::constant_zfn(0);
        for (double v : cp::structural_residuals(s1, z)) smax = std::max(smax, std::abs(v));
        for (double v : cp::structural_residuals(s2, z)) smax = std::max(smax, std::abs(v));
    }
    cp::FrameScalars bad;
    bad.xi = cp::constant_zfn(0);
    bad.eta = cp::constant_zfn(0);
    double psi0 = 0.7;
    bad.psi = cp::constant_zfn(psi0);
    double neg = std::abs(cp::structural_residuals(bad, 0.4)[0]);
    report("5  structural residuals: branches <= 1e-10, constant-psi >= psi0^2",
           smax <= 1e-10 && neg >= psi0 * psi0 - 1e-15,
           "branches " + fmt(smax) + ", negative " + fmt(neg));
}

void criterion6() {
    Rng rng(606060);
    cp::ReconstructOptions opts;
    opts.steps_per_unit = 600;
    double fxf = 0, mixed = 0, path = 0;
    bool all_ok = true;
    for (auto kind : {families::Kind::z0, families::Kind::z1, families::Kind::z2,
                      families::Kind::f5z}) {
        families::FamilySpec spec = random_family(kind, rng);
        Domain d = families::default_domain(kind, 5);
        MetricField m = families::metric_field(spec, d);
        try {
            auto res = cp::reconstruct_map(m, d, d.lo, Mat3d::identity(), opts);
            fxf = std::max(fxf, res.fxf_defect);
            mixed = std::max(mixed, res.mixed_partial_defect);
            path = std::max(path, res.path_independence_defect);
        } catch (const Error& e) {
            all_ok = false;
        }
    }
    report("6  reconstruction round trip over the catalog",
           all_ok && fxf <= 1e-6 && mixed <= 1e-7 && path <= 1e-8,
           "FtF " + fmt(fxf) + ", mixed " + fmt(mixed) + ", path " + fmt(path));

    // Bending strain reproduces its closed-form deformation up to the anchored
    // rigid motion.
    double a0 = 1, a1 = 1, b0 = 1.5;
    Domain d = Domain::unit_box(5);
    MetricField bend = make_metric(d, Chart::cartesian, [=](auto X, auto, auto Z) {
        using T = decltype(X);
        (void)X;
        T lam = a0 + a1 * Z;
        return SymMat3<T>::diag(lam * lam, T(b0 * b0), T(1.0));
    });
    auto res = cp::reconstruct_map(bend, d, {0, 0, 0}, Mat3d::identity(), opts);
    double worst = 0;
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) {
                Point3 p = d.node(i, j, k);
                double rad = (a0 + a1 * p.z) / a1;
                Point3 expect{rad * std::sin(a1 * p.x), b0 * p.y,
                              rad * std::cos(a1 * p.x) - a0 / a1};
                size_t id = (size_t(k) * d.ny + j) * d.nx + i;
                worst = std::max(worst, max_abs(res.phi[id] - expect));
            }
    report("6  bending strain reproduces its deformation (<= 1e-6)", worst <= 1e-6,
           "max " + fmt(worst));
}

void criterion7() {
    Domain d = Domain::unit_box(5);
    MetricField nz = make_metric(d, Chart::cartesian, [](auto X, auto, auto Z) {
        using T = decltype(X);
        (void)X;
        return SymMat3<T>::diag(1.0 + Z * Z, T(1.0), T(1.0));
    });
    double ric11 = dg::ricci(nz, {0.5, 0.5, 0.0}).xx;
    report("7  diag(1+Z^2,1,1) fails flatness with Ric_11(0) = 1",
           std::abs(ric11 - 1.0) <= 1e-6, "Ric_11 " + fmt(ric11));

    MetricField nx = make_metric(d, Chart::cartesian, [](auto X, auto, auto) {
        using T = decltype(X);
        return SymMat3<T>::diag(1.0 + X * X, T(1.0), T(1.0));
    });
    auto cr = un::cauchy_universality_residuals(nx, {1.0, 0.5, 0.5});
    double grad = 0;
    {
        int idx = 0;
        for (const char* n : un::CauchyResiduals::names()) {
            if (std::string(n) == "grad_I1_1") break;
            ++idx;
        }
        grad = cr.v[idx];
    }
    report("7  diag(1+X^2,1,1) violates |I_{1,1}|(X=1) = 2", std::abs(grad - 2.0) <= 1e-6,
           "got " + fmt(grad));

    auto rotated = [&](int axis) {
        return make_metric(d, Chart::cartesian, [axis](auto X, auto, auto Z) {
            using T = decltype(X);
            T lam1(2.25), lam2(0.64);
            T th = axis == 0 ? X : Z;
            T c = cos(th), s = sin(th);
            SymMat3<T> r;
            r.xx = lam1 * c * c + lam2 * s * s;
            r.xy = (lam1 - lam2) * s * c;
            r.yy = lam1 * s * s + lam2 * c * c;
            r.zz = T(1.0);
            return r;
        });
    };
    double bad = 0, good = 0;
    for (int t = 0; t < 5; ++t) {
        Point3 p = d.node(t, 2, 2);
        auto rb = un::cauchy_universality_residuals(rotated(0), p);
        auto rg = un::cauchy_universality_residuals(rotated(2), p);
        bad = std::max({bad, std::abs(rb.v[0]), std::abs(rb.v[1])});
        good = std::max({good, std::abs(rg.v[0]), std::abs(rg.v[1])});
    }
    report("7  rotated form: theta = X fails divergence, theta = Z passes",
           bad > 1e-3 && good <= 1e-10, "theta=X " + fmt(bad) + ", theta=Z " + fmt(good));
}

void criterion8() {
    Rng rng(808080);
    Domain d = Domain::unit_box(4);
    MetricField m = random_smooth_metric(rng, d);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        Point3 p{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
        auto ga = dg::christoffel(m, p);
        auto gf = fd_christoffel(m, p);
        for (int c = 0; c < 3; ++c)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    worst = std::max(worst, rel_err(ga[c][a][b], gf[c][a][b]));
        SymMat3d ra = dg::ricci(m, p);
        SymMat3d rf = fd_ricci(m, p);
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) worst = std::max(worst, rel_err(ra(i, j), rf(i, j)));
        auto cr = un::cauchy_universality_residuals(m, p);
        auto [divc, divb] = fd_divergences(m, p);
        worst = std::max({worst, rel_err(cr.v[0], divc.x), rel_err(cr.v[1], divc.y),
                          rel_err(cr.v[2], divb.x), rel_err(cr.v[3], divb.y)});
    }
    report("8  truncated-Taylor vs finite differences (100 points, 1e-6 rel)",
           worst <= 1e-6, "max rel " + fmt(worst));

    // Rodrigues closed form vs RK4 transport for a constant-K path.
    Domain db = Domain::unit_box(5);
    double a1 = 1.0;
    MetricField bend = make_metric(db, Chart::cartesian, [=](auto X, auto, auto Z) {
        using T = decltype(X);
        (void)X;
        T lam = 1.0 + a1 * Z;
        return SymMat3<T>::diag(lam * lam, T(2.25), T(1.0));
    });
    Mat3d got = cp::transport_rotation(bend, {{0, 0, 0}, {1, 0, 0}, 1000},
                                       Mat3d::identity());
    Mat3d k{};
    k(0, 2) = a1;
    k(2, 0) = -a1;
    double dev = max_abs(got - cp::rodrigues_exp(k, 1.0));
    report("8  Rodrigues vs RK4 transport, constant K (<= 1e-9)", dev <= 1e-9,
           "max " + fmt(dev));
}

void criterion9(const std::string& cli) {
    if (cli.empty()) {
        report("9  determinism: byte-identical CLI outputs", false, "no CLI path given");
        return;
    }
    char tmpl[] = "/tmp/inextensa_acc_XXXXXX";
    std::string tmp = mkdtemp(tmpl);
    auto shell = [&](const std::string& cmd) {
        return WEXITSTATUS(std::system((cmd + " > /dev/null 2>&1").c_str()));
    };
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    {
        std::ofstream spec(tmp + "/z2.json");
        spec << R"({"family":"z2","params":{"C1":0.25,"C2":-1.25,"C3":1.2,"C5":0.3}})";
    }
    std::string base = cli + " verify-family --spec " + tmp + "/z2.json --grid 7 "
                       "--materials 3 --seed 5 --records full --out ";
    int r1 = shell(base + tmp + "/a.json");
    int r2 = shell(base + tmp + "/b.json");
    std::string mesh = cli + " export-mesh --spec " + tmp + "/z2.json --grid 10 --seed 5 "
                       "--out ";
    int r3 = shell(mesh + tmp + "/a.obj");
    int r4 = shell(mesh + tmp + "/b.obj");
    bool ok = r1 == 0 && r2 == 0 && r3 == 0 && r4 == 0 &&
              slurp(tmp + "/a.json") == slurp(tmp + "/b.json") &&
              slurp(tmp + "/a.obj") == slurp(tmp + "/b.obj") &&
              !slurp(tmp + "/a.json").empty() && !slurp(tmp + "/a.obj").empty();
    report("9  determinism: byte-identical CLI outputs", ok, "");
}

} // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "";
    g_t0 = std::chrono::steady_clock::now();

    criterion1_and_2_and_3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9(cli);

    std::printf("total runtime %.1f s\n", seconds_since(g_t0));
    if (g_unexpected) {
        std::printf("%d unexpected outcome(s)\n", g_unexpected);
        return 1;
    }
    std::printf("all criteria at their expected outcomes\n");
    return 0;
}
