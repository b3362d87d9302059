#include "inextensa/universality.hpp"

#include <cmath>

#include "inextensa/diffgeo.hpp"
#include "inextensa/rng.hpp"

namespace inextensa::universality {

using constitutive::EnergyFunction;
using constitutive::Material;
using constitutive::ResponseTriple;

MetricJet1 eval_metric_jet1(const MetricField& metric, const Point3& p) {
    metric.domain.require_inside(p);
    SymMat3<D1> c = metric.e1(seed_point(p));
    MetricJet1 j;
    auto pull = [&](auto dm, auto sm) {
        const D1& e = c.*sm;
        j.value.*dm = e.v;
        for (int A = 0; A < 3; ++A) j.d[A].*dm = e.g[A];
    };
    pull(&SymMat3d::xx, &SymMat3<D1>::xx);
    pull(&SymMat3d::xy, &SymMat3<D1>::xy);
    pull(&SymMat3d::xz, &SymMat3<D1>::xz);
    pull(&SymMat3d::yy, &SymMat3<D1>::yy);
    pull(&SymMat3d::yz, &SymMat3<D1>::yz);
    pull(&SymMat3d::zz, &SymMat3<D1>::zz);
    diffgeo::require_spd(j.value);
    return j;
}

namespace {

// Shared pointwise kinematics in the Cartesian chart: raised strain equals
// the covariant components, B is the plain inverse.  EC, EB and tGamma are
// the connection-corrected divergence rows (the constitutive channels of
// Div(F S) = 0).
struct PointData {
    SymMat3d C, B;
    std::array<SymMat3d, 3> dC, dB;
    Vec3<double> I;                    // invariants
    std::array<Vec3<double>, 3> dI;    // dI[i][A] = I_{i+1,A}
    Vec3<double> EC, EB, tGamma;       // per row A
};

PointData point_data(const MetricField& metric, const Point3& p) {
    if (metric.chart != Chart::cartesian)
        throw InvalidParams("universality residuals require the Cartesian chart");
    MetricJet1 j = eval_metric_jet1(metric, p);
    PointData d;
    d.C = j.value;
    d.B = inverse(j.value);
    for (int A = 0; A < 3; ++A) {
        d.dC[A] = j.d[A];
        d.dB[A] = sym(d.B.full() * j.d[A].full() * d.B.full()) * -1.0;
    }

    double i1 = trace(d.C);
    Mat3d c2 = d.C.full() * d.C.full();
    double i2 = 0.5 * (i1 * i1 - trace(c2));
    double i3 = det(d.C);
    d.I = {i1, i2, i3};
    for (int A = 0; A < 3; ++A) {
        double t1 = trace(d.dC[A]);
        double t2 = 0;
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) t2 += d.C(m, n) * d.dC[A](m, n);
        double t3 = 0;
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) t3 += d.B(m, n) * d.dC[A](m, n);
        d.dI[0][A] = t1;
        d.dI[1][A] = i1 * t1 - t2;
        d.dI[2][A] = i3 * t3;
    }

    // Ghat^A_{MB} = (1/2) C^{AD} (dC_{MD,B} + dC_{BD,M} - dC_{MB,D}).
    double gam[3][3][3];
    for (int A = 0; A < 3; ++A)
        for (int M = 0; M < 3; ++M)
            for (int Bx = M; Bx < 3; ++Bx) {
                double s = 0;
                for (int D = 0; D < 3; ++D)
                    s += d.B(A, D) * (d.dC[Bx](M, D) + d.dC[M](Bx, D) - d.dC[D](M, Bx));
                gam[A][M][Bx] = 0.5 * s;
                gam[A][Bx][M] = gam[A][M][Bx];
            }

    for (int A = 0; A < 3; ++A) {
        double sc = 0, sb = 0, corrc = 0, corrb = 0, tg = 0;
        for (int B = 0; B < 3; ++B) {
            sc += d.dC[B](A, B);
            sb += d.dB[B](A, B);
            tg += gam[A][B][B];
        }
        for (int M = 0; M < 3; ++M)
            for (int B = 0; B < 3; ++B) {
                corrc += gam[A][M][B] * d.C(M, B);
                corrb += gam[A][M][B] * d.B(M, B);
            }
        d.EC[A] = sc + corrc;
        d.EB[A] = sb + corrb;
        d.tGamma[A] = tg;
    }
    return d;
}

Vec3<double> contract(const SymMat3d& m, const Vec3<double>& v) { return m * v; }

} // namespace

const std::array<const char*, CauchyResiduals::count>& CauchyResiduals::names() {
    static const std::array<const char*, count> n = {
        "div_C_1",     "div_C_2",     "div_B_1",     "div_B_2",     "conn_trace_1",
        "conn_trace_2", "grad_I1_1",
        "grad_I1_2",   "grad_I2_1",   "grad_I2_2",   "grad_I3_1",   "grad_I3_2",
        "C_grad_I1_1", "C_grad_I1_2", "C_grad_I2_1", "C_grad_I2_2", "C_grad_I3_1",
        "C_grad_I3_2", "B_grad_I1_1", "B_grad_I1_2", "B_grad_I2_1", "B_grad_I2_2",
        "B_grad_I3_1", "B_grad_I3_2", "czz"};
    return n;
}

double CauchyResiduals::max_abs() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

const std::array<const char*, HyperResiduals::count>& HyperResiduals::names() {
    static const std::array<const char*, count> n = {
        "hyp0_1", "hyp0_2", "hyp1_1", "hyp1_2", "hyp2_1", "hyp2_2", "hyp3_1", "hyp3_2",
        "hyp4_1", "hyp4_2", "hyp5_1", "hyp5_2", "hyp6_1", "hyp6_2", "hyp7_1", "hyp7_2",
        "hyp8_1", "hyp8_2", "czz"};
    return n;
}

double HyperResiduals::max_abs() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

CauchyResiduals cauchy_universality_residuals(const MetricField& metric, const Point3& p) {
    PointData d = point_data(metric, p);
    CauchyResiduals r;
    int k = 0;
    for (int A = 0; A < 2; ++A) r.v[k++] = d.EC[A];
    for (int A = 0; A < 2; ++A) r.v[k++] = d.EB[A];
    for (int A = 0; A < 2; ++A) r.v[k++] = d.tGamma[A];
    for (int i = 0; i < 3; ++i)
        for (int A = 0; A < 2; ++A) r.v[k++] = d.dI[i][A];
    for (int i = 0; i < 3; ++i) {
        Vec3<double> ci = contract(d.C, d.dI[i]);
        for (int A = 0; A < 2; ++A) r.v[k++] = ci[A];
    }
    for (int i = 0; i < 3; ++i) {
        Vec3<double> bi = contract(d.B, d.dI[i]);
        for (int A = 0; A < 2; ++A) r.v[k++] = bi[A];
    }
    r.v[k++] = d.C.zz - 1.0;
    return r;
}

HyperResiduals hyper_universality_residuals(const MetricField& metric, const Point3& p) {
    PointData d = point_data(metric, p);
    Vec3<double> CdI1 = contract(d.C, d.dI[0]);
    Vec3<double> CdI2 = contract(d.C, d.dI[1]);
    Vec3<double> CdI3 = contract(d.C, d.dI[2]);
    Vec3<double> BdI1 = contract(d.B, d.dI[0]);
    Vec3<double> BdI2 = contract(d.B, d.dI[1]);
    Vec3<double> BdI3 = contract(d.B, d.dI[2]);
    double I1 = d.I.x, I3 = d.I.z;

    HyperResiduals r;
    int k = 0;
    // W1 row: the G#-channel connection trace.
    for (int A = 0; A < 2; ++A) r.v[k++] = d.tGamma[A];
    // W2 row: I1 Ghat-trace + I_{1,A} - E(C#).
    for (int A = 0; A < 2; ++A) r.v[k++] = I1 * d.tGamma[A] + d.dI[0][A] - d.EC[A];
    // W3 row: I3 E(B#) + B^{AB} I_{3,B}.
    for (int A = 0; A < 2; ++A) r.v[k++] = I3 * d.EB[A] + BdI3[A];
    for (int A = 0; A < 2; ++A) r.v[k++] = d.dI[0][A];
    for (int A = 0; A < 2; ++A) r.v[k++] = I1 * d.dI[1][A] - CdI2[A];
    for (int A = 0; A < 2; ++A) r.v[k++] = I3 * BdI3[A];
    for (int A = 0; A < 2; ++A) r.v[k++] = d.dI[1][A] + I1 * d.dI[0][A] - CdI1[A];
    for (int A = 0; A < 2; ++A) r.v[k++] = d.dI[2][A] + I3 * BdI1[A];
    for (int A = 0; A < 2; ++A) r.v[k++] = I3 * BdI2[A] + I1 * d.dI[2][A] - CdI3[A];
    r.v[k++] = d.C.zz - 1.0;
    return r;
}

CaseClassification classify_invariants(const MetricField& metric, const Domain& grid,
                                        double threshold) {
    CaseClassification c;
    c.threshold = threshold;
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                PointData d = point_data(metric, grid.node(i, j, k));
                for (int inv = 0; inv < 3; ++inv)
                    c.max_grad[inv] = std::max(c.max_grad[inv], norm(d.dI[inv]));
            }
    bool all_const = c.max_grad[0] <= threshold && c.max_grad[1] <= threshold &&
                     c.max_grad[2] <= threshold;
    c.label = all_const ? Case::case_ii : Case::case_i;
    return c;
}

namespace {

// Effective response values and invariant-derivatives for either material
// class at one state of the invariants.
struct Effective {
    double chi, xi, eta;
    Vec3<double> chi_d, xi_d, eta_d;
};

Effective effective_response(const Material& mat, const Vec3<double>& I) {
    Effective e;
    if (std::holds_alternative<ResponseTriple>(mat)) {
        const auto& r = std::get<ResponseTriple>(mat);
        e.chi = r.chi.eval(I.x, I.y, I.z);
        e.xi = r.xi.eval(I.x, I.y, I.z);
        e.eta = r.eta.eval(I.x, I.y, I.z);
        for (int i = 0; i < 3; ++i) {
            e.chi_d[i] = r.chi_d[i].eval(I.x, I.y, I.z);
            e.xi_d[i] = r.xi_d[i].eval(I.x, I.y, I.z);
            e.eta_d[i] = r.eta_d[i].eval(I.x, I.y, I.z);
        }
        return e;
    }
    const auto& w = std::get<EnergyFunction>(mat);
    double w1 = w.W_d[0].eval(I.x, I.y, I.z);
    double w2 = w.W_d[1].eval(I.x, I.y, I.z);
    double w3 = w.W_d[2].eval(I.x, I.y, I.z);
    e.chi = 2.0 * (w1 + w2 * I.x);
    e.xi = -2.0 * w2;
    e.eta = 2.0 * w3 * I.z;
    for (int i = 0; i < 3; ++i) {
        double w1i = w.second(0, i).eval(I.x, I.y, I.z);
        double w2i = w.second(1, i).eval(I.x, I.y, I.z);
        double w3i = w.second(2, i).eval(I.x, I.y, I.z);
        e.chi_d[i] = 2.0 * (w1i + w2i * I.x + (i == 0 ? w2 : 0.0));
        e.xi_d[i] = -2.0 * w2i;
        e.eta_d[i] = 2.0 * (w3i * I.z + (i == 2 ? w3 : 0.0));
    }
    return e;
}

Vec3<double> forcing_from(const PointData& d, const Material& mat, double* sbar_mag = nullptr) {
    Effective e = effective_response(mat, d.I);
    // dchi[B] = chi_i I_{i,B}, and likewise for xi, eta.
    Vec3<double> dchi{}, dxi{}, deta{};
    for (int B = 0; B < 3; ++B)
        for (int i = 0; i < 3; ++i) {
            dchi[B] += e.chi_d[i] * d.dI[i][B];
            dxi[B] += e.xi_d[i] * d.dI[i][B];
            deta[B] += e.eta_d[i] * d.dI[i][B];
        }
    Vec3<double> cdxi = d.C * dxi;
    Vec3<double> bdeta = d.B * deta;
    Vec3<double> div;
    for (int A = 0; A < 3; ++A)
        div[A] = e.chi * d.tGamma[A] + e.xi * d.EC[A] + e.eta * d.EB[A] + dchi[A] +
                 cdxi[A] + bdeta[A];
    if (sbar_mag) {
        SymMat3d s = SymMat3d::identity() * e.chi + d.C * e.xi + d.B * e.eta;
        *sbar_mag = max_abs(s);
    }
    return {-div.x, -div.y, -div.z};
}

// Gauss-Legendre 5 on [a, b]; the independent quadrature route.
double gauss5(const std::function<double(double)>& f, double a, double b) {
    static const double x2 = 0.5384693101056831;  // sqrt(5 - 2 sqrt(10/7))/3
    static const double x3 = 0.9061798459386640;  // sqrt(5 + 2 sqrt(10/7))/3
    static const double w1 = 128.0 / 225.0;
    static const double w2 = 0.4786286704993665;  // (322 + 13 sqrt(70))/900
    static const double w3 = 0.2369268850561891;  // (322 - 13 sqrt(70))/900
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = w1 * f(mid) + w2 * (f(mid - half * x2) + f(mid + half * x2)) +
               w3 * (f(mid - half * x3) + f(mid + half * x3));
    return s * half;
}

} // namespace

Vec3<double> equilibrium_forcing(const MetricField& metric, const Material& mat,
                                 const Point3& p) {
    return forcing_from(point_data(metric, p), mat);
}

TensionColumn tension_column(const MetricField& metric, const Material& mat, double x,
                             double y, const Domain& grid, int substeps) {
    if (substeps < 1) throw InvalidParams("tension_column: substeps must be >= 1");
    TensionColumn col;
    col.z0 = grid.lo.z;
    int nk = (grid.nz - 1) * substeps;
    col.h_sub = (grid.hi.z - grid.lo.z) / nk;
    col.f3.resize(nk + 1);
    col.values.resize(nk + 1);
    auto f3 = [&](double z) {
        return equilibrium_forcing(metric, mat, {x, y, z}).z;
    };
    for (int k = 0; k <= nk; ++k) col.f3[k] = f3(col.z0 + k * col.h_sub);
    col.values[0] = 0.0;
    for (int k = 0; k < nk; ++k) {
        double a = col.z0 + k * col.h_sub;
        double fm = f3(a + 0.5 * col.h_sub);
        col.values[k + 1] =
            col.values[k] + col.h_sub / 6.0 * (col.f3[k] + 4.0 * fm + col.f3[k + 1]);
    }
    return col;
}

constitutive::TensionField solve_tension(const MetricField& metric, const Material& mat,
                                         const Domain& grid,
                                         std::function<double(double, double)> t0,
                                         int substeps) {
    if (!t0) t0 = [](double, double) { return 0.0; };
    constitutive::TensionField field;
    field.domain = grid;
    field.base = t0;
    field.eval = [metric, mat, grid, t0, substeps](const Point3& p) {
        grid.require_inside(p);
        TensionColumn col = tension_column(metric, mat, p.x, p.y, grid, substeps);
        double zrel = (p.z - col.z0) / col.h_sub;
        int k = std::clamp(int(std::floor(zrel)), 0, int(col.values.size()) - 2);
        double a = col.z0 + k * col.h_sub;
        double acc = col.values[k];
        if (p.z > a) {
            // Simpson on the partial sub-interval [a, p.z].
            double fm = equilibrium_forcing(metric, mat, {p.x, p.y, 0.5 * (a + p.z)}).z;
            double fb = equilibrium_forcing(metric, mat, {p.x, p.y, p.z}).z;
            acc += (p.z - a) / 6.0 * (col.f3[k] + 4.0 * fm + fb);
        }
        return t0(p.x, p.y) + acc;
    };
    field.deriv_z = [metric, mat, grid, substeps](const Point3& p) {
        grid.require_inside(p);
        TensionColumn col = tension_column(metric, mat, p.x, p.y, grid, substeps);
        double zrel = (p.z - col.z0) / col.h_sub;
        // Snap to a quadrature knot: there the representation derivative is
        // the integrand itself.
        int knear = std::clamp(int(std::lround(zrel)), 0, int(col.values.size()) - 1);
        if (std::abs(zrel - knear) < 1e-9) {
            double fa = col.f3[knear];
            return (fa + 4.0 * fa + fa) / 6.0;
        }
        int k = std::clamp(int(std::floor(zrel)), 0, int(col.values.size()) - 2);
        double a = col.z0 + k * col.h_sub;
        auto f3 = [&](double z) { return equilibrium_forcing(metric, mat, {p.x, p.y, z}).z; };
        double fa = col.f3[k];
        // d/dZ of the partial Simpson term (Z - a)/6 (f(a) + 4 f(m) + f(Z)).
        double m = 0.5 * (a + p.z);
        double fm = f3(m), fz = f3(p.z);
        double hfd = 1e-5 * std::max(1.0, std::abs(p.z));
        auto fprime = [&](double z) {
            double zl = std::max(grid.lo.z, z - hfd), zr = std::min(grid.hi.z, z + hfd);
            return (f3(zr) - f3(zl)) / (zr - zl);
        };
        return (fa + 4.0 * fm + fz) / 6.0 +
               (p.z - a) / 6.0 * (2.0 * fprime(m) + fprime(p.z));
    };
    return field;
}

EquilibriumReport full_equilibrium_residual(const MetricField& metric, const Domain& grid,
                                            MaterialKind kind, int samples, std::uint64_t seed,
                                            double tol, int substeps) {
    EquilibriumReport rep;
    rep.tol = tol;
    double hz = grid.hz();
    for (int m = 1; m <= samples; ++m) {
        std::uint64_t mseed = subseed(seed, m);
        Material mat = kind == MaterialKind::response
                           ? Material(ResponseTriple::random(mseed))
                           : Material(EnergyFunction::random(mseed));
        MaterialRun run;
        run.seed = mseed;
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                Point3 base = grid.node(i, j, 0);
                TensionColumn col = tension_column(metric, mat, base.x, base.y, grid, substeps);
                auto f3 = [&](double z) {
                    return forcing_from(point_data(metric, {base.x, base.y, z}), mat).z;
                };
                for (int k = 0; k < grid.nz; ++k) {
                    Point3 p = grid.node(i, j, k);
                    double smag = 0;
                    Vec3<double> f = forcing_from(point_data(metric, p), mat, &smag);
                    run.scale = std::max({run.scale, smag, std::abs(f.x), std::abs(f.y),
                                          std::abs(f.z)});
                    // Rows 1, 2: the tension term has no A = 1, 2 components.
                    for (int A = 0; A < 2; ++A) {
                        double r = std::abs(f[A]);
                        if (r > run.max_abs[A]) {
                            run.max_abs[A] = r;
                            run.argmax[A] = p;
                        }
                    }
                    // Row 3 on the interval above node k: interval mean of
                    // T_{,3} - F^3, Simpson route against Gauss-Legendre.
                    if (k + 1 < grid.nz) {
                        double za = grid.node(i, j, k).z, zb = grid.node(i, j, k + 1).z;
                        double simpson =
                            col.values[(k + 1) * substeps] - col.values[k * substeps];
                        double ref = gauss5(f3, za, zb);
                        double r3 = std::abs(simpson - ref) / hz;
                        if (r3 > run.max_abs[2]) {
                            run.max_abs[2] = r3;
                            run.argmax[2] = p;
                        }
                    }
                }
            }
        for (double v : run.max_abs) rep.max_raw = std::max(rep.max_raw, v);
        rep.max_scaled = std::max(rep.max_scaled, run.scaled_max());
        rep.runs.push_back(run);
    }
    rep.pass = rep.max_scaled <= tol;
    return rep;
}

} // namespace inextensa::universality
