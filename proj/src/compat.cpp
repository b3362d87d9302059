#include "inextensa/compat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace inextensa::compat {

ZJet2 zjet2(const ZFn& fn, double z) {
    D2 zz;
    zz.v = D1(z);
    zz.v.g[2] = 1.0;
    zz.g[2] = D1(1.0);
    D2 r = fn.e2(zz);
    return {r.v.v, r.v.g[2], r.g[2].g[2]};
}

ZFn poly_zfn(std::vector<double> c) {
    return make_zfn([c](auto z) {
        using T = decltype(z);
        T r(0.0);
        for (int i = int(c.size()) - 1; i >= 0; --i) r = r * z + c[i];
        return r;
    });
}

ZFn constant_zfn(double c) {
    return make_zfn([c](auto z) {
        using T = decltype(z);
        (void)z;
        return T(c);
    });
}

ZFn spline_zfn(std::vector<double> z, std::vector<double> y) {
    size_t n = z.size();
    if (n < 3 || y.size() != n) throw InvalidParams("spline_zfn: need >= 3 knots");
    for (size_t i = 1; i < n; ++i)
        if (!(z[i] > z[i - 1])) throw InvalidParams("spline_zfn: knots must increase");

    // Natural cubic spline second derivatives via the Thomas algorithm.
    std::vector<double> m(n, 0.0), diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
        double hl = z[i] - z[i - 1], hr = z[i + 1] - z[i];
        diag[i] = 2.0 * (hl + hr);
        upper[i] = hr;
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
    }
    for (size_t i = 2; i + 1 < n; ++i) {
        double w = (z[i] - z[i - 1]) / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for (size_t i = n - 2; i >= 1; --i) {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        if (i == 1) break;
    }

    return make_zfn([z, y, m](auto zz) {
        using T = decltype(zz);
        double zv = scalar_value(zz);
        size_t n = z.size();
        size_t k = 0;
        while (k + 2 < n && zv >= z[k + 1]) ++k;
        double h = z[k + 1] - z[k];
        T a = (z[k + 1] - zz) * (1.0 / h);
        T b = (zz - z[k]) * (1.0 / h);
        return a * y[k] + b * y[k + 1] +
               ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * (h * h / 6.0);
    });
}

namespace {

struct AnsatzJets {
    ZJet2 f, g, h;
};

AnsatzJets eval_ansatz(const MetricAnsatzZ& a, double z) {
    AnsatzJets j{zjet2(a.f, z), zjet2(a.g, z), zjet2(a.h, z)};
    if (!(j.f.v > 0.0 && j.f.v * j.h.v - j.g.v * j.g.v > 0.0))
        throw NotSPD("ansatz: f > 0 and f h - g^2 > 0 required at Z = " + std::to_string(z));
    return j;
}

} // namespace

std::array<double, 4> ricci_ode_residuals(const MetricAnsatzZ& ansatz, double z) {
    AnsatzJets j = eval_ansatz(ansatz, z);
    double f = j.f.v, g = j.g.v, h = j.h.v;
    double fp = j.f.d, gp = j.g.d, hp = j.h.d;
    double fpp = j.f.dd, gpp = j.g.dd, hpp = j.h.dd;

    double r1 = 2 * f * h * fpp + f * fp * hp - 2 * f * gp * gp - 2 * g * g * fpp +
                2 * g * fp * gp - h * fp * fp;
    double r2 = 2 * h * gp * gp - h * fp * hp - 2 * g * gp * hp + f * hp * hp +
                2 * g * g * hpp - 2 * f * h * hpp;
    double r3 = h * fp * gp - 2 * g * fp * hp + f * gp * hp + 2 * g * g * gpp -
                2 * f * h * gpp;
    // Fourth equation: 4 D^2 Ric_33 with D = f h - g^2, i.e.
    // 2 D D'' - D'^2 + 2 D (g'^2 - f' h'), expanded.  Note the sign of the
    // f^2 h'^2 term: both solution branches zero this form exactly.
    double r4 = -h * h * fp * fp + 2 * f * h * h * fpp - f * f * hp * hp +
                4 * f * g * gp * hp - 2 * g * g * (fp * hp + f * hpp + gp * gp) -
                2 * h * (g * g * fpp + g * (-2 * fp * gp + 2 * f * gpp) +
                         f * (gp * gp - f * hpp)) +
                4 * g * g * g * gpp;
    return {r1, r2, r3, r4};
}

std::array<double, 3> solve_second_derivatives(double f, double g, double h, double fp,
                                               double gp, double hp) {
    double den = g * g - f * h;
    if (std::abs(den) <= 1e-14)
        throw DegenerateDenominator("solve_second_derivatives: |g^2 - f h| <= 1e-14");
    double d2 = 2.0 * den;
    double fpp = (-h * fp * fp + 2 * g * fp * gp - 2 * f * gp * gp + f * fp * hp) / d2;
    double gpp = (-h * fp * gp + 2 * g * fp * hp - f * gp * hp) / d2;
    double hpp = (-2 * h * gp * gp + h * fp * hp + 2 * g * gp * hp - f * hp * hp) / d2;
    return {fpp, gpp, hpp};
}

double reduced_flatness(const MetricAnsatzZ& ansatz, double z) {
    ZJet2 f = zjet2(ansatz.f, z), g = zjet2(ansatz.g, z), h = zjet2(ansatz.h, z);
    return (g.v * g.v - f.v * h.v) * (g.d * g.d - f.d * h.d);
}

FrameScalars frame_scalars(const CoframeZ& coframe) {
    ZFn a = coframe.a, b = coframe.b, c = coframe.c;
    FrameScalars s;
    auto guard = [](double v, const char* what) {
        if (v == 0.0) throw ZeroDenominator(std::string("frame_scalars: ") + what);
    };
    s.xi.e0 = [a, guard](double z) {
        double av = a.e0(z);
        guard(av, "a(Z) = 0");
        return zfn_deriv(a, z) / av;
    };
    s.xi.e1 = [a](const D1& z) { return zfn_deriv(a, z) / zfn_eval(a, z); };
    s.xi.e2 = [a](const D2& z) { return zfn_deriv(a, z) / zfn_eval(a, z); };
    s.eta.e0 = [c, guard](double z) {
        double cv = c.e0(z);
        guard(cv, "c(Z) = 0");
        return zfn_deriv(c, z) / cv;
    };
    s.eta.e1 = [c](const D1& z) { return zfn_deriv(c, z) / zfn_eval(c, z); };
    s.eta.e2 = [c](const D2& z) { return zfn_deriv(c, z) / zfn_eval(c, z); };
    auto psi = [a, b, c](auto z) {
        auto av = zfn_eval(a, z), bv = zfn_eval(b, z), cv = zfn_eval(c, z);
        auto bp = zfn_deriv(b, z), cp = zfn_deriv(c, z);
        return (bp * cv - bv * cp) / (2.0 * av * cv);
    };
    s.psi.e0 = [a, c, psi, guard](double z) {
        guard(a.e0(z), "a(Z) = 0");
        guard(c.e0(z), "c(Z) = 0");
        return psi(z);
    };
    s.psi.e1 = [psi](const D1& z) { return psi(z); };
    s.psi.e2 = [psi](const D2& z) { return psi(z); };
    return s;
}

std::array<double, 3> frame_scalars_at(const CoframeZ& coframe, double z) {
    FrameScalars s = frame_scalars(coframe);
    return {s.xi.e0(z), s.eta.e0(z), s.psi.e0(z)};
}

std::array<double, 5> structural_residuals(const FrameScalars& s, double z) {
    double xi = s.xi.e0(z), eta = s.eta.e0(z), psi = s.psi.e0(z);
    double xip = zfn_deriv(s.xi, z), etap = zfn_deriv(s.eta, z), psip = zfn_deriv(s.psi, z);
    return {psi * psi - xi * eta, 2 * eta * psi - psip, psip + 2 * psi * eta,
            psi * psi - eta * eta - etap, psi * psi - xip - xi * xi};
}

MetricField metric_from_ansatz(const MetricAnsatzZ& ansatz, const Domain& domain) {
    ZFn f = ansatz.f, g = ansatz.g, h = ansatz.h;
    return make_metric(domain, Chart::cartesian, [f, g, h](auto, auto, auto Z) {
        using T = decltype(Z);
        SymMat3<T> c;
        c.xx = zfn_eval(f, Z);
        c.xy = zfn_eval(g, Z);
        c.yy = zfn_eval(h, Z);
        c.zz = T(1.0);
        return c;
    });
}

MetricAnsatzZ ansatz_from_coframe(const CoframeZ& coframe) {
    ZFn a = coframe.a, b = coframe.b, c = coframe.c;
    MetricAnsatzZ m;
    m.zlo = coframe.zlo;
    m.zhi = coframe.zhi;
    m.f = make_zfn([a, b](auto z) {
        auto av = zfn_eval(a, z), bv = zfn_eval(b, z);
        return av * av + bv * bv;
    });
    m.g = make_zfn([b, c](auto z) { return zfn_eval(b, z) * zfn_eval(c, z); });
    m.h = make_zfn([c](auto z) {
        auto cv = zfn_eval(c, z);
        return cv * cv;
    });
    return m;
}

MetricAnsatzZ branch1_ansatz(double c1, double c2, double c3, double c4, double zlo,
                             double zhi) {
    MetricAnsatzZ m;
    m.zlo = zlo;
    m.zhi = zhi;
    m.f = make_zfn([c1, c2, c4](auto z) {
        auto w = z + c4;
        return c2 * c2 + c1 * c1 * w * w;
    });
    m.g = constant_zfn(c2 * c3);
    m.h = constant_zfn(c3 * c3);
    return m;
}

MetricAnsatzZ branch2_ansatz(double c1, double c2, double c3, double c4, double zlo,
                             double zhi) {
    MetricAnsatzZ m;
    m.zlo = zlo;
    m.zhi = zhi;
    m.f = make_zfn([c1, c2, c4](auto z) {
        auto w = z + c4;
        return c2 * c2 + c1 * c1 * w * w;
    });
    m.g = make_zfn([c1, c3, c4](auto z) {
        auto w = z + c4;
        return c1 * c3 * w * w;
    });
    m.h = make_zfn([c3, c4](auto z) {
        auto w = z + c4;
        return c3 * c3 * w * w;
    });
    return m;
}

CoframeZ branch1_coframe(double c1, double c2, double c3, double c4, double zlo, double zhi) {
    CoframeZ f;
    f.zlo = zlo;
    f.zhi = zhi;
    f.a = make_zfn([c1, c4](auto z) { return c1 * (z + c4); });
    f.b = constant_zfn(c2);
    f.c = constant_zfn(c3);
    return f;
}

CoframeZ branch2_coframe(double c1, double c2, double c3, double c4, double zlo, double zhi) {
    CoframeZ f;
    f.zlo = zlo;
    f.zhi = zhi;
    f.a = constant_zfn(c2);
    f.b = make_zfn([c1, c4](auto z) { return c1 * (z + c4); });
    f.c = make_zfn([c3, c4](auto z) { return c3 * (z + c4); });
    return f;
}

namespace {

using State6 = std::array<double, 6>;

State6 ansatz_rhs(const State6& y, double z) {
    auto [fpp, gpp, hpp] = solve_second_derivatives(y[0], y[1], y[2], y[3], y[4], y[5]);
    (void)z;
    return {y[3], y[4], y[5], fpp, gpp, hpp};
}

void check_spd_state(const State6& y, double z) {
    if (!(y[0] > 1e-12 && y[0] * y[2] - y[1] * y[1] > 1e-12))
        throw BlowUp("integrate_flat_ansatz: trajectory left the SPD region at Z = " +
                     std::to_string(z));
}

struct BranchModel {
    int branch; // 1 or 2
    Vec3<double> eval(double z, const std::array<double, 4>& p) const {
        double w = z + p[3];
        if (branch == 1)
            return {p[1] * p[1] + p[0] * p[0] * w * w, p[1] * p[2], p[2] * p[2]};
        return {p[1] * p[1] + p[0] * p[0] * w * w, p[0] * p[2] * w * w, p[2] * p[2] * w * w};
    }
    // Rows: (f, g, h); columns: d/dC1..d/dC4.
    void jacobian(double z, const std::array<double, 4>& p, double J[3][4]) const {
        double w = z + p[3];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) J[r][c] = 0;
        J[0][0] = 2 * p[0] * w * w;
        J[0][1] = 2 * p[1];
        J[0][3] = 2 * p[0] * p[0] * w;
        if (branch == 1) {
            J[1][1] = p[2];
            J[1][2] = p[1];
            J[2][2] = 2 * p[2];
        } else {
            J[1][0] = p[2] * w * w;
            J[1][2] = p[0] * w * w;
            J[1][3] = 2 * p[0] * p[2] * w;
            J[2][2] = 2 * p[2] * w * w;
            J[2][3] = 2 * p[2] * p[2] * w;
        }
    }
};

bool solve4(double a[4][4], double b[4], double x[4]) {
    int piv[4] = {0, 1, 2, 3};
    for (int c = 0; c < 4; ++c) {
        int best = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(a[piv[r]][c]) > std::abs(a[piv[best]][c])) best = r;
        std::swap(piv[c], piv[best]);
        double d = a[piv[c]][c];
        if (std::abs(d) < 1e-300) return false;
        for (int r = c + 1; r < 4; ++r) {
            double m = a[piv[r]][c] / d;
            for (int k = c; k < 4; ++k) a[piv[r]][k] -= m * a[piv[c]][k];
            b[piv[r]] -= m * b[piv[c]];
        }
    }
    for (int c = 3; c >= 0; --c) {
        double s = b[piv[c]];
        for (int k = c + 1; k < 4; ++k) s -= a[piv[c]][k] * x[k];
        x[c] = s / a[piv[c]][c];
    }
    return true;
}

double fit_cost(const BranchModel& model, const std::vector<AnsatzState>& samples,
                const std::array<double, 4>& p) {
    double s = 0;
    for (const auto& st : samples) {
        Vec3<double> m = model.eval(st.z, p);
        Vec3<double> d{m.x - st.y[0], m.y - st.y[1], m.z - st.y[2]};
        s += dot(d, d);
    }
    return s;
}

double fit_max_dev(const BranchModel& model, const std::vector<AnsatzState>& samples,
                   const std::array<double, 4>& p) {
    double s = 0;
    for (const auto& st : samples) {
        Vec3<double> m = model.eval(st.z, p);
        s = std::max({s, std::abs(m.x - st.y[0]), std::abs(m.y - st.y[1]),
                      std::abs(m.z - st.y[2])});
    }
    return s;
}

// Levenberg-Marquardt over the four branch constants.
std::array<double, 4> lm_fit(const BranchModel& model, const std::vector<AnsatzState>& samples,
                             std::array<double, 4> p) {
    double lambda = 1e-3;
    double cost = fit_cost(model, samples, p);
    for (int iter = 0; iter < 200; ++iter) {
        double jtj[4][4] = {};
        double jtr[4] = {};
        for (const auto& st : samples) {
            double J[3][4];
            model.jacobian(st.z, p, J);
            Vec3<double> m = model.eval(st.z, p);
            double r[3] = {m.x - st.y[0], m.y - st.y[1], m.z - st.y[2]};
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b)
                    for (int row = 0; row < 3; ++row) jtj[a][b] += J[row][a] * J[row][b];
                for (int row = 0; row < 3; ++row) jtr[a] += J[row][a] * r[row];
            }
        }
        double a[4][4], b[4], delta[4];
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) a[i][j] = jtj[i][j];
            a[i][i] += lambda * (jtj[i][i] + 1e-12);
            b[i] = -jtr[i];
        }
        if (!solve4(a, b, delta)) break;
        std::array<double, 4> q = p;
        for (int i = 0; i < 4; ++i) q[i] += delta[i];
        double qcost = fit_cost(model, samples, q);
        if (qcost < cost) {
            double step = std::abs(delta[0]) + std::abs(delta[1]) + std::abs(delta[2]) +
                          std::abs(delta[3]);
            p = q;
            cost = qcost;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (step < 1e-14) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    return p;
}

std::array<double, 4> initial_guess(const BranchModel& model,
                                    const std::vector<AnsatzState>& s) {
    size_t n = s.size();
    const AnsatzState &s0 = s.front(), &s1 = s[n / 2], &s2 = s.back();
    auto quad_coeffs = [&](int comp, double& a2, double& a1, double& a0) {
        // Exact quadratic through three samples of component comp.
        double z0 = s0.z, z1 = s1.z, z2 = s2.z;
        double y0 = s0.y[comp], y1 = s1.y[comp], y2 = s2.y[comp];
        double d01 = (y1 - y0) / (z1 - z0);
        double d12 = (y2 - y1) / (z2 - z1);
        a2 = (d12 - d01) / (z2 - z0);
        a1 = d01 - a2 * (z0 + z1);
        a0 = y0 - z0 * (a1 + a2 * z0);
    };
    std::array<double, 4> p{1, 1, 1, 0};
    if (model.branch == 1) {
        double c3 = std::sqrt(std::max(1e-12, 0.5 * (s0.y[2] + s2.y[2])));
        double c2 = 0.5 * (s0.y[1] + s2.y[1]) / c3;
        double a2, a1, a0;
        quad_coeffs(0, a2, a1, a0);
        double c1 = std::sqrt(std::max(a2, 1e-12));
        double c4 = a2 > 1e-12 ? a1 / (2 * a2) : 0.0;
        p = {c1, c2, c3, c4};
    } else {
        double b2, b1, b0;
        quad_coeffs(2, b2, b1, b0); // h = C3^2 (z + C4)^2
        double c3 = std::sqrt(std::max(b2, 1e-12));
        double c4 = b2 > 1e-12 ? b1 / (2 * b2) : 0.0;
        double wm = s1.z + c4;
        double c1 = std::abs(wm) > 1e-9 ? s1.y[1] / (c3 * wm * wm) : 1.0;
        double c2sq = s1.y[0] - c1 * c1 * wm * wm;
        p = {c1, std::sqrt(std::max(c2sq, 0.0)), c3, c4};
    }
    return p;
}

BranchFit fit_branch(int branch, const std::vector<AnsatzState>& samples) {
    BranchModel model{branch};
    std::array<double, 4> g0 = initial_guess(model, samples);
    std::array<std::array<double, 4>, 3> starts = {
        g0,
        {g0[0] * 1.2 + 0.1, g0[1] * 0.8 + 0.05, g0[2] * 1.1 + 0.05, g0[3] + 0.1},
        {1.0, 0.5, 1.0, 0.5},
    };
    BranchFit best;
    best.branch = branch == 1 ? "branch1" : "branch2";
    best.max_deviation = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        std::array<double, 4> p = lm_fit(model, samples, start);
        double dev = fit_max_dev(model, samples, p);
        if (dev < best.max_deviation) {
            best.max_deviation = dev;
            best.C = p;
        }
    }
    return best;
}

} // namespace

ClassifyResult integrate_flat_ansatz(const std::array<double, 6>& initial, double z0,
                                     double span, int steps) {
    if (steps < 1) throw InvalidParams("integrate_flat_ansatz: steps must be >= 1");
    check_spd_state(initial, z0);
    {
        double rf = (initial[1] * initial[1] - initial[0] * initial[2]) *
                    (initial[4] * initial[4] - initial[3] * initial[5]);
        if (std::abs(rf) > 1e-8)
            throw InconsistentInitialData(
                "integrate_flat_ansatz: reduced flatness of the initial data is " +
                std::to_string(rf) + " (must vanish within 1e-8)");
    }

    ClassifyResult res;
    res.trajectory.reserve(steps + 1);
    State6 y = initial;
    double h = span / steps;
    res.trajectory.push_back({z0, y});
    for (int k = 0; k < steps; ++k) {
        double z = z0 + k * h;
        State6 k1 = ansatz_rhs(y, z);
        State6 y2, y3, y4;
        for (int i = 0; i < 6; ++i) y2[i] = y[i] + 0.5 * h * k1[i];
        State6 k2 = ansatz_rhs(y2, z + 0.5 * h);
        for (int i = 0; i < 6; ++i) y3[i] = y[i] + 0.5 * h * k2[i];
        State6 k3 = ansatz_rhs(y3, z + 0.5 * h);
        for (int i = 0; i < 6; ++i) y4[i] = y[i] + h * k3[i];
        State6 k4 = ansatz_rhs(y4, z + h);
        for (int i = 0; i < 6; ++i)
            y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        check_spd_state(y, z + h);
        res.trajectory.push_back({z0 + (k + 1) * h, y});
    }

    // Fit samples: stride the trajectory down to at most 201 states.
    std::vector<AnsatzState> samples;
    int stride = std::max<int>(1, steps / 200);
    for (size_t i = 0; i < res.trajectory.size(); i += stride)
        samples.push_back(res.trajectory[i]);
    if (samples.back().z != res.trajectory.back().z) samples.push_back(res.trajectory.back());

    double dmax = 0;
    for (const auto& st : res.trajectory)
        dmax = std::max({dmax, std::abs(st.y[3]), std::abs(st.y[4]), std::abs(st.y[5])});
    if (dmax <= 1e-12) {
        res.homogeneous = true;
        BranchFit fit;
        fit.branch = "branch1";
        double c2 = std::sqrt(std::max(initial[0], 0.0));
        double c3 = c2 > 1e-9 ? initial[1] / c2 : std::sqrt(std::max(initial[2], 0.0));
        fit.C = {0.0, c2, c3, 0.0};
        fit.max_deviation = fit_max_dev(BranchModel{1}, samples, fit.C);
        res.best = fit;
        return res;
    }

    BranchFit f1 = fit_branch(1, samples);
    BranchFit f2 = fit_branch(2, samples);
    bool tie = std::abs(f1.max_deviation - f2.max_deviation) < 1e-10;
    if (f1.max_deviation <= f2.max_deviation) {
        res.best = f1;
        if (tie) res.alternative = f2;
    } else {
        res.best = f2;
        if (tie) res.alternative = f1;
    }
    return res;
}

namespace {

Omega omega_of(const MetricEval& e, const diffgeo::MetricSqrt& u) {
    diffgeo::Christoffel gamma = diffgeo::christoffel_of(e);
    Omega om{};
    for (int C = 0; C < 3; ++C)
        for (int A = 0; A < 3; ++A)
            for (int B = 0; B < 3; ++B) {
                double s = 0;
                for (int N = 0; N < 3; ++N) {
                    double t = 0;
                    for (int M = 0; M < 3; ++M) t += gamma[M][B][N] * u.U(C, M);
                    t -= u.dU[B](C, N);
                    s += t * u.Uinv(N, A);
                }
                om[C][A][B] = s;
            }
    return om;
}

} // namespace

Omega connection_omega(const MetricField& metric, const Point3& p) {
    MetricEval e = diffgeo::eval_metric(metric, p);
    diffgeo::MetricSqrt u = diffgeo::metric_sqrt(e);
    return omega_of(e, u);
}

Mat3d rodrigues_exp(const Mat3d& k, double s) {
    double skew = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) skew = std::max(skew, std::abs(k(i, j) + k(j, i)));
    if (skew > 1e-12) throw NotSkew("rodrigues_exp: matrix is not skew-symmetric");
    Vec3<double> w{k(2, 1), k(0, 2), k(1, 0)};
    double omega = norm(w);
    double c1, c2; // sin(ws)/w and (1 - cos(ws))/w^2
    if (omega < 1e-6) {
        double ws = omega * s;
        c1 = s * (1.0 - ws * ws / 6.0);
        c2 = 0.5 * s * s * (1.0 - ws * ws / 12.0);
    } else {
        c1 = std::sin(omega * s) / omega;
        c2 = (1.0 - std::cos(omega * s)) / (omega * omega);
    }
    return Mat3d::identity() + k * c1 + (k * k) * c2;
}

namespace {

Mat3d omega_contract(const Omega& om, const Vec3<double>& dir) {
    Mat3d k;
    for (int C = 0; C < 3; ++C)
        for (int A = 0; A < 3; ++A)
            k(C, A) = om[C][A][0] * dir.x + om[C][A][1] * dir.y + om[C][A][2] * dir.z;
    return k;
}

// One RK4 step of dR/ds = R K(s) with orthogonal re-projection.
Mat3d rotation_step(const MetricField& metric, const Point3& a, const Vec3<double>& dir,
                    double s, double h, const Mat3d& r) {
    auto kmat = [&](double t) {
        Point3 p = a + dir * t;
        return omega_contract(connection_omega(metric, p), dir);
    };
    Mat3d k1 = r * kmat(s);
    Mat3d k2 = (r + k1 * (0.5 * h)) * kmat(s + 0.5 * h);
    Mat3d k3 = (r + k2 * (0.5 * h)) * kmat(s + 0.5 * h);
    Mat3d k4 = (r + k3 * h) * kmat(s + h);
    return diffgeo::polar_project(r + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0));
}

struct TransportState {
    Mat3d r;
    Point3 phi;
};

// Joint transport of the rotation and the map along a straight segment:
// dR/ds = R K, dphi/ds = R U(gamma(s)) gamma'.
TransportState segment_transport(const MetricField& metric, const Point3& a, const Point3& b,
                                 TransportState st, int steps) {
    Vec3<double> dir = b - a;
    if (norm(dir) == 0.0) return st;
    double h = 1.0 / steps;
    auto eval = [&](double s) {
        Point3 p = a + dir * s;
        MetricEval e = diffgeo::eval_metric(metric, p);
        diffgeo::MetricSqrt u = diffgeo::metric_sqrt(e);
        Mat3d k = omega_contract(omega_of(e, u), dir);
        return std::pair<Mat3d, Mat3d>(k, u.U.full());
    };
    for (int i = 0; i < steps; ++i) {
        double s = i * h;
        auto [ka, ua] = eval(s);
        auto [km, um] = eval(s + 0.5 * h);
        auto [kb, ub] = eval(s + h);

        Mat3d r1 = st.r * ka;
        Vec3<double> p1 = (st.r * ua) * dir;
        Mat3d r2 = (st.r + r1 * (0.5 * h)) * km;
        Vec3<double> p2 = ((st.r + r1 * (0.5 * h)) * um) * dir;
        Mat3d r3 = (st.r + r2 * (0.5 * h)) * km;
        Vec3<double> p3 = ((st.r + r2 * (0.5 * h)) * um) * dir;
        Mat3d r4 = (st.r + r3 * h) * kb;
        Vec3<double> p4 = ((st.r + r3 * h) * ub) * dir;

        st.r = diffgeo::polar_project(st.r + (r1 + r2 * 2.0 + r3 * 2.0 + r4) * (h / 6.0));
        st.phi = st.phi + (p1 + p2 * 2.0 + p3 * 2.0 + p4) * (h / 6.0);
    }
    return st;
}

void require_flat_on(const MetricField& metric, const std::vector<Point3>& pts, double tol) {
    for (const Point3& p : pts) {
        double r = max_abs(diffgeo::ricci(metric, p));
        if (r > tol)
            throw NotFlat("metric is not flat: |Ric| = " + std::to_string(r) + " at (" +
                          std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
                          std::to_string(p.z) + ")");
    }
}

} // namespace

Mat3d transport_rotation(const MetricField& metric, const PathSpec& path, const Mat3d& r0) {
    if (orthogonality_defect(r0) > 1e-10)
        throw NotOrthogonal("transport_rotation: R0 must be orthogonal");
    std::vector<Point3> probes;
    for (int i = 0; i < 5; ++i)
        probes.push_back(path.start + (path.end - path.start) * (double(i) / 4.0));
    require_flat_on(metric, probes, 1e-8);

    Mat3d r = r0;
    Vec3<double> dir = path.end - path.start;
    double h = 1.0 / path.steps;
    for (int i = 0; i < path.steps; ++i)
        r = rotation_step(metric, path.start, dir, i * h, h, r);
    if (orthogonality_defect(r) > 1e-10)
        throw NotOrthogonal("transport_rotation: transported rotation left the group");
    return r;
}

ReconstructionResult reconstruct_map(const MetricField& metric, const Domain& grid,
                                     const Point3& base, const Mat3d& r0,
                                     const ReconstructOptions& opts) {
    grid.require_inside(base);
    if (orthogonality_defect(r0) > 1e-10)
        throw NotOrthogonal("reconstruct_map: R0 must be orthogonal");

    // Flatness gate over the whole reconstruction grid.
    {
        std::vector<Point3> pts;
        pts.reserve(size_t(grid.nx) * grid.ny * grid.nz);
        for (int k = 0; k < grid.nz; ++k)
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i) pts.push_back(grid.node(i, j, k));
        require_flat_on(metric, pts, opts.flat_tol);
    }

    auto steps_for = [&](const Point3& a, const Point3& b) {
        double len = norm(b - a);
        return std::max(2, int(std::ceil(len * opts.steps_per_unit)));
    };
    auto idx = [&](int i, int j, int k) { return (size_t(k) * grid.ny + j) * grid.nx + i; };

    ReconstructionResult res;
    res.grid = grid;
    res.base = base;
    res.phi.resize(size_t(grid.nx) * grid.ny * grid.nz);
    res.rotation.resize(res.phi.size());

    // Anchor: transport from the base point to its nearest grid node.
    auto nearest = [&](double v, double lo, double hi, int n) {
        double t = (v - lo) / (hi - lo) * (n - 1);
        return std::clamp(int(std::lround(t)), 0, n - 1);
    };
    int ib = nearest(base.x, grid.lo.x, grid.hi.x, grid.nx);
    int jb = nearest(base.y, grid.lo.y, grid.hi.y, grid.ny);
    int kb = nearest(base.z, grid.lo.z, grid.hi.z, grid.nz);

    TransportState anchor{r0, base};
    Point3 anchor_node = grid.node(ib, jb, kb);
    anchor = segment_transport(metric, base, anchor_node, anchor, steps_for(base, anchor_node));

    auto march_line = [&](int fixed_j, int fixed_k, int from_i, const TransportState& start,
                          auto&& store) {
        store(from_i, start);
        TransportState st = start;
        for (int i = from_i + 1; i < grid.nx; ++i) {
            st = segment_transport(metric, grid.node(i - 1, fixed_j, fixed_k),
                                   grid.node(i, fixed_j, fixed_k), st,
                                   steps_for(grid.node(i - 1, fixed_j, fixed_k),
                                             grid.node(i, fixed_j, fixed_k)));
            store(i, st);
        }
        st = start;
        for (int i = from_i - 1; i >= 0; --i) {
            st = segment_transport(metric, grid.node(i + 1, fixed_j, fixed_k),
                                   grid.node(i, fixed_j, fixed_k), st,
                                   steps_for(grid.node(i + 1, fixed_j, fixed_k),
                                             grid.node(i, fixed_j, fixed_k)));
            store(i, st);
        }
    };

    // X line through the anchor, then Y lines, then Z columns.
    std::vector<TransportState> xline(grid.nx), yplane(size_t(grid.nx) * grid.ny);
    march_line(jb, kb, ib, anchor, [&](int i, const TransportState& st) { xline[i] = st; });
    for (int i = 0; i < grid.nx; ++i) {
        TransportState st = xline[i];
        auto store = [&](int j, const TransportState& s) { yplane[size_t(j) * grid.nx + i] = s; };
        store(jb, st);
        TransportState cur = st;
        for (int j = jb + 1; j < grid.ny; ++j) {
            cur = segment_transport(metric, grid.node(i, j - 1, kb), grid.node(i, j, kb), cur,
                                    steps_for(grid.node(i, j - 1, kb), grid.node(i, j, kb)));
            store(j, cur);
        }
        cur = st;
        for (int j = jb - 1; j >= 0; --j) {
            cur = segment_transport(metric, grid.node(i, j + 1, kb), grid.node(i, j, kb), cur,
                                    steps_for(grid.node(i, j + 1, kb), grid.node(i, j, kb)));
            store(j, cur);
        }
    }
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            TransportState st = yplane[size_t(j) * grid.nx + i];
            res.phi[idx(i, j, kb)] = st.phi;
            res.rotation[idx(i, j, kb)] = st.r;
            TransportState cur = st;
            for (int k = kb + 1; k < grid.nz; ++k) {
                cur = segment_transport(metric, grid.node(i, j, k - 1), grid.node(i, j, k), cur,
                                        steps_for(grid.node(i, j, k - 1), grid.node(i, j, k)));
                res.phi[idx(i, j, k)] = cur.phi;
                res.rotation[idx(i, j, k)] = cur.r;
            }
            cur = st;
            for (int k = kb - 1; k >= 0; --k) {
                cur = segment_transport(metric, grid.node(i, j, k + 1), grid.node(i, j, k), cur,
                                        steps_for(grid.node(i, j, k + 1), grid.node(i, j, k)));
                res.phi[idx(i, j, k)] = cur.phi;
                res.rotation[idx(i, j, k)] = cur.r;
            }
        }

    // Strain round trip of the assembled gradient field F = R U.
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                Point3 p = grid.node(i, j, k);
                MetricEval e = diffgeo::eval_metric(metric, p);
                Mat3d f = res.rotation[idx(i, j, k)] * diffgeo::metric_sqrt(e).U.full();
                double d = max_abs(sym(transpose(f) * f) - e.value);
                res.fxf_defect = std::max(res.fxf_defect, d);
            }

    // Mixed-partial defect: holonomy of the rotation transport around grid
    // plaquettes, per unit area.  Vanishes exactly when the transported F
    // field has symmetric mixed partials.
    {
        auto loop_defect = [&](const Point3& p0, const Point3& pa, const Point3& pab,
                               const Point3& pb, double area) {
            Mat3d r = Mat3d::identity();
            TransportState st{r, {0, 0, 0}};
            double edge = std::max({norm(pa - p0), norm(pab - pa), norm(pb - pab)});
            int steps = std::max(opts.plaquette_edge_steps,
                                 std::min(200, int(std::ceil(edge * opts.steps_per_unit))));
            st = segment_transport(metric, p0, pa, st, steps);
            st = segment_transport(metric, pa, pab, st, steps);
            st = segment_transport(metric, pab, pb, st, steps);
            st = segment_transport(metric, pb, p0, st, steps);
            return max_abs(st.r - Mat3d::identity()) / area;
        };
        int sx = std::max(1, (grid.nx - 1) / opts.max_plaquettes_per_axis);
        int sy = std::max(1, (grid.ny - 1) / opts.max_plaquettes_per_axis);
        int sz = std::max(1, (grid.nz - 1) / opts.max_plaquettes_per_axis);
        for (int k = 0; k < grid.nz; k += sz)
            for (int j = 0; j < grid.ny - 1; j += sy)
                for (int i = 0; i < grid.nx - 1; i += sx) {
                    double d = loop_defect(grid.node(i, j, k), grid.node(i + 1, j, k),
                                           grid.node(i + 1, j + 1, k), grid.node(i, j + 1, k),
                                           grid.hx() * grid.hy());
                    res.mixed_partial_defect = std::max(res.mixed_partial_defect, d);
                }
        for (int k = 0; k < grid.nz - 1; k += sz)
            for (int j = 0; j < grid.ny; j += sy)
                for (int i = 0; i < grid.nx - 1; i += sx) {
                    double d = loop_defect(grid.node(i, j, k), grid.node(i + 1, j, k),
                                           grid.node(i + 1, j, k + 1), grid.node(i, j, k + 1),
                                           grid.hx() * grid.hz());
                    res.mixed_partial_defect = std::max(res.mixed_partial_defect, d);
                }
        for (int k = 0; k < grid.nz - 1; k += sz)
            for (int j = 0; j < grid.ny - 1; j += sy)
                for (int i = 0; i < grid.nx; i += sx) {
                    double d = loop_defect(grid.node(i, j, k), grid.node(i, j + 1, k),
                                           grid.node(i, j + 1, k + 1), grid.node(i, j, k + 1),
                                           grid.hy() * grid.hz());
                    res.mixed_partial_defect = std::max(res.mixed_partial_defect, d);
                }
    }

    // Path independence: staircase X-Y-Z (the stored field) against Z-Y-X at
    // the corner probes and the grid center.
    {
        std::array<std::array<int, 3>, 9> probes{};
        int c = 0;
        for (int k : {0, grid.nz - 1})
            for (int j : {0, grid.ny - 1})
                for (int i : {0, grid.nx - 1}) probes[c++] = {i, j, k};
        probes[8] = {grid.nx / 2, grid.ny / 2, grid.nz / 2};
        for (const auto& pr : probes) {
            std::array<Point3, 4> wp = {anchor_node,
                                        grid.node(ib, jb, pr[2]),
                                        grid.node(ib, pr[1], pr[2]),
                                        grid.node(pr[0], pr[1], pr[2])};
            TransportState st = anchor;
            for (int s = 0; s + 1 < 4; ++s)
                st = segment_transport(metric, wp[s], wp[s + 1], st,
                                       steps_for(wp[s], wp[s + 1]));
            size_t id = idx(pr[0], pr[1], pr[2]);
            double d = std::max(max_abs(st.phi - res.phi[id]),
                                max_abs(st.r - res.rotation[id]));
            res.path_independence_defect = std::max(res.path_independence_defect, d);
        }
    }

    return res;
}

} // namespace inextensa::compat
