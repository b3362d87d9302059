#include "inextensa/constitutive.hpp"

#include <cmath>

#include "inextensa/diffgeo.hpp"

namespace inextensa::constitutive {

int Poly3::n_terms(int degree) {
    return (degree + 1) * (degree + 2) * (degree + 3) / 6;
}

std::array<int, 3> Poly3::exponent(int degree, int term) {
    int idx = 0;
    for (int i = 0; i <= degree; ++i)
        for (int j = 0; j <= degree - i; ++j)
            for (int k = 0; k <= degree - i - j; ++k, ++idx)
                if (idx == term) return {i, j, k};
    throw InvalidParams("Poly3: term index out of range");
}

Poly3 Poly3::derivative(int var) const {
    Poly3 d;
    d.degree = degree;
    d.coef.assign(coef.size(), 0.0);
    int idx = 0;
    for (int i = 0; i <= degree; ++i)
        for (int j = 0; j <= degree - i; ++j)
            for (int k = 0; k <= degree - i - j; ++k, ++idx) {
                std::array<int, 3> e{i, j, k};
                if (e[var] == 0 || coef[idx] == 0.0) continue;
                double c = coef[idx] * e[var];
                e[var] -= 1;
                int tgt = -1, t = 0;
                for (int a = 0; a <= degree && tgt < 0; ++a)
                    for (int b = 0; b <= degree - a && tgt < 0; ++b)
                        for (int cc = 0; cc <= degree - a - b; ++cc, ++t)
                            if (a == e[0] && b == e[1] && cc == e[2]) {
                                tgt = t;
                                break;
                            }
                d.coef[tgt] += c;
            }
    return d;
}

namespace {

Poly3 random_poly(Rng& rng, int degree) {
    Poly3 p;
    p.degree = degree;
    p.coef.resize(Poly3::n_terms(degree));
    for (double& c : p.coef) c = rng.uniform(-1.0, 1.0);
    return p;
}

} // namespace

ResponseTriple ResponseTriple::random(std::uint64_t seed, int degree) {
    Rng rng(seed);
    Poly3 chi = random_poly(rng, degree);
    Poly3 xi = random_poly(rng, degree);
    Poly3 eta = random_poly(rng, degree);
    return from_polys(std::move(chi), std::move(xi), std::move(eta), seed);
}

ResponseTriple ResponseTriple::from_polys(Poly3 chi, Poly3 xi, Poly3 eta, std::uint64_t seed) {
    ResponseTriple r;
    r.seed = seed;
    r.degree = chi.degree;
    r.chi = std::move(chi);
    r.xi = std::move(xi);
    r.eta = std::move(eta);
    for (int v = 0; v < 3; ++v) {
        r.chi_d[v] = r.chi.derivative(v);
        r.xi_d[v] = r.xi.derivative(v);
        r.eta_d[v] = r.eta.derivative(v);
    }
    return r;
}

EnergyFunction EnergyFunction::random(std::uint64_t seed, int degree) {
    Rng rng(seed);
    return from_poly(random_poly(rng, degree), seed);
}

EnergyFunction EnergyFunction::from_poly(Poly3 w, std::uint64_t seed) {
    EnergyFunction e;
    e.seed = seed;
    e.degree = w.degree;
    e.W = std::move(w);
    for (int v = 0; v < 3; ++v) e.W_d[v] = e.W.derivative(v);
    int idx = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j, ++idx) e.W_dd[idx] = e.W_d[i].derivative(j);
    return e;
}

const Poly3& EnergyFunction::second(int i, int j) const {
    if (i > j) std::swap(i, j);
    static constexpr int map[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return W_dd[map[i][j]];
}

SymMat3d sbar_cauchy(const SymMat3d& c, const SymMat3d& g, const ResponseTriple& r) {
    auto [craised, braised] = diffgeo::raise_indices(c, g);
    diffgeo::Invariants iv = diffgeo::invariants(c, g);
    double chi = r.chi.eval(iv.I1, iv.I2, iv.I3);
    double xi = r.xi.eval(iv.I1, iv.I2, iv.I3);
    double eta = r.eta.eval(iv.I1, iv.I2, iv.I3);
    return inverse(g) * chi + craised * xi + braised * eta;
}

SymMat3d sbar_hyper(const SymMat3d& c, const SymMat3d& g, const EnergyFunction& w) {
    auto [craised, braised] = diffgeo::raise_indices(c, g);
    diffgeo::Invariants iv = diffgeo::invariants(c, g);
    double w1 = w.W_d[0].eval(iv.I1, iv.I2, iv.I3);
    double w2 = w.W_d[1].eval(iv.I1, iv.I2, iv.I3);
    double w3 = w.W_d[2].eval(iv.I1, iv.I2, iv.I3);
    return inverse(g) * (2.0 * (w1 + w2 * iv.I1)) + craised * (-2.0 * w2) +
           braised * (2.0 * w3 * iv.I3);
}

SymMat3d sbar(const SymMat3d& c, const SymMat3d& g, const Material& m) {
    if (std::holds_alternative<ResponseTriple>(m))
        return sbar_cauchy(c, g, std::get<ResponseTriple>(m));
    return sbar_hyper(c, g, std::get<EnergyFunction>(m));
}

SymMat3d full_second_pk(const SymMat3d& sbar, double tension, const Vec3<double>& n) {
    double nn = dot(n, n);
    if (std::abs(nn - 1.0) > 1e-12)
        throw NotUnit("full_second_pk: fiber direction must be a unit vector");
    SymMat3d s = sbar;
    s.xx += tension * n.x * n.x;
    s.yy += tension * n.y * n.y;
    s.zz += tension * n.z * n.z;
    s.xy += tension * n.x * n.y;
    s.xz += tension * n.x * n.z;
    s.yz += tension * n.y * n.z;
    return s;
}

} // namespace inextensa::constitutive
