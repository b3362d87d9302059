#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "inextensa/domain.hpp"
#include "inextensa/dual.hpp"
#include "inextensa/errors.hpp"
#include "inextensa/linalg.hpp"
#include "inextensa/rng.hpp"

namespace inextensa::constitutive {

// Trivariate polynomial in the principal invariants, total degree <= degree.
// Monomials are ordered lexicographically in (i, j, k) exponents of
// (I1, I2, I3), which fixes the coefficient layout in reports.
struct Poly3 {
    int degree = 3;
    std::vector<double> coef;

    static int n_terms(int degree);
    static std::array<int, 3> exponent(int degree, int term);

    template <class T>
    T eval(const T& x, const T& y, const T& z) const {
        T r(0.0);
        int idx = 0;
        for (int i = 0; i <= degree; ++i)
            for (int j = 0; j <= degree - i; ++j)
                for (int k = 0; k <= degree - i - j; ++k, ++idx) {
                    double c = coef[idx];
                    if (c == 0.0) continue;
                    r = r + c * ipow(x, i) * ipow(y, j) * ipow(z, k);
                }
        return r;
    }

    Poly3 derivative(int var) const;
};

// Randomized Cauchy-elastic response (chi, xi, eta)(I1, I2, I3).  Degree <= 3
// with coefficients in [-1, 1]; deterministic given the seed.
struct ResponseTriple {
    std::uint64_t seed = 0;
    int degree = 3;
    Poly3 chi, xi, eta;
    std::array<Poly3, 3> chi_d, xi_d, eta_d;

    static ResponseTriple random(std::uint64_t seed, int degree = 3);
    static ResponseTriple from_polys(Poly3 chi, Poly3 xi, Poly3 eta, std::uint64_t seed = 0);
};

// Randomized hyperelastic energy W(I1, I2, I3) with first and second
// derivative tables; W_ij is stored once per unordered pair so the mixed
// partials are equal exactly.
struct EnergyFunction {
    std::uint64_t seed = 0;
    int degree = 3;
    Poly3 W;
    std::array<Poly3, 3> W_d;
    std::array<Poly3, 6> W_dd; // order: 11, 12, 13, 22, 23, 33

    static EnergyFunction random(std::uint64_t seed, int degree = 3);
    static EnergyFunction from_poly(Poly3 w, std::uint64_t seed = 0);

    const Poly3& second(int i, int j) const;
};

using Material = std::variant<ResponseTriple, EnergyFunction>;

// Referential fiber tension (Lagrange multiplier conjugate to C_ZZ = 1).
// deriv_z is the analytic Z-derivative of the quadrature representation; at
// grid nodes it reproduces the integrand to roundoff.
struct TensionField {
    Domain domain;
    std::function<double(double, double)> base; // T0 on the Z0 face
    std::function<double(const Point3&)> eval;
    std::function<double(const Point3&)> deriv_z;
};

SymMat3d sbar_cauchy(const SymMat3d& c, const SymMat3d& g, const ResponseTriple& r);
SymMat3d sbar_hyper(const SymMat3d& c, const SymMat3d& g, const EnergyFunction& w);
SymMat3d sbar(const SymMat3d& c, const SymMat3d& g, const Material& m);

// S = T N (x) N + Sbar; N must be a unit vector.
SymMat3d full_second_pk(const SymMat3d& sbar, double tension, const Vec3<double>& n);

} // namespace inextensa::constitutive
