#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inextensa/constitutive.hpp"
#include "inextensa/domain.hpp"
#include "inextensa/fields.hpp"

namespace inextensa::universality {

// Metric value with first partials only (enough for every constraint).
struct MetricJet1 {
    SymMat3d value;
    std::array<SymMat3d, 3> d;
};

MetricJet1 eval_metric_jet1(const MetricField& metric, const Point3& p);

// Universality constraints of the Cauchy-elastic class, evaluated pointwise
// in the Cartesian chart (G = I).  Material equilibrium of the second
// Piola-Kirchhoff stress is Div(F S) = 0, which per free index A reads
// E^A(S) = S^{AB}_{,B} + Ghat^A_{CB} S^{CB} with Ghat the Levi-Civita
// connection of the strain itself; the divergence rows therefore carry the
// Ghat correction (it vanishes identically for Z-dependent strains of the
// reduced form, where it reduces to the plain partial divergence).
// For A in {1, 2} and i in {1, 2, 3}:
//   div_C_A     = E^A(C#)             div_B_A     = E^A(B#)
//   conn_trace_A = Ghat^A_{BB}        (the G#-channel row)
//   grad_Ii_A   = I_{i,A}
//   C_grad_Ii_A = C^{AB} I_{i,B}      B_grad_Ii_A = B^{AB} I_{i,B}
// plus czz = |C_33 - 1|.
struct CauchyResiduals {
    static constexpr int count = 25;
    static const std::array<const char*, count>& names();
    std::array<double, count> v{};
    double max_abs() const;
};

// Universality constraints of the hyperelastic class: the energy-derivative
// coefficient rows for A in {1, 2} (W1, W2, W3, W11, W22, W33, W12, W13,
// W23 channels, with the same Ghat-corrected divergences), plus czz.
struct HyperResiduals {
    static constexpr int count = 19;
    static const std::array<const char*, count>& names();
    std::array<double, count> v{};
    double max_abs() const;
};

CauchyResiduals cauchy_universality_residuals(const MetricField& metric, const Point3& p);
HyperResiduals hyper_universality_residuals(const MetricField& metric, const Point3& p);

enum class Case { case_i, case_ii };

struct CaseClassification {
    std::array<double, 3> max_grad{}; // per invariant, over the grid
    double threshold = 1e-8;
    Case label = Case::case_ii;
};

CaseClassification classify_invariants(const MetricField& metric, const Domain& grid,
                                        double threshold = 1e-8);

// Equilibrium forcing F^A = -Sbar^{AB}_{,B} with the constitutive
// derivative chain rule.  Works for both material classes: the hyperelastic
// stress is an effective response with chi = 2(W1 + W2 I1), xi = -2 W2,
// eta = 2 W3 I3.
Vec3<double> equilibrium_forcing(const MetricField& metric, const constitutive::Material& mat,
                                 const Point3& p);

// Cumulative Simpson quadrature of F^3 along one fiber column, refined by
// `substeps` per grid interval.  values[k] holds the integral from lo.z to
// z_knot(k) = lo.z + k * h_sub.
struct TensionColumn {
    double z0 = 0, h_sub = 0;
    std::vector<double> f3;     // integrand at the knots
    std::vector<double> values; // cumulative integral at the knots
};

TensionColumn tension_column(const MetricField& metric, const constitutive::Material& mat,
                             double x, double y, const Domain& grid, int substeps);

constitutive::TensionField solve_tension(
    const MetricField& metric, const constitutive::Material& mat, const Domain& grid,
    std::function<double(double, double)> t0, int substeps = 8);

// Full equilibrium verification Div S = 0 with S = T N (x) N + Sbar, N = e_Z.
// Rows A = 1, 2 are the analytic constitutive divergences.  Row 3 is the
// interval-mean defect of the tension ODE: cumulative-Simpson increments of
// the solved tension against an independent Gauss-Legendre quadrature of the
// forcing, divided by the interval length.  Residuals are also reported
// scaled by max(1, |Sbar|, |F|) of the sampled material over the grid; the
// pass verdict uses the scaled values so the criterion is invariant under
// the material's overall stress magnitude.
struct MaterialRun {
    std::uint64_t seed;
    std::array<double, 3> max_abs{}; // per equation row, raw
    std::array<Point3, 3> argmax{};
    double scale = 1.0;
    double scaled_max() const {
        return std::max({max_abs[0], max_abs[1], max_abs[2]}) / scale;
    }
};

struct EquilibriumReport {
    std::vector<MaterialRun> runs;
    double tol = 1e-7;
    double max_raw = 0;
    double max_scaled = 0;
    bool pass = true;
};

enum class MaterialKind { response, energy };

EquilibriumReport full_equilibrium_residual(const MetricField& metric, const Domain& grid,
                                            MaterialKind kind, int samples, std::uint64_t seed,
                                            double tol = 1e-7, int substeps = 8);

} // namespace inextensa::universality
