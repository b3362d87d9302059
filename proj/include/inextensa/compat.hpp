#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "inextensa/diffgeo.hpp"
#include "inextensa/domain.hpp"
#include "inextensa/fields.hpp"

namespace inextensa::compat {

// Scalar function of Z evaluable with truncated-Taylor scalars up to third
// order; derived quantities (frame scalars) provide one order less.
struct ZFn {
    std::function<double(double)> e0;
    std::function<D1(const D1&)> e1;
    std::function<D2(const D2&)> e2;
    std::function<D3(const D3&)> e3;
};

template <class F>
ZFn make_zfn(F&& f) {
    ZFn z;
    z.e0 = [f](double x) { return f(x); };
    z.e1 = [f](const D1& x) { return f(x); };
    z.e2 = [f](const D2& x) { return f(x); };
    z.e3 = [f](const D3& x) { return f(x); };
    return z;
}

template <class T>
T zfn_eval(const ZFn& fn, const T& z) {
    if constexpr (std::is_same_v<T, double>) return fn.e0(z);
    else if constexpr (std::is_same_v<T, D1>) return fn.e1(z);
    else if constexpr (std::is_same_v<T, D2>) return fn.e2(z);
    else return fn.e3(z);
}

// d/dZ as a T-valued quantity, via evaluation one order up.
template <class T>
T zfn_deriv(const ZFn& fn, const T& z) {
    Dual3<T> zz;
    zz.v = z;
    zz.g[2] = T(1.0);
    return zfn_eval(fn, zz).g[2];
}

struct ZJet2 {
    double v, d, dd;
};
ZJet2 zjet2(const ZFn& fn, double z);

ZFn poly_zfn(std::vector<double> ascending_coefficients);
ZFn constant_zfn(double c);

// Natural cubic spline through (z, y) samples, evaluable at any order.
ZFn spline_zfn(std::vector<double> z, std::vector<double> y);

// Z-dependent strain ansatz [[f, g, 0], [g, h, 0], [0, 0, 1]] with
// f > 0 and f h - g^2 > 0 on the interval.
struct MetricAnsatzZ {
    ZFn f, g, h;
    double zlo = 0, zhi = 1;
};

// Coframe  theta^1 = a dX,  theta^2 = b dX + c dY,  theta^3 = dZ,
// with a, c nonzero on the interval.
struct CoframeZ {
    ZFn a, b, c;
    double zlo = 0, zhi = 1;
};

// Connection scalars of the coframe: xi = a'/a, eta = c'/c,
// psi = (b'c - b c') / (2 a c).
struct FrameScalars {
    ZFn xi, eta, psi;
};

// The four compatibility ODE residuals of the Z-ansatz, evaluated verbatim.
std::array<double, 4> ricci_ode_residuals(const MetricAnsatzZ& ansatz, double z);

// Second derivatives solved from the first three compatibility equations.
std::array<double, 3> solve_second_derivatives(double f, double g, double h, double fp,
                                               double gp, double hp);

// (g^2 - f h)(g'^2 - f' h'), the reduced flatness condition.
double reduced_flatness(const MetricAnsatzZ& ansatz, double z);

FrameScalars frame_scalars(const CoframeZ& coframe);
std::array<double, 3> frame_scalars_at(const CoframeZ& coframe, double z);

// Residuals of the five structural flatness ODEs:
//   psi^2 - xi eta, 2 eta psi - psi', psi' + 2 psi eta,
//   psi^2 - eta^2 - eta', psi^2 - xi' - xi^2.
std::array<double, 5> structural_residuals(const FrameScalars& s, double z);

MetricField metric_from_ansatz(const MetricAnsatzZ& ansatz, const Domain& domain);
MetricAnsatzZ ansatz_from_coframe(const CoframeZ& coframe);

MetricAnsatzZ branch1_ansatz(double c1, double c2, double c3, double c4, double zlo,
                             double zhi);
MetricAnsatzZ branch2_ansatz(double c1, double c2, double c3, double c4, double zlo,
                             double zhi);
CoframeZ branch1_coframe(double c1, double c2, double c3, double c4, double zlo, double zhi);
CoframeZ branch2_coframe(double c1, double c2, double c3, double c4, double zlo, double zhi);

struct AnsatzState {
    double z;
    std::array<double, 6> y; // f, g, h, f', g', h'
};

struct BranchFit {
    std::string branch; // "branch1" | "branch2"
    std::array<double, 4> C{};
    double max_deviation = 0;
};

struct ClassifyResult {
    std::vector<AnsatzState> trajectory;
    BranchFit best;
    std::optional<BranchFit> alternative; // present on a tie
    bool homogeneous = false;             // constant trajectory
};

// RK4 integration of the flatness ODE system closed by the solved second
// derivatives, followed by a least-squares fit of both closed-form branches.
ClassifyResult integrate_flat_ansatz(const std::array<double, 6>& initial, double z0,
                                     double span, int steps);

// Omega[C][A][B] of the rotation transport PDE R^a_{A,B} = R^a_C Omega^C_{AB}.
using Omega = std::array<std::array<std::array<double, 3>, 3>, 3>;
Omega connection_omega(const MetricField& metric, const Point3& p);

Mat3d rodrigues_exp(const Mat3d& k, double s);

struct PathSpec {
    Point3 start, end;
    int steps = 1000;
};

Mat3d transport_rotation(const MetricField& metric, const PathSpec& path, const Mat3d& r0);

struct ReconstructOptions {
    int steps_per_unit = 1000;
    double flat_tol = 1e-8;
    int plaquette_edge_steps = 32;
    int max_plaquettes_per_axis = 8;
};

struct ReconstructionResult {
    Domain grid;
    Point3 base;
    std::vector<Point3> phi; // X-fastest node order
    std::vector<Mat3d> rotation;
    double fxf_defect = 0;
    double mixed_partial_defect = 0;
    double path_independence_defect = 0;
};

// Recover the deformation from a flat strain field: parallel-transport the
// rotation along an axis-ordered staircase (X then Y then Z) from the base
// and line-integrate F = R U jointly.
ReconstructionResult reconstruct_map(const MetricField& metric, const Domain& grid,
                                     const Point3& base, const Mat3d& r0,
                                     const ReconstructOptions& opts = {});

} // namespace inextensa::compat
