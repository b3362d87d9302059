#pragma once

#include <array>
#include <utility>

#include "inextensa/domain.hpp"
#include "inextensa/errors.hpp"
#include "inextensa/fields.hpp"
#include "inextensa/linalg.hpp"

namespace inextensa::diffgeo {

// Gamma[C][A][B], symmetric in (A, B).
using Christoffel = std::array<std::array<std::array<double, 3>, 3>, 3>;

struct Invariants {
    double I1, I2, I3;
};

struct SpdSqrt {
    SymMat3d U;
    SymMat3d Uinv;
};

struct Eigen3 {
    Vec3<double> lambda; // descending
    Mat3d V;             // columns are eigenvectors
};

struct Principal2x2 {
    double lambda1_sq; // >= lambda2_sq
    double lambda2_sq;
    double theta;      // block = R(theta) diag(l1^2, l2^2) R(theta)^T, R = [[c,-s],[s,c]]
};

// Metric square root with first partials, solved from dU U + U dU = dC.
struct MetricSqrt {
    SymMat3d U;
    SymMat3d Uinv;
    std::array<SymMat3d, 3> dU;
};

// Positive definiteness gate: determinant and leading minors must exceed
// 1e-14, otherwise downstream inverses amplify near-singularity silently.
void require_spd(const SymMat3d& c, const char* what = "metric");

MetricEval eval_metric(const MetricField& metric, const Point3& p);

Christoffel christoffel_of(const MetricEval& e);
Christoffel christoffel(const MetricField& metric, const Point3& p);

// Ricci curvature with the sign convention
//   Ric_AB = d_A Gamma^C_CB - d_C Gamma^C_AB + Gamma^C_AD Gamma^D_CB
//            - Gamma^C_CD Gamma^D_AB,
// fixed so that diag(lambda^2(Z), lambda^2(Z), 1) has
// Ric_11 = lambda'^2 + lambda lambda''.
SymMat3d ricci_of(const MetricEval& e);
SymMat3d ricci(const MetricField& metric, const Point3& p);

Mat3d deformation_gradient(const DeformationMap& map, const Point3& p);
SymMat3d right_cauchy_green(const DeformationMap& map, const Point3& p);

Invariants invariants(const SymMat3d& c, const SymMat3d& g);
double jacobian_det(const Mat3d& f, const SymMat3d& G, const SymMat3d& g);

Eigen3 sym_eigen(const SymMat3d& a);
SpdSqrt spd_sqrt(const SymMat3d& c);
MetricSqrt metric_sqrt(const MetricEval& e);

Principal2x2 principal_decomposition_2x2(double c11, double c12, double c22);

// (C^AB, B^AB) with indices raised by G; B is the inverse strain, whose
// fully contravariant components equal the plain inverse of [C_AB].
std::pair<SymMat3d, SymMat3d> raise_indices(const SymMat3d& c, const SymMat3d& g);

// Orthogonal projection M (M^T M)^{-1/2}, used to keep transported rotations
// on the group.
Mat3d polar_project(const Mat3d& m);

// Templated invariants for derivative-carrying scalars.
template <class T>
Vec3<T> invariants_t(const SymMat3<T>& c, const SymMat3<T>& g) {
    SymMat3<T> ginv = inverse(g);
    Mat3<T> m = ginv.full() * c.full();
    T i1 = trace(m);
    T i2 = (i1 * i1 - trace(m * m)) * 0.5;
    T i3 = det(m);
    return {i1, i2, i3};
}

} // namespace inextensa::diffgeo
