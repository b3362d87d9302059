#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "inextensa/domain.hpp"
#include "inextensa/fields.hpp"
#include "inextensa/linalg.hpp"

namespace inextensa::families {

// Catalog of universal deformation families for solids with inextensible
// straight fibers along Z.
//
//   z0  homogeneous Z-isometric:  x = a X, with unit third column of a
//   z1  bending/shear with strain depending on Z only (first ODE branch)
//   z2  generalized helical bending (second ODE branch)
//   f5z constant-invariant isochoric wedge map, verified on a Cartesian
//       wedge with X > 0
enum class Kind { z0, z1, z2, f5z };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& s);

struct Z0Params {
    Mat3d a;
};
struct Z1Params {
    std::array<double, 8> C{}; // C1..C8 = C[0]..C[7]
};
struct Z2Params {
    std::array<double, 8> C{};
};
struct F5ZParams {
    std::array<double, 4> C{}; // C1..C4
    int sign = +1;
};

struct FamilySpec {
    Kind kind = Kind::z0;
    Z0Params z0;
    Z1Params z1;
    Z2Params z2;
    F5ZParams f5z;
    std::optional<Domain> domain; // optional override carried by the spec
};

Domain default_domain(Kind kind, int n = 21);

// Throws InvalidParams (parameter invariant broken) or DomainConflict
// (singular locus intersects the domain).
void validate(const FamilySpec& spec, const Domain& domain);

DeformationMap make_family(const FamilySpec& spec, const Domain& domain);

// 5Z in its native cylindrical coordinates (R, Theta, Z) -> (r, theta, z);
// used for the chart-covariance checks.
DeformationMap make_5z_cylindrical(const F5ZParams& p, const Domain& domain_cyl);

// Closed-form right Cauchy-Green strain.  For z0/z1/z2 the components are
// Cartesian; for f5z they are cylindrical with R = sqrt(X^2 + Y^2) of the
// given Cartesian point.
SymMat3d closed_form_C(const FamilySpec& spec, const Point3& p);

// Cartesian components of the 5Z strain at a Cartesian wedge point.
SymMat3d closed_form_C_cartesian_5z(const F5ZParams& p, const Point3& pt);

double closed_form_J(const FamilySpec& spec, const Point3& p);

// Closed-form strain as an analytic metric field on the domain (Cartesian
// components for every family).
MetricField metric_field(const FamilySpec& spec, const Domain& domain);

struct FiberImage {
    std::vector<Point3> points;
    double straightness_defect; // max distance to the chord
    double speed_defect;        // max | |dphi/dZ| - 1 |
};

FiberImage fiber_image(const FamilySpec& spec, const Domain& domain, double x0, double y0,
                       int samples);

} // namespace inextensa::families
