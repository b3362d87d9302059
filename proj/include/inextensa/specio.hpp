#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "inextensa/compat.hpp"
#include "inextensa/constitutive.hpp"
#include "inextensa/families.hpp"
#include "inextensa/fields.hpp"

// JSON descriptors for family, metric and material specs.  Parsers reject
// unknown keys so configuration typos fail loudly.
namespace inextensa::specio {

using json = nlohmann::ordered_json;

// ---- family specs ---------------------------------------------------------

// "sine-warp" is a built-in non-universal verification fixture
// phi = (X + amplitude sin X, Y, Z); it satisfies C_ZZ = 1 but violates the
// universality constraints, so verify runs on it must fail numerically.
struct ParsedFamily {
    bool fixture = false;
    families::FamilySpec spec;       // valid when !fixture
    double fixture_amplitude = 0.1;  // valid when fixture
    std::optional<Domain> domain;
    json echo;
};

ParsedFamily parse_family(const json& j);
json family_json(const families::FamilySpec& spec);

DeformationMap fixture_sine_warp(double amplitude, const Domain& domain);

// ---- metric specs ----------------------------------------------------------

struct ParsedMetric {
    std::string kind;
    std::optional<Domain> domain;
    json echo;
    // Builders; ansatz is present for the Z-dependent two-by-two kinds.
    std::function<MetricField(const Domain&)> field;
    std::optional<compat::MetricAnsatzZ> ansatz;
};

ParsedMetric parse_metric(const json& j);

// ---- initial-condition specs for branch classification ---------------------

struct ParsedInitial {
    std::array<double, 6> y0{}; // f, g, h, f', g', h'
    double z0 = 0;
    double span = 1;
    int steps = 1000;
    json echo;
};

ParsedInitial parse_initial(const json& j);

// ---- materials --------------------------------------------------------------

json material_json(const constitutive::ResponseTriple& r);
json material_json(const constitutive::EnergyFunction& w);

// ---- shared helpers ---------------------------------------------------------

Domain parse_domain_array(const json& arr, int grid_default = 21);
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where);

} // namespace inextensa::specio
