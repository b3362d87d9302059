#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "inextensa/linalg.hpp"

namespace inextensa::report {

inline constexpr const char* kTool = "inextensa";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchema = 1;

// All report floats go through "%.9g" so identical configs produce
// byte-identical files.
std::string g9(double v);

// Serialize with stable key order (ordered_json) and %.9g floats.
std::string dump(const nlohmann::ordered_json& j, int indent = 2);

std::uint64_t fnv1a(const std::string& bytes);

// Running |.|-statistics of one named residual over a grid sweep.
struct Aggregate {
    std::string name;
    double max_abs = 0;
    double sum_abs = 0;
    std::size_t count = 0;
    Point3 argmax{};

    void add(const Point3& p, double value);
    double mean_abs() const { return count ? sum_abs / double(count) : 0.0; }
};

nlohmann::ordered_json aggregate_json(const Aggregate& a, double tol);

nlohmann::ordered_json point_json(const Point3& p);

} // namespace inextensa::report
