#include "inextensa/report.hpp"

#include <cmath>
#include <cstdio>

namespace inextensa::report {

std::string g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

void dump_rec(const nlohmann::ordered_json& j, int indent, int depth, std::string& out) {
    std::string pad(size_t(indent) * depth, ' ');
    std::string pad1(size_t(indent) * (depth + 1), ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad1;
                out += nlohmann::ordered_json(it.key()).dump();
                out += ": ";
                dump_rec(it.value(), indent, depth + 1, out);
            }
            out += "\n" + pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad1;
                dump_rec(v, indent, depth + 1, out);
            }
            out += "\n" + pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float: {
            double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            out += g9(v);
            return;
        }
        default:
            out += j.dump();
            return;
    }
}

} // namespace

std::string dump(const nlohmann::ordered_json& j, int indent) {
    std::string out;
    dump_rec(j, indent, 0, out);
    out += "\n";
    return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void Aggregate::add(const Point3& p, double value) {
    double a = std::abs(value);
    sum_abs += a;
    ++count;
    if (a > max_abs) {
        max_abs = a;
        argmax = p;
    }
}

nlohmann::ordered_json aggregate_json(const Aggregate& a, double tol) {
    nlohmann::ordered_json j;
    j["max_abs"] = a.max_abs;
    j["mean_abs"] = a.mean_abs();
    j["argmax"] = point_json(a.argmax);
    j["tol"] = tol;
    j["pass"] = a.max_abs <= tol;
    return j;
}

nlohmann::ordered_json point_json(const Point3& p) {
    return nlohmann::ordered_json::array({p.x, p.y, p.z});
}

} // namespace inextensa::report
