#include "inextensa/specio.hpp"

#include <algorithm>

namespace inextensa::specio {

using constitutive::EnergyFunction;
using constitutive::ResponseTriple;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    if (!j.is_object()) throw InvalidParams(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = std::any_of(allowed.begin(), allowed.end(),
                              [&](const char* k) { return it.key() == k; });
        if (!ok) throw InvalidParams(where + ": unknown key \"" + it.key() + "\"");
    }
}

Domain parse_domain_array(const json& arr, int grid_default) {
    if (!arr.is_array() || arr.size() != 6)
        throw InvalidParams("domain: expected [x0,x1,y0,y1,z0,z1]");
    Domain d;
    d.lo = {arr[0].get<double>(), arr[2].get<double>(), arr[4].get<double>()};
    d.hi = {arr[1].get<double>(), arr[3].get<double>(), arr[5].get<double>()};
    d.nx = d.ny = d.nz = grid_default;
    d.validate();
    return d;
}

namespace {

double num(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    return j.at(key).get<double>();
}

std::array<double, 8> parse_c8(const json& params, const std::string& where) {
    reject_unknown_keys(params, {"C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"}, where);
    std::array<double, 8> c{};
    for (int i = 0; i < 8; ++i) c[i] = num(params, ("C" + std::to_string(i + 1)).c_str(), 0.0);
    return c;
}

std::vector<double> parse_poly(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw InvalidParams(where + ": expected a coefficient array");
    std::vector<double> c;
    for (const auto& v : j) c.push_back(v.get<double>());
    return c;
}

} // namespace

ParsedFamily parse_family(const json& j) {
    reject_unknown_keys(j, {"family", "params", "sign", "domain"}, "family spec");
    if (!j.contains("family")) throw InvalidParams("family spec: missing \"family\"");
    ParsedFamily out;
    out.echo = j;
    std::string name = j.at("family").get<std::string>();
    json params = j.contains("params") ? j.at("params") : json::object();

    if (j.contains("domain")) out.domain = parse_domain_array(j.at("domain"));

    if (name == "sine-warp") {
        reject_unknown_keys(params, {"amplitude"}, "sine-warp params");
        out.fixture = true;
        out.fixture_amplitude = num(params, "amplitude", 0.1);
        return out;
    }

    families::FamilySpec spec;
    spec.kind = families::kind_from_name(name);
    switch (spec.kind) {
        case families::Kind::z0: {
            reject_unknown_keys(params, {"a"}, "z0 params");
            if (!params.contains("a")) throw InvalidParams("z0 params: missing matrix \"a\"");
            const json& a = params.at("a");
            if (!a.is_array() || a.size() != 3)
                throw InvalidParams("z0 params: \"a\" must be a 3x3 array");
            for (int i = 0; i < 3; ++i) {
                if (!a[i].is_array() || a[i].size() != 3)
                    throw InvalidParams("z0 params: \"a\" must be a 3x3 array");
                for (int k = 0; k < 3; ++k) spec.z0.a(i, k) = a[i][k].get<double>();
            }
            break;
        }
        case families::Kind::z1: spec.z1.C = parse_c8(params, "z1 params"); break;
        case families::Kind::z2: spec.z2.C = parse_c8(params, "z2 params"); break;
        case families::Kind::f5z: {
            reject_unknown_keys(params, {"C1", "C2", "C3", "C4"}, "5z params");
            for (int i = 0; i < 4; ++i)
                spec.f5z.C[i] = num(params, ("C" + std::to_string(i + 1)).c_str(), 0.0);
            spec.f5z.sign = 1;
            if (j.contains("sign")) {
                double s = j.at("sign").get<double>();
                if (s != 1.0 && s != -1.0) throw InvalidParams("family spec: sign must be +-1");
                spec.f5z.sign = int(s);
            }
            break;
        }
    }
    spec.domain = out.domain;
    out.spec = spec;
    return out;
}

json family_json(const families::FamilySpec& spec) {
    json j;
    j["family"] = families::kind_name(spec.kind);
    json p = json::object();
    switch (spec.kind) {
        case families::Kind::z0: {
            json rows = json::array();
            for (int i = 0; i < 3; ++i)
                rows.push_back(json::array(
                    {spec.z0.a(i, 0), spec.z0.a(i, 1), spec.z0.a(i, 2)}));
            p["a"] = rows;
            break;
        }
        case families::Kind::z1:
            for (int i = 0; i < 8; ++i) p["C" + std::to_string(i + 1)] = spec.z1.C[i];
            break;
        case families::Kind::z2:
            for (int i = 0; i < 8; ++i) p["C" + std::to_string(i + 1)] = spec.z2.C[i];
            break;
        case families::Kind::f5z:
            for (int i = 0; i < 4; ++i) p["C" + std::to_string(i + 1)] = spec.f5z.C[i];
            break;
    }
    j["params"] = p;
    if (spec.kind == families::Kind::f5z) j["sign"] = spec.f5z.sign;
    return j;
}

DeformationMap fixture_sine_warp(double amplitude, const Domain& domain) {
    return make_map(domain, Chart::cartesian, [amplitude](auto X, auto Y, auto Z) {
        using T = decltype(X);
        return Vec3<T>{X + amplitude * sin(X), Y, Z};
    });
}

ParsedMetric parse_metric(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw InvalidParams("metric spec: missing \"kind\"");
    ParsedMetric out;
    out.echo = j;
    out.kind = j.at("kind").get<std::string>();
    if (j.contains("domain")) out.domain = parse_domain_array(j.at("domain"));

    if (out.kind == "branch1" || out.kind == "branch2") {
        reject_unknown_keys(j, {"kind", "params", "domain"}, out.kind + " metric spec");
        json params = j.contains("params") ? j.at("params") : json::object();
        reject_unknown_keys(params, {"C1", "C2", "C3", "C4"}, out.kind + " params");
        double c1 = num(params, "C1", 1.0), c2 = num(params, "C2", 0.5);
        double c3 = num(params, "C3", 1.0), c4 = num(params, "C4", 0.0);
        bool b1 = out.kind == "branch1";
        out.field = [=](const Domain& d) {
            compat::MetricAnsatzZ a = b1 ? compat::branch1_ansatz(c1, c2, c3, c4, d.lo.z, d.hi.z)
                                         : compat::branch2_ansatz(c1, c2, c3, c4, d.lo.z, d.hi.z);
            return compat::metric_from_ansatz(a, d);
        };
        Domain dd = out.domain.value_or(Domain::unit_box());
        out.ansatz = b1 ? compat::branch1_ansatz(c1, c2, c3, c4, dd.lo.z, dd.hi.z)
                        : compat::branch2_ansatz(c1, c2, c3, c4, dd.lo.z, dd.hi.z);
        return out;
    }

    if (out.kind == "constant") {
        reject_unknown_keys(j, {"kind", "entries", "domain"}, "constant metric spec");
        if (!j.contains("entries")) throw InvalidParams("constant metric: missing \"entries\"");
        const json& e = j.at("entries");
        reject_unknown_keys(e, {"c11", "c12", "c13", "c22", "c23", "c33"}, "constant entries");
        SymMat3d c;
        c.xx = num(e, "c11", 1.0);
        c.xy = num(e, "c12", 0.0);
        c.xz = num(e, "c13", 0.0);
        c.yy = num(e, "c22", 1.0);
        c.yz = num(e, "c23", 0.0);
        c.zz = num(e, "c33", 1.0);
        out.field = [c](const Domain& d) {
            return make_metric(d, Chart::cartesian, [c](auto X, auto, auto) {
                using T = decltype(X);
                SymMat3<T> r;
                r.xx = T(c.xx);
                r.xy = T(c.xy);
                r.xz = T(c.xz);
                r.yy = T(c.yy);
                r.yz = T(c.yz);
                r.zz = T(c.zz);
                return r;
            });
        };
        return out;
    }

    if (out.kind == "diag-poly") {
        reject_unknown_keys(j, {"kind", "var", "c11", "c22", "c33", "domain"},
                            "diag-poly metric spec");
        std::string var = j.contains("var") ? j.at("var").get<std::string>() : "Z";
        if (var != "X" && var != "Y" && var != "Z")
            throw InvalidParams("diag-poly: var must be X, Y or Z");
        int axis = var == "X" ? 0 : (var == "Y" ? 1 : 2);
        auto c11 = j.contains("c11") ? parse_poly(j.at("c11"), "c11") : std::vector<double>{1};
        auto c22 = j.contains("c22") ? parse_poly(j.at("c22"), "c22") : std::vector<double>{1};
        auto c33 = j.contains("c33") ? parse_poly(j.at("c33"), "c33") : std::vector<double>{1};
        out.field = [=](const Domain& d) {
            return make_metric(d, Chart::cartesian, [=](auto X, auto Y, auto Z) {
                using T = decltype(X);
                T t = axis == 0 ? X : (axis == 1 ? Y : Z);
                auto horner = [&](const std::vector<double>& c) {
                    T r(0.0);
                    for (int i = int(c.size()) - 1; i >= 0; --i) r = r * t + c[i];
                    return r;
                };
                return SymMat3<T>::diag(horner(c11), horner(c22), horner(c33));
            });
        };
        if (axis == 2) {
            compat::MetricAnsatzZ a;
            a.f = compat::poly_zfn(c11);
            a.g = compat::constant_zfn(0.0);
            a.h = compat::poly_zfn(c22);
            Domain dd = out.domain.value_or(Domain::unit_box());
            a.zlo = dd.lo.z;
            a.zhi = dd.hi.z;
            out.ansatz = a;
        }
        return out;
    }

    if (out.kind == "custom-poly") {
        reject_unknown_keys(j, {"kind", "f", "g", "h", "domain"}, "custom-poly metric spec");
        auto f = parse_poly(j.contains("f") ? j.at("f") : json::array({1.0}), "f");
        auto g = j.contains("g") ? parse_poly(j.at("g"), "g") : std::vector<double>{0};
        auto h = j.contains("h") ? parse_poly(j.at("h"), "h") : std::vector<double>{1};
        compat::MetricAnsatzZ a;
        a.f = compat::poly_zfn(f);
        a.g = compat::poly_zfn(g);
        a.h = compat::poly_zfn(h);
        Domain dd = out.domain.value_or(Domain::unit_box());
        a.zlo = dd.lo.z;
        a.zhi = dd.hi.z;
        out.ansatz = a;
        out.field = [a](const Domain& d) { return compat::metric_from_ansatz(a, d); };
        return out;
    }

    if (out.kind == "spline") {
        reject_unknown_keys(j, {"kind", "knots", "domain"}, "spline metric spec");
        if (!j.contains("knots")) throw InvalidParams("spline metric: missing \"knots\"");
        const json& kn = j.at("knots");
        if (!kn.is_array() || kn.size() < 3)
            throw InvalidParams("spline metric: need at least 3 knots [z, f, g, h]");
        std::vector<double> z, f, g, h;
        for (const auto& row : kn) {
            if (!row.is_array() || row.size() != 4)
                throw InvalidParams("spline metric: each knot is [z, f, g, h]");
            z.push_back(row[0].get<double>());
            f.push_back(row[1].get<double>());
            g.push_back(row[2].get<double>());
            h.push_back(row[3].get<double>());
        }
        compat::MetricAnsatzZ a;
        a.f = compat::spline_zfn(z, f);
        a.g = compat::spline_zfn(z, g);
        a.h = compat::spline_zfn(z, h);
        a.zlo = z.front();
        a.zhi = z.back();
        out.ansatz = a;
        out.field = [a](const Domain& d) { return compat::metric_from_ansatz(a, d); };
        return out;
    }

    if (out.kind == "rotated") {
        reject_unknown_keys(j, {"kind", "lambda1", "lambda2", "theta", "domain"},
                            "rotated metric spec");
        auto l1 = parse_poly(j.contains("lambda1") ? j.at("lambda1") : json::array({1.0}),
                             "lambda1");
        auto l2 = parse_poly(j.contains("lambda2") ? j.at("lambda2") : json::array({1.0}),
                             "lambda2");
        std::string var = "Z";
        double scale = 1.0;
        if (j.contains("theta")) {
            const json& th = j.at("theta");
            reject_unknown_keys(th, {"var", "scale"}, "rotated theta");
            if (th.contains("var")) var = th.at("var").get<std::string>();
            scale = num(th, "scale", 1.0);
        }
        if (var != "X" && var != "Y" && var != "Z")
            throw InvalidParams("rotated: theta var must be X, Y or Z");
        int axis = var == "X" ? 0 : (var == "Y" ? 1 : 2);
        out.field = [=](const Domain& d) {
            return make_metric(d, Chart::cartesian, [=](auto X, auto Y, auto Z) {
                using T = decltype(X);
                auto horner = [&](const std::vector<double>& c) {
                    T r(0.0);
                    for (int i = int(c.size()) - 1; i >= 0; --i) r = r * Z + c[i];
                    return r;
                };
                T s1 = horner(l1), s2 = horner(l2);
                T lam1 = s1 * s1, lam2 = s2 * s2;
                T th = (axis == 0 ? X : (axis == 1 ? Y : Z)) * scale;
                T cth = cos(th), sth = sin(th);
                SymMat3<T> c;
                c.xx = lam1 * cth * cth + lam2 * sth * sth;
                c.xy = (lam1 - lam2) * sth * cth;
                c.yy = lam1 * sth * sth + lam2 * cth * cth;
                c.zz = T(1.0);
                return c;
            });
        };
        return out;
    }

    throw InvalidParams("metric spec: unknown kind \"" + out.kind + "\"");
}

ParsedInitial parse_initial(const json& j) {
    reject_unknown_keys(j, {"initial", "z0", "span", "steps"}, "initial-condition spec");
    if (!j.contains("initial")) throw InvalidParams("initial-condition spec: missing \"initial\"");
    const json& y = j.at("initial");
    reject_unknown_keys(y, {"f", "g", "h", "df", "dg", "dh"}, "initial");
    ParsedInitial out;
    out.echo = j;
    out.y0 = {num(y, "f", 1.0), num(y, "g", 0.0), num(y, "h", 1.0),
              num(y, "df", 0.0), num(y, "dg", 0.0), num(y, "dh", 0.0)};
    out.z0 = num(j, "z0", 0.0);
    out.span = num(j, "span", 1.0);
    out.steps = j.contains("steps") ? j.at("steps").get<int>() : 1000;
    if (out.steps < 1) throw InvalidParams("initial-condition spec: steps must be >= 1");
    return out;
}

namespace {

json poly_coefficients(const constitutive::Poly3& p) {
    json arr = json::array();
    for (double c : p.coef) arr.push_back(c);
    return arr;
}

} // namespace

json material_json(const ResponseTriple& r) {
    json j;
    j["kind"] = "response";
    j["degree"] = r.degree;
    j["seed"] = r.seed;
    json coef = json::array();
    coef.push_back(poly_coefficients(r.chi));
    coef.push_back(poly_coefficients(r.xi));
    coef.push_back(poly_coefficients(r.eta));
    j["coefficients"] = coef;
    return j;
}

json material_json(const EnergyFunction& w) {
    json j;
    j["kind"] = "energy";
    j["degree"] = w.degree;
    j["seed"] = w.seed;
    j["coefficients"] = poly_coefficients(w.W);
    return j;
}

} // namespace inextensa::specio
