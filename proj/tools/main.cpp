#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "inextensa/compat.hpp"
#include "inextensa/constitutive.hpp"
#include "inextensa/diffgeo.hpp"
#include "inextensa/families.hpp"
#include "inextensa/report.hpp"
#include "inextensa/specio.hpp"
#include "inextensa/universality.hpp"

using namespace inextensa;
using json = nlohmann::ordered_json;

namespace {

struct CommonOpts {
    std::string spec_path;
    std::string out_path;
    std::vector<double> domain;
    std::vector<int> grid;
    double tol_diff = 1e-10;
    double tol_quad = 1e-7;
    int materials = 10;
    std::uint64_t seed = 1;
    std::string format;
    std::string records = "aggregate"; // none | aggregate | full
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_spec = true) {
    auto* spec = cmd->add_option("--spec", o.spec_path, "input spec JSON path");
    if (need_spec) spec->required();
    cmd->add_option("--domain", o.domain, "x0,x1,y0,y1,z0,z1")->delimiter(',')->expected(6);
    cmd->add_option("--grid", o.grid, "N or N,N,N")->delimiter(',')->expected(1, 3);
    cmd->add_option("--tol-diff", o.tol_diff, "tolerance for differential residuals");
    cmd->add_option("--tol-quad", o.tol_quad, "tolerance for quadrature-coupled residuals");
    cmd->add_option("--materials", o.materials, "sampled material count");
    cmd->add_option("--seed", o.seed, "base seed (INEXTENSA_SEED as fallback)");
    cmd->add_option("--out", o.out_path, "output path (stdout when omitted)");
    cmd->add_option("--format", o.format, "obj|json")->check(CLI::IsMember({"obj", "json"}));
    cmd->add_option("--records", o.records, "none|aggregate|full")
        ->check(CLI::IsMember({"none", "aggregate", "full"}));
}

std::uint64_t env_seed() {
    if (const char* s = std::getenv("INEXTENSA_SEED")) return std::strtoull(s, nullptr, 10);
    return 1;
}

json read_spec(const std::string& path, std::string* raw = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidParams("cannot open spec file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    if (raw) *raw = ss.str();
    try {
        return json::parse(ss.str());
    } catch (const std::exception& e) {
        throw InvalidParams("spec JSON parse error in " + path + ": " + e.what());
    }
}

Domain apply_grid(Domain d, const std::vector<int>& grid) {
    if (grid.size() == 2) throw InvalidParams("--grid takes one or three counts");
    if (grid.size() == 1) d.nx = d.ny = d.nz = grid[0];
    else if (grid.size() == 3) {
        d.nx = grid[0];
        d.ny = grid[1];
        d.nz = grid[2];
    }
    d.validate();
    return d;
}

Domain resolve_domain(const CommonOpts& o, const std::optional<Domain>& spec_domain,
                      const Domain& fallback) {
    Domain d = fallback;
    if (spec_domain) {
        d = *spec_domain;
        d.nx = fallback.nx;
        d.ny = fallback.ny;
        d.nz = fallback.nz;
    }
    if (o.domain.size() == 6) {
        d.lo = {o.domain[0], o.domain[2], o.domain[4]};
        d.hi = {o.domain[1], o.domain[3], o.domain[5]};
    }
    return apply_grid(d, o.grid);
}

void write_output(const CommonOpts& o, const std::string& bytes) {
    if (o.out_path.empty()) {
        std::fwrite(bytes.data(), 1, bytes.size(), stdout);
        return;
    }
    std::ofstream out(o.out_path, std::ios::binary);
    if (!out) throw InvalidParams("cannot open output file: " + o.out_path);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

json meta_json(const char* command, const CommonOpts& o, const Domain& d) {
    json j;
    j["schema"] = report::kSchema;
    j["tool"] = report::kTool;
    j["version"] = report::kVersion;
    j["command"] = command;
    j["domain"] = json::array({d.lo.x, d.hi.x, d.lo.y, d.hi.y, d.lo.z, d.hi.z});
    j["grid"] = json::array({d.nx, d.ny, d.nz});
    j["seed"] = o.seed;
    json tol;
    tol["diff"] = o.tol_diff;
    tol["quad"] = o.tol_quad;
    j["tolerances"] = tol;
    return j;
}

// One full residual sweep over the grid; aggregates keyed by residual name.
struct SweepResult {
    std::vector<report::Aggregate> agg;
    std::vector<std::string> names;
    json records = json::array();
    double max_abs = 0;

    void init(const std::vector<std::string>& n) {
        names = n;
        agg.resize(n.size());
        for (size_t i = 0; i < n.size(); ++i) agg[i].name = n[i];
    }
};

SweepResult sweep_metric(const MetricField& metric, const Domain& grid, bool keep_records) {
    SweepResult s;
    std::vector<std::string> names;
    names.push_back("ricci");
    for (const char* n : universality::CauchyResiduals::names()) names.push_back(n);
    for (const char* n : universality::HyperResiduals::names())
        if (std::string(n) != "czz") names.push_back(n);
    s.init(names);

    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                Point3 p = grid.node(i, j, k);
                std::vector<double> row;
                row.reserve(names.size());
                row.push_back(max_abs(diffgeo::ricci(metric, p)));
                auto cr = universality::cauchy_universality_residuals(metric, p);
                for (double v : cr.v) row.push_back(v);
                auto hr = universality::hyper_universality_residuals(metric, p);
                for (int t = 0; t < universality::HyperResiduals::count - 1; ++t)
                    row.push_back(hr.v[t]);
                for (size_t t = 0; t < row.size(); ++t) {
                    s.agg[t].add(p, row[t]);
                    s.max_abs = std::max(s.max_abs, std::abs(row[t]));
                }
                if (keep_records) {
                    json rec;
                    rec["point"] = report::point_json(p);
                    json vals;
                    for (size_t t = 0; t < row.size(); ++t) vals[names[t]] = row[t];
                    rec["values"] = vals;
                    s.records.push_back(rec);
                }
            }
    return s;
}

json aggregates_json(const SweepResult& s, double tol) {
    json j;
    for (const auto& a : s.agg) j[a.name] = report::aggregate_json(a, tol);
    return j;
}

bool sweep_pass(const SweepResult& s, double tol) {
    for (const auto& a : s.agg)
        if (a.max_abs > tol) return false;
    return true;
}

void print_failures(const SweepResult& s, double tol) {
    for (const auto& a : s.agg)
        if (a.max_abs > tol)
            std::fprintf(stderr, "FAIL %s: max %.9g at (%.9g, %.9g, %.9g), tol %.9g\n",
                         a.name.c_str(), a.max_abs, a.argmax.x, a.argmax.y, a.argmax.z, tol);
}

void require_format(const CommonOpts& o, const char* expected, const char* cmd) {
    if (!o.format.empty() && o.format != expected)
        throw InvalidParams(std::string(cmd) + " writes " + expected +
                            " output (got --format " + o.format + ")");
}

int cmd_verify_family(const CommonOpts& o) {
    require_format(o, "json", "verify-family");
    std::string raw;
    specio::ParsedFamily pf = specio::parse_family(read_spec(o.spec_path, &raw));
    Domain fallback = pf.fixture ? Domain::unit_box()
                                 : families::default_domain(pf.spec.kind);
    Domain grid = resolve_domain(o, pf.domain, fallback);

    DeformationMap map = pf.fixture
                             ? specio::fixture_sine_warp(pf.fixture_amplitude, grid)
                             : families::make_family(pf.spec, grid);
    MetricField metric = pf.fixture ? metric_from_map(map)
                                    : families::metric_field(pf.spec, grid);

    // Map-level agreement sweep: C_ZZ, closed form vs F^T F, Jacobian sign.
    report::Aggregate czz_map{{"czz_map"}}, closed{{"closed_form_agreement"}};
    int jsign = 0;
    bool jsign_const = true;
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                Point3 p = grid.node(i, j, k);
                SymMat3d c = diffgeo::right_cauchy_green(map, p);
                czz_map.add(p, c.zz - 1.0);
                if (!pf.fixture) {
                    SymMat3d cf = pf.spec.kind == families::Kind::f5z
                                      ? families::closed_form_C_cartesian_5z(pf.spec.f5z, p)
                                      : families::closed_form_C(pf.spec, p);
                    closed.add(p, max_abs(c - cf));
                }
                double dj = det(diffgeo::deformation_gradient(map, p));
                int sg = dj > 0 ? 1 : -1;
                if (jsign == 0) jsign = sg;
                else if (jsign != sg) jsign_const = false;
            }

    SweepResult sweep = sweep_metric(metric, grid, o.records == "full");
    auto eq = universality::full_equilibrium_residual(
        metric, grid, universality::MaterialKind::response, o.materials, o.seed, o.tol_quad);

    bool pass = sweep_pass(sweep, o.tol_diff) && czz_map.max_abs <= o.tol_diff &&
                (pf.fixture || closed.max_abs <= o.tol_diff) && eq.pass && jsign_const;

    json rep = meta_json("verify-family", o, grid);
    rep["spec"] = pf.echo;
    rep["materials"] = o.materials;
    rep["jacobian_sign"] = jsign;
    rep["jacobian_sign_constant"] = jsign_const;
    json res = aggregates_json(sweep, o.tol_diff);
    res["czz_map"] = report::aggregate_json(czz_map, o.tol_diff);
    if (!pf.fixture) res["closed_form_agreement"] = report::aggregate_json(closed, o.tol_diff);
    rep["residuals"] = res;
    json eqj;
    eqj["tol"] = eq.tol;
    eqj["max_raw"] = eq.max_raw;
    eqj["max_scaled"] = eq.max_scaled;
    eqj["pass"] = eq.pass;
    json runs = json::array();
    for (const auto& r : eq.runs) {
        json rj;
        rj["seed"] = r.seed;
        rj["material"] =
            specio::material_json(constitutive::ResponseTriple::random(r.seed));
        rj["max_abs"] = json::array({r.max_abs[0], r.max_abs[1], r.max_abs[2]});
        rj["scale"] = r.scale;
        rj["scaled_max"] = r.scaled_max();
        rj["argmax"] = json::array({report::point_json(r.argmax[0]),
                                    report::point_json(r.argmax[1]),
                                    report::point_json(r.argmax[2])});
        runs.push_back(rj);
    }
    eqj["runs"] = runs;
    rep["equilibrium"] = eqj;
    if (o.records == "full") rep["records"] = sweep.records;
    rep["pass"] = pass;
    write_output(o, report::dump(rep));

    if (!pass) {
        print_failures(sweep, o.tol_diff);
        if (czz_map.max_abs > o.tol_diff)
            std::fprintf(stderr, "FAIL czz_map: max %.9g at (%.9g, %.9g, %.9g)\n",
                         czz_map.max_abs, czz_map.argmax.x, czz_map.argmax.y,
                         czz_map.argmax.z);
        if (!eq.pass)
            std::fprintf(stderr, "FAIL equilibrium: scaled max %.9g, tol %.9g\n", eq.max_scaled, eq.tol);
        return 1;
    }
    return 0;
}

int cmd_check_metric(const CommonOpts& o) {
    require_format(o, "json", "check-metric");
    specio::ParsedMetric pm = specio::parse_metric(read_spec(o.spec_path));
    Domain grid = resolve_domain(o, pm.domain, Domain::unit_box());
    MetricField metric = pm.field(grid);

    universality::CaseClassification cls = universality::classify_invariants(metric, grid);
    SweepResult sweep = sweep_metric(metric, grid, o.records == "full");
    bool pass = sweep_pass(sweep, o.tol_diff);

    json rep = meta_json("check-metric", o, grid);
    rep["spec"] = pm.echo;
    rep["classification"] = cls.label == universality::Case::case_i ? "case_i" : "case_ii";
    rep["invariant_max_gradients"] =
        json::array({cls.max_grad[0], cls.max_grad[1], cls.max_grad[2]});
    rep["residuals"] = aggregates_json(sweep, o.tol_diff);
    if (o.records == "full") rep["records"] = sweep.records;
    rep["pass"] = pass;
    write_output(o, report::dump(rep));
    if (!pass) {
        print_failures(sweep, o.tol_diff);
        return 1;
    }
    return 0;
}

int cmd_reconstruct(const CommonOpts& o) {
    require_format(o, "json", "reconstruct");
    specio::ParsedMetric pm = specio::parse_metric(read_spec(o.spec_path));
    Domain grid = resolve_domain(o, pm.domain, Domain::unit_box(9));
    MetricField metric = pm.field(grid);

    compat::ReconstructionResult rec =
        compat::reconstruct_map(metric, grid, grid.lo, Mat3d::identity());

    const double tol_fxf = 1e-6, tol_mixed = 1e-7, tol_path = 1e-8;
    bool pass = rec.fxf_defect <= tol_fxf && rec.mixed_partial_defect <= tol_mixed &&
                rec.path_independence_defect <= tol_path;

    json rep = meta_json("reconstruct", o, grid);
    rep["spec"] = pm.echo;
    rep["base"] = report::point_json(rec.base);
    json defects;
    defects["fxf"] = rec.fxf_defect;
    defects["mixed_partial"] = rec.mixed_partial_defect;
    defects["path_independence"] = rec.path_independence_defect;
    rep["defects"] = defects;
    json dt;
    dt["fxf"] = tol_fxf;
    dt["mixed_partial"] = tol_mixed;
    dt["path_independence"] = tol_path;
    rep["defect_tolerances"] = dt;
    json samples = json::array();
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                size_t id = (size_t(k) * grid.ny + j) * grid.nx + i;
                json s;
                s["point"] = report::point_json(grid.node(i, j, k));
                s["image"] = report::point_json(rec.phi[id]);
                samples.push_back(s);
            }
    rep["samples"] = samples;
    rep["pass"] = pass;
    write_output(o, report::dump(rep));
    if (!pass) {
        std::fprintf(stderr,
                     "FAIL reconstruct defects: fxf %.9g mixed %.9g path %.9g\n",
                     rec.fxf_defect, rec.mixed_partial_defect, rec.path_independence_defect);
        return 1;
    }
    return 0;
}

int cmd_export_mesh(const CommonOpts& o) {
    require_format(o, "obj", "export-mesh");
    std::string raw;
    specio::ParsedFamily pf = specio::parse_family(read_spec(o.spec_path, &raw));
    if (pf.fixture) throw InvalidParams("export-mesh: a family spec is required");
    Domain fallback = families::default_domain(pf.spec.kind, 20);
    Domain grid = resolve_domain(o, pf.domain, fallback);
    DeformationMap map = families::make_family(pf.spec, grid);

    // Deduplicated boundary shell of the structured lattice: every node with
    // an extremal index, numbered in X-fastest order.
    std::map<std::array<int, 3>, int> id;
    std::ostringstream obj;
    obj << "# inextensa export-mesh\n";
    obj << "# version " << report::kVersion << "\n";
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(report::fnv1a(raw)));
    obj << "# spec-hash " << hash << "\n";
    obj << "# seed " << o.seed << "\n";
    obj << "# grid " << grid.nx << " " << grid.ny << " " << grid.nz << "\n";
    obj << "# family " << families::kind_name(pf.spec.kind) << "\n";

    int next = 1;
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                bool boundary = i == 0 || j == 0 || k == 0 || i == grid.nx - 1 ||
                                j == grid.ny - 1 || k == grid.nz - 1;
                if (!boundary) continue;
                id[{i, j, k}] = next++;
                Point3 v = map.e0(grid.node(i, j, k));
                obj << "v " << report::g9(v.x) << " " << report::g9(v.y) << " "
                    << report::g9(v.z) << "\n";
            }

    auto quad = [&](std::array<int, 3> a, std::array<int, 3> b, std::array<int, 3> c,
                    std::array<int, 3> d) {
        obj << "f " << id.at(a) << " " << id.at(b) << " " << id.at(c) << " " << id.at(d)
            << "\n";
    };
    int nx = grid.nx, ny = grid.ny, nz = grid.nz;
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            quad({i, j, 0}, {i, j + 1, 0}, {i + 1, j + 1, 0}, {i + 1, j, 0});
            quad({i, j, nz - 1}, {i + 1, j, nz - 1}, {i + 1, j + 1, nz - 1},
                 {i, j + 1, nz - 1});
        }
    for (int k = 0; k + 1 < nz; ++k)
        for (int i = 0; i + 1 < nx; ++i) {
            quad({i, 0, k}, {i + 1, 0, k}, {i + 1, 0, k + 1}, {i, 0, k + 1});
            quad({i, ny - 1, k}, {i, ny - 1, k + 1}, {i + 1, ny - 1, k + 1},
                 {i + 1, ny - 1, k});
        }
    for (int k = 0; k + 1 < nz; ++k)
        for (int j = 0; j + 1 < ny; ++j) {
            quad({0, j, k}, {0, j, k + 1}, {0, j + 1, k + 1}, {0, j + 1, k});
            quad({nx - 1, j, k}, {nx - 1, j + 1, k}, {nx - 1, j + 1, k + 1},
                 {nx - 1, j, k + 1});
        }

    write_output(o, obj.str());
    return 0;
}

int cmd_classify(const CommonOpts& o) {
    specio::ParsedInitial pi = specio::parse_initial(read_spec(o.spec_path));
    compat::ClassifyResult res =
        compat::integrate_flat_ansatz(pi.y0, pi.z0, pi.span, pi.steps);

    json rep;
    rep["schema"] = report::kSchema;
    rep["tool"] = report::kTool;
    rep["version"] = report::kVersion;
    rep["command"] = "classify";
    rep["spec"] = pi.echo;
    auto fit_json = [](const compat::BranchFit& f) {
        json j;
        j["branch"] = f.branch;
        json c;
        for (int i = 0; i < 4; ++i) c["C" + std::to_string(i + 1)] = f.C[i];
        j["constants"] = c;
        j["max_deviation"] = f.max_deviation;
        return j;
    };
    rep["fit"] = fit_json(res.best);
    if (res.alternative) rep["alternative"] = fit_json(*res.alternative);
    rep["homogeneous"] = res.homogeneous;
    write_output(o, report::dump(rep));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"verification and reconstruction toolkit for fiber-reinforced "
                 "universal deformations"};
    app.require_subcommand(1);

    CommonOpts o;
    o.seed = env_seed();

    auto* verify = app.add_subcommand("verify-family",
                                      "verify a deformation family against the "
                                      "universality and equilibrium residuals");
    add_common(verify, o);
    auto* check = app.add_subcommand("check-metric",
                                     "classify and test a candidate strain field");
    add_common(check, o);
    auto* rec = app.add_subcommand("reconstruct",
                                   "recover the deformation map from a flat strain field");
    add_common(rec, o);
    auto* mesh = app.add_subcommand("export-mesh",
                                    "write the deformed block shell as an OBJ mesh");
    add_common(mesh, o);
    auto* classify = app.add_subcommand("classify",
                                        "integrate a strain ansatz and fit the ODE branches");
    add_common(classify, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (verify->parsed()) return cmd_verify_family(o);
        if (check->parsed()) return cmd_check_metric(o);
        if (rec->parsed()) return cmd_reconstruct(o);
        if (mesh->parsed()) return cmd_export_mesh(o);
        if (classify->parsed()) return cmd_classify(o);
    } catch (const InvalidParams& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const DomainConflict& e) {
        std::fprintf(stderr, "DomainConflict: %s\n", e.what());
        return 2;
    } catch (const InconsistentInitialData& e) {
        std::fprintf(stderr, "InconsistentInitialData: %s\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "DomainError: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        // Numerical failures: NotFlat, SingularMetric, BlowUp, ...
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 2;
}
