#include "clab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "clab/cgos.hpp"
#include "clab/conductivity.hpp"
#include "clab/errors.hpp"
#include "clab/experiments.hpp"
#include "clab/field_io.hpp"
#include "clab/forward_dtn.hpp"
#include "clab/grid.hpp"
#include "clab/modulus.hpp"
#include "clab/parallel.hpp"
#include "clab/planar.hpp"
#include "clab/scattering.hpp"

namespace clab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"dtn",   "cgos",      "scatter",     "psi",   "modulus",
                                                   "decay", "stability", "instability", "suite", "selftest"};
    return names;
}

namespace {

void add_model_flags(CLI::App* a, Settings& s) {
    a->add_option("--family", s.family, "conductivity family: constant, gamma_R, bump, radial_layers, holder")
        ->capture_default_str();
    a->add_option("--params", s.params, "extra family parameters as a JSON object")->capture_default_str();
    a->add_option("--R", s.R, "gamma_R: annulus R^2 < |z| < R carries the value 3")->capture_default_str();
    a->add_option("--amplitude", s.amplitude, "bump / holder amplitude")->capture_default_str();
    a->add_option("--radius", s.radius, "bump support radius")->capture_default_str();
    a->add_option("--s", s.s, "holder exponent")->capture_default_str();
    a->add_option("--kappa", s.kappa, "holder: amplitude chosen so sup |mu| = kappa (ignored when negative)")
        ->capture_default_str();
    a->add_option("--sub", s.sub, "subsamples per cell axis when sampling (0: 4 for layered data, else 1)")
        ->capture_default_str();
}

void add_k_flag(CLI::App* a, Settings& s) {
    a->add_option("--k", s.k, "spectral parameter as re,im")->capture_default_str();
}

void add_mu_flags(CLI::App* a, Settings& s) {
    a->add_option("--mu", s.mu, "coefficient source: zero or family")
        ->check(CLI::IsMember({"zero", "family"}))
        ->capture_default_str();
    a->add_option("--mu-file", s.mu_file, "read the Beltrami coefficient from a CKF1 field instead");
}

}  // namespace

std::unique_ptr<CLI::App> make_app(Settings& s) {
    auto app = std::make_unique<CLI::App>("clab: conductivity, CGOS and scattering experiments", "clab");
    app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app->require_subcommand(1);
    app->add_option("--grid-n", s.grid_n, "grid points per axis")->capture_default_str();
    app->add_option("--grid-L", s.grid_L, "grid half width, the square is [-L, L]^2")->capture_default_str();
    app->add_option("--out", s.out, "output directory")->capture_default_str();
    app->add_option("--config", s.config, "JSON config file; command line flags take precedence");
    app->add_option("--threads", s.threads, "worker threads (0: hardware threads)")->capture_default_str();
    app->add_option("--seed", s.seed, "seed for random families and pair construction")->capture_default_str();

    auto* dtn = app->add_subcommand("dtn", "FEM Dirichlet-to-Neumann matrix of a conductivity, and its difference to gamma = 1");
    add_model_flags(dtn, s);
    dtn->add_option("--N", s.N, "highest trigonometric degree")->capture_default_str();
    dtn->add_option("--mesh-level", s.mesh_level, "disk mesh refinement level")->capture_default_str();

    auto* cg = app->add_subcommand("cgos", "complex geometric optics solution f = e^{ikz} M");
    add_model_flags(cg, s);
    add_mu_flags(cg, s);
    add_k_flag(cg, s);

    auto* sc = app->add_subcommand("scatter", "scattering transform on a polar k grid");
    add_model_flags(sc, s);
    add_mu_flags(sc, s);
    sc->add_option("--angles", s.angles, "directions in the polar k grid")->capture_default_str();
    sc->add_option("--r-min", s.r_min, "smallest |k|")->capture_default_str();
    sc->add_option("--r-max", s.r_max, "largest |k| (radii double from r-min)")->capture_default_str();

    auto* ps = app->add_subcommand("psi", "linear psi_k solve with Neumann split diagnostics");
    add_model_flags(ps, s);
    add_mu_flags(ps, s);
    add_k_flag(ps, s);
    ps->add_option("--neumann-N", s.neumann_N, "split index between partial sum and tail")->capture_default_str();

    auto* mo = app->add_subcommand("modulus", "integral modulus of continuity of gamma - 1 (or of a field file)");
    add_model_flags(mo, s);
    mo->add_option("--field", s.field, "CKF1 field to analyse instead of a family");
    mo->add_option("--p", s.p, "Lebesgue exponent (inf allowed)")->capture_default_str();
    mo->add_option("--t-max", s.t_max, "largest shift on the dyadic ladder")->capture_default_str();

    app->add_subcommand("decay", "decay sweep of psi_k - Id and phi - Id in |k|");
    app->add_subcommand("stability", "Holder pair stability sweep and interpolation chain");
    app->add_subcommand("instability", "gamma_R family demo for R = 0.5, 0.8, 0.95");
    app->add_subcommand("suite", "every experiment of the default suite");
    app->add_subcommand("selftest", "fast oracle checks with exact or near exact answers");
    for (auto* sub : app->get_subcommands({})) sub->fallthrough();
    return app;
}

namespace {

struct Context {
    Settings& s;
    CLI::App& sub;
    json file;  // parsed --config, or {}
    std::ostream& out;
};

json option_json(const CLI::Option* o) {
    std::string v = o->count() ? o->results().back() : o->get_default_str();
    json parsed = json::parse(v, nullptr, false);
    return parsed.is_discarded() || parsed.is_object() || parsed.is_array() ? json(v) : parsed;
}

json resolved_config(const CLI::App& app, const CLI::App& sub) {
    json opts = json::object();
    for (const CLI::App* a : {&app, &sub})
        for (const CLI::Option* o : a->get_options()) {
            if (o->get_lnames().empty() || o->get_lnames()[0] == "help") continue;
            opts[o->get_lnames()[0]] = option_json(o);
        }
    return {{"command", sub.get_name()}, {"options", opts}};
}

void write_text(const fs::path& p, const std::string& text) {
    if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IOError("cannot write " + p.string());
    f << text;
    if (!f) throw IOError("write failed for " + p.string());
}

std::string scalar_arg(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string o;
        for (const auto& e : v) o += (o.empty() ? "" : ",") + scalar_arg(e);
        return o;
    }
    return v.dump();
}

cplx parse_k(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(part, &used));
            if (part.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw InvalidArgument("--k expects re,im, got " + text);
        }
    }
    if (v.empty() || v.size() > 2) throw InvalidArgument("--k expects re,im, got " + text);
    return {v[0], v.size() == 2 ? v[1] : 0.0};
}

Grid grid_of(const Settings& s) { return Grid::make(s.grid_n, s.grid_L); }

ConductivityModel model_of(const Context& c) {
    const Settings& s = c.s;
    json p = json::parse(s.params, nullptr, false);
    if (p.is_discarded() || !p.is_object()) throw InvalidArgument("--params must be a JSON object");
    auto given = [&](const char* flag) { return c.sub.count(flag) > 0; };
    if (given("--family") || !p.contains("family")) p["family"] = s.family;
    auto put = [&](const char* key, const char* flag, double v) {
        if (given(flag) || !p.contains(key)) p[key] = v;
    };
    put("R", "--R", s.R);
    put("amplitude", "--amplitude", s.amplitude);
    put("radius", "--radius", s.radius);
    put("s", "--s", s.s);
    if (s.kappa >= 0) p["kappa"] = s.kappa;
    if (!p.contains("seed")) p["seed"] = s.seed;
    return family_from_json(p);
}

int sub_of(const Settings& s, const ConductivityModel& m) { return s.sub > 0 ? s.sub : sampling_for(m); }

BeltramiField mu_of(const Context& c, const Grid& g) {
    if (!c.s.mu_file.empty()) {
        GridField f = read_field(c.s.mu_file);
        double kappa = lp_norm(f, INFINITY);
        if (!(kappa < 1)) throw EllipticityViolation("coefficient in " + c.s.mu_file + " has sup |mu| >= 1");
        return {f, EllipticityProfile::from_kappa(kappa)};
    }
    if (c.s.mu == "zero") return {GridField(g), EllipticityProfile::from_kappa(0)};
    ConductivityModel m = model_of(c);
    return gamma_to_mu(sample(m, g, sub_of(c.s, m)));
}

std::vector<double> interfaces(const ConductivityModel& m) {
    std::vector<double> r;
    for (double x : m.layer_radii)
        if (x > 0 && x < 1) r.push_back(x);
    return r;
}

int cmd_dtn(Context& c) {
    ConductivityModel m = model_of(c);
    DiskMesh mesh = DiskMesh::build(c.s.mesh_level, interfaces(m));
    DtNMatrix A = dtn_matrix(m, c.s.N, mesh), A0 = dtn_matrix(family_constant(), c.s.N, mesh);
    DtNMatrix D = A - A0;
    json eig = json::array();
    for (int j = 1; j <= c.s.N; ++j) eig.push_back(D.exp_eigenvalue(j));
    json j = {{"family", m.name},
              {"params", m.params},
              {"mesh_level", c.s.mesh_level},
              {"matrix", A.to_json()},
              {"difference_to_constant", {{"exp_eigenvalues", eig}, {"matrix", D.to_json()}}}};
    write_text(fs::path(c.s.out) / "dtn.json", j.dump(2) + "\n");
    c.out << j.dump(2) << "\n";
    return 0;
}

int cmd_cgos(Context& c) {
    Grid g = grid_of(c.s);
    BeltramiField mu = mu_of(c, g);
    cplx k = parse_k(c.s.k);
    CGOSRecord r = solve_cgos(mu, k);
    fs::path o(c.s.out);
    fs::create_directories(o);
    write_field((o / "f.ckf1").string(), r.f);
    write_field((o / "M.ckf1").string(), r.M);
    json j = {{"k", {k.real(), k.imag()}}, {"residual", r.residual}, {"iterations", r.iterations},
              {"converged", r.converged},   {"method", r.method},     {"fields", {"f.ckf1", "M.ckf1"}}};
    write_text(o / "record.json", j.dump(2) + "\n");
    c.out << j.dump(2) << "\n";
    return 0;
}

int cmd_scatter(Context& c) {
    Grid g = grid_of(c.s);
    ScatteringSamples S = scattering_samples(mu_of(c, g), polar_k_grid(c.s.angles, c.s.r_min, c.s.r_max));
    write_text(fs::path(c.s.out) / "tau.csv", S.to_csv());
    double worst = 0;
    for (double r : S.residual) worst = std::max(worst, r);
    json j = {{"samples", S.k.size()}, {"sup_abs_tau", S.sup_abs()}, {"worst_residual", worst}, {"file", "tau.csv"}};
    c.out << j.dump(2) << "\n";
    return 0;
}

int cmd_psi(Context& c) {
    Grid g = grid_of(c.s);
    PsiSolution p = solve_linear_psi(mu_of(c, g), parse_k(c.s.k), c.s.neumann_N);
    fs::path o(c.s.out);
    fs::create_directories(o);
    write_field((o / "psi.ckf1").string(), p.psi);
    const auto& d = p.diag;
    json j = {{"N", d.N},
              {"kappa", d.kappa},
              {"term_norms", d.term_norms},
              {"partial_norm", d.partial_norm},
              {"partial_bound", d.partial_bound},
              {"tail_norm", d.tail_norm},
              {"tail_bound", d.tail_bound},
              {"field", "psi.ckf1"}};
    write_text(o / "psi.json", j.dump(2) + "\n");
    c.out << j.dump(2) << "\n";
    return 0;
}

int cmd_modulus(Context& c) {
    GridField f;
    if (!c.s.field.empty()) {
        f = read_field(c.s.field);
    } else {
        ConductivityModel m = model_of(c);
        f = sample(m, grid_of(c.s), sub_of(c.s, m)).gamma;
        for (auto& v : f.values()) v -= 1.0;
    }
    ModulusCurve curve = modulus_curve(f, c.s.p, c.s.t_max);
    write_text(fs::path(c.s.out) / "modulus.csv", curve.to_csv());
    c.out << json({{"p", c.s.p}, {"samples", curve.samples.size()}, {"file", "modulus.csv"}}).dump(2) << "\n";
    return 0;
}

int cmd_suite(Context& c, const std::string& only) {
    json cfg = default_suite_config();
    if (c.file.contains("suite")) cfg.merge_patch(c.file["suite"]);
    cfg["grid"] = {{"n", c.s.grid_n}, {"L", c.s.grid_L}};
    cfg["seed"] = c.s.seed;
    if (!only.empty()) {
        json e = cfg["experiments"];
        cfg["experiments"] = json::object();
        if (e.contains(only)) cfg["experiments"][only] = e[only];
    }
    json summary = run_suite(cfg, c.s.out);
    json brief = json::object();
    std::vector<std::string> broken;
    for (auto& [name, e] : summary["experiments"].items()) {
        brief[name] = e["passed"];
        if (!e["passed"].get<bool>()) broken.push_back(name);
    }
    c.out << json({{"passed", summary["passed"]}, {"experiments", brief}, {"summary", "summary.json"}}).dump(2)
          << "\n";
    if (!broken.empty()) {
        std::string list;
        for (auto& b : broken) list += (list.empty() ? "" : ", ") + b;
        throw SolverFailure("experiments with failed checks: " + list + " (details in summary.json)");
    }
    return 0;
}

// ---------------------------------------------------------------- selftest

double sup_diff(const GridField& a, const GridField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

int cmd_selftest(Context& c) {
    Grid g = grid_of(c.s);
    const GridField zero(g);
    const BeltramiField mu0{zero, EllipticityProfile::from_kappa(0)};
    const GridField bump = GridField::from(g, [](cplx z) { return std::exp(-4.0 * std::norm(z)); });
    const GridField ident = GridField::from(g, [](cplx z) { return z; });
    const cplx k{1.0, 0.5};
    const GridField eikz = GridField::from(g, [&](cplx z) { return std::exp(kI * k * z); });

    using Check = std::pair<std::string, std::function<bool()>>;
    std::vector<Check> checks = {
        {"fft of zero is zero",
         [&] {
             for (cplx v : fft(zero).values)
                 if (v != 0.0) return false;
             return true;
         }},
        {"dbar of a constant vanishes", [&] { return lp_norm(dbar(GridField(g, 2.5)), INFINITY) <= 1e-12; }},
        {"Beurling of zero is zero", [&] { return lp_norm(beurling(zero), INFINITY) == 0; }},
        {"modulation round trip", [&] { return sup_diff(modulate(modulate(bump, k), -k), bump) <= 1e-14; }},
        {"L2 norm of 1 is 2L", [&] { return std::abs(lp_norm(GridField(g, 1.0), 2) - 2 * g.L) <= 1e-12; }},
        {"modulus of zero is zero",
         [&] {
             for (const auto& smp : modulus_curve(zero, 2).samples)
                 if (smp.value != 0) return false;
             return true;
         }},
        {"modulus is monotone in t",
         [&] {
             double prev = 0;
             for (const auto& smp : modulus_curve(bump, 2).samples) {
                 if (smp.value < prev) return false;
                 prev = smp.value;
             }
             return true;
         }},
        {"gamma = 1 gives mu = 0",
         [&] { return lp_norm(gamma_to_mu(sample(family_constant(), g)).mu, INFINITY) == 0; }},
        {"gamma = 3 gives mu = -1/2",
         [&] {
             BeltramiField m = gamma_to_mu({GridField(g, 3.0), 1.0, EllipticityProfile::from_K(3)});
             return sup_diff(m.mu, GridField(g, -0.5)) <= 1e-15;
         }},
        {"m_x(0.5, 1) = 0.2222", [&] { return std::abs(m_x(0.5, 1) - 2.0 / 9.0) <= 1e-12; }},
        {"DtN of gamma = 1 has eigenvalues j",
         [&] {
             DtNMatrix A = dtn_matrix(family_constant(), 4, 2);
             for (int j = 1; j <= 4; ++j)
                 if (std::abs(A.exp_eigenvalue(j) - j) > 2e-2 * j) return false;
             return dtn_distance(A, A) == 0;
         }},
        {"principal solution of mu = 0 is z", [&] { return sup_diff(solve_principal(mu0).f, ident) == 0; }},
        {"psi for nu = 0 is z", [&] { return sup_diff(solve_linear_psi(mu0, k, 4).psi, ident) == 0; }},
        {"CGOS for mu = 0 is e^{ikz} with residual 0",
         [&] {
             CGOSRecord r = solve_cgos(mu0, k);
             return r.residual == 0 && sup_diff(r.f, eikz) <= 1e-10;
         }},
        {"phi for mu = 0 is z", [&] { return sup_diff(phi_from_cgos(solve_cgos(mu0, k)).phi, ident) <= 1e-10; }},
        {"u for gamma = 1 is e^{ikz}",
         [&] { return sup_diff(u_gamma(sample(family_constant(), g), k).u, eikz) <= 1e-10; }},
        {"tau of mu = 0 vanishes", [&] { return tau(mu0, k) == 0.0; }},
        {"Caccioppoli lhs vanishes for mu = 0",
         [&] {
             CaccioppoliCurves cc = caccioppoli_modulus_check(mu0, 1.0, 2.0, 4.0);
             for (double v : cc.lhs)
                 if (v > 1e-12) return false;
             return true;
         }},
        {"field encoding round trip is bit identical",
         [&] {
             GridField back = decode_field(encode_field(bump));
             return back.grid() == g && std::memcmp(back.data(), bump.data(), g.size() * sizeof(cplx)) == 0;
         }},
    };

    json report = json::array();
    int failed = 0;
    for (const auto& [name, fn] : checks) {
        bool ok = false;
        std::string why;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            why = e.what();
        }
        failed += !ok;
        c.out << (ok ? "PASS " : "FAIL ") << name << (why.empty() ? "" : " (" + why + ")") << "\n";
        report.push_back({{"name", name}, {"passed", ok}});
    }
    write_text(fs::path(c.s.out) / "selftest.json", report.dump(2) + "\n");
    if (failed) throw SolverFailure(std::to_string(failed) + " selftest checks failed");
    return 0;
}

void error_json(std::ostream& err, const std::string& code, const std::string& msg, int exit_code) {
    err << json({{"error", code}, {"message", msg}, {"exit_code", exit_code}}).dump() << "\n";
}

// argv with the config file's values spliced in ahead of the user's flags
std::vector<std::string> with_config(const std::vector<std::string>& args, json& file) {
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream f(path);
    if (!f) throw IOError("cannot read config " + path);
    file = json::parse(f, nullptr, false);
    if (file.is_discarded() || !file.is_object()) throw InvalidArgument("config " + path + " is not a JSON object");

    const auto& subs = subcommands();
    std::size_t at = args.size();
    for (std::size_t i = 1; i < args.size(); ++i)
        if (std::find(subs.begin(), subs.end(), args[i]) != subs.end()) {
            at = i;
            break;
        }
    std::vector<std::string> out = {args[0]};
    for (auto& [key, v] : file.items())
        if (!v.is_object() && key != "config") out.insert(out.end(), {"--" + key, scalar_arg(v)});
    for (std::size_t i = 1; i < args.size() && i <= at; ++i) out.push_back(args[i]);
    // experiment commands take no flags of their own; their "suite" object is a merge patch
    static const std::vector<std::string> flagless = {"decay", "stability", "instability", "suite", "selftest"};
    bool takes_flags = at < args.size() && std::find(flagless.begin(), flagless.end(), args[at]) == flagless.end();
    if (takes_flags && file.contains(args[at]) && file[args[at]].is_object())
        for (auto& [key, v] : file[args[at]].items()) out.insert(out.end(), {"--" + key, scalar_arg(v)});
    for (std::size_t i = at + 1; i < args.size(); ++i) out.push_back(args[i]);
    return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Settings s;
    auto app = make_app(s);
    json file = json::object();
    try {
        std::vector<std::string> args(argv, argv + argc);
        args = with_config(args, file);
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);  // CLI11 takes reversed args
        try {
            app->parse(rev);
        } catch (const CLI::CallForHelp&) {
            out << (app->get_subcommands().empty() ? app->help() : app->get_subcommands()[0]->help());
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app->help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            error_json(err, "Usage", e.what(), 2);
            return 2;
        }
        set_threads(s.threads);
        CLI::App& sub = *app->get_subcommands().at(0);
        Context c{s, sub, file, out};
        fs::create_directories(s.out);
        write_text(fs::path(s.out) / "config.resolved.json", resolved_config(*app, sub).dump(2) + "\n");
        const std::string name = sub.get_name();
        if (name == "dtn") return cmd_dtn(c);
        if (name == "cgos") return cmd_cgos(c);
        if (name == "scatter") return cmd_scatter(c);
        if (name == "psi") return cmd_psi(c);
        if (name == "modulus") return cmd_modulus(c);
        if (name == "selftest") return cmd_selftest(c);
        if (name == "suite") return cmd_suite(c, "");
        return cmd_suite(c, name);
    } catch (const Error& e) {
        int code = int(e.kind());
        error_json(err, e.code(), e.what(), code);
        return code;
    } catch (const fs::filesystem_error& e) {
        error_json(err, "IOError", e.what(), 4);
        return 4;
    } catch (const std::exception& e) {
        error_json(err, "NumericalFailure", e.what(), 3);
        return 3;
    }
}

}  // namespace clab::cli
