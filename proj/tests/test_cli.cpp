#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clab/cli.hpp"
#include "clab/field_io.hpp"

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run clab_run(std::vector<std::string> args) {
    args.insert(args.begin(), "clab");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    int code = clab::cli::run(int(argv.size()), argv.data(), o, e);
    return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("clab_cli_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("help documents every registered flag") {
    clab::cli::Settings s;
    auto app = clab::cli::make_app(s);
    std::string top = app->help();
    for (const CLI::Option* o : app->get_options()) {
        for (const auto& n : o->get_lnames()) CHECK(top.find("--" + n) != std::string::npos);
        CHECK(!o->get_description().empty());
    }
    for (const std::string& name : clab::cli::subcommands()) {
        INFO(name);
        CLI::App* sub = app->get_subcommand(name);
        CHECK(top.find(name) != std::string::npos);
        std::string h = sub->help();
        for (const CLI::Option* o : sub->get_options()) {
            for (const auto& n : o->get_lnames()) CHECK(h.find("--" + n) != std::string::npos);
            CHECK(!o->get_description().empty());
        }
    }
    CHECK(app->get_subcommands({}).size() == clab::cli::subcommands().size());

    Run r = clab_run({"dtn", "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--mesh-level") != std::string::npos);
}

TEST_CASE("dtn of gamma_0.5 against gamma = 1") {
    fs::path out = scratch("dtn");
    Run r = clab_run({"--out", out.string(), "dtn", "--family", "gamma_R", "--R", "0.5", "--N", "8"});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["difference_to_constant"]["exp_eigenvalues"][0].get<double>() == doctest::Approx(0.2222).epsilon(0.045));
    CHECK(j["matrix"]["N"] == 8);
    CHECK(json::parse(slurp(out / "dtn.json")) == j);
    CHECK(fs::exists(out / "config.resolved.json"));
    fs::remove_all(out);
}

TEST_CASE("cgos with mu = 0 writes e^{iz} and the field reloads bit identically") {
    fs::path out = scratch("cgos");
    Run r = clab_run({"--grid-n", "128", "--out", out.string(), "cgos", "--mu", "zero", "--k", "1,0"});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["residual"] == 0.0);
    clab::GridField f = clab::read_field((out / "f.ckf1").string());
    double err = 0;
    for (int a = 0; a < f.n(); ++a)
        for (int b = 0; b < f.n(); ++b) {
            clab::cplx z = f.grid().node(a, b);
            err = std::max(err, std::abs(f(a, b) - std::exp(clab::kI * z)));
        }
    CHECK(err <= 1e-12);
    CHECK(clab::encode_field(f) == slurp(out / "f.ckf1"));
    json rec = json::parse(slurp(out / "record.json"));
    CHECK(rec["k"] == json({1.0, 0.0}));
    fs::remove_all(out);
}

TEST_CASE("config precedence: flags over file over defaults") {
    fs::path out = scratch("config");
    fs::create_directories(out);
    fs::path cfg = out / "cfg.json";
    std::ofstream(cfg) << R"({"grid-n": 64, "seed": 7, "cgos": {"k": "2,0", "mu": "zero"}})";
    Run r = clab_run({"--config", cfg.string(), "--out", (out / "o").string(), "cgos", "--k", "3,0"});
    REQUIRE(r.code == 0);
    json res = json::parse(slurp(out / "o" / "config.resolved.json"));
    CHECK(res["command"] == "cgos");
    CHECK(res["options"]["grid-n"] == 64);  // file
    CHECK(res["options"]["seed"] == 7);     // file
    CHECK(res["options"]["k"] == "3,0");    // flag wins
    CHECK(res["options"]["mu"] == "zero");  // file
    CHECK(res["options"]["grid-L"] == 4);   // default
    CHECK(clab::read_field((out / "o" / "f.ckf1").string()).n() == 64);
    fs::remove_all(out);
}

TEST_CASE("suite config object is a merge patch") {
    fs::path out = scratch("suitecfg");
    fs::create_directories(out);
    fs::path cfg = out / "cfg.json";
    std::ofstream(cfg) << R"({"grid-n": 64, "suite": {"corpus": [{"family": "bump", "amplitude": 0.5, "radius": 0.7}],
                             "experiments": {"fourier_tail": {"R": [4, 8]}, "decay": null, "neumann": null,
                             "caccioppoli": null, "stability": null, "instability": null, "scattering": null}}})";
    Run r = clab_run({"--config", cfg.string(), "--out", (out / "o").string(), "suite"});
    CHECK(r.code == 0);
    json s = json::parse(slurp(out / "o" / "summary.json"));
    CHECK(s["grid"]["n"] == 64);
    CHECK(s["experiments"]["fourier_tail"]["passed"] == true);
    CHECK(s["experiments"].size() == 1);
    fs::remove_all(out);
}

TEST_CASE("errors map to exit codes with JSON on stderr") {
    fs::path out = scratch("errors");
    Run a = clab_run({"--out", out.string(), "cgos", "--k", "1,x"});
    CHECK(a.code == 2);
    CHECK(json::parse(a.err)["error"] == "InvalidArgument");
    Run b = clab_run({"--out", out.string(), "--no-such-flag", "1", "selftest"});
    CHECK(b.code == 2);
    CHECK(json::parse(b.err)["exit_code"] == 2);
    Run c = clab_run({"--config", (out / "missing.json").string(), "selftest"});
    CHECK(c.code == 4);
    CHECK(json::parse(c.err)["error"] == "IOError");

    // a coefficient with |mu| >= 1 is a numerical failure
    fs::create_directories(out);
    clab::write_field((out / "mu.ckf1").string(), clab::GridField(clab::Grid::make(64, 4.0), 1.5));
    Run d = clab_run({"--out", out.string(), "cgos", "--mu-file", (out / "mu.ckf1").string()});
    CHECK(d.code == 3);
    CHECK(json::parse(d.err)["error"] == "EllipticityViolation");
    fs::remove_all(out);
}

TEST_CASE("selftest passes") {
    fs::path out = scratch("selftest");
    Run r = clab_run({"--out", out.string(), "selftest"});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(json::parse(slurp(out / "selftest.json")).size() >= 15);
    fs::remove_all(out);
}
