#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace clab::cli {

// Every flag value lands here; one struct shared by all subcommands.
struct Settings {
    // global
    int grid_n = 256;
    double grid_L = 4.0;
    std::string out = "out";
    std::string config;
    int threads = 0;
    std::uint64_t seed = 1;

    // conductivity selection
    std::string family = "gamma_R";
    std::string params = "{}";
    double R = 0.5, amplitude = 0.8, radius = 0.8, s = 0.5, kappa = -1;
    int sub = 0;  // 0: 4 for layered data, 1 otherwise

    // dtn
    int N = 8;
    int mesh_level = 4;

    // cgos / scatter / psi
    std::string mu = "family";
    std::string mu_file;
    std::string k = "1,0";
    int angles = 8;
    double r_min = 0.25, r_max = 8.0;
    int neumann_N = 10;

    // modulus
    std::string field;
    double p = 2.0;
    double t_max = 2.0;
};

const std::vector<std::string>& subcommands();

// The full parser; options write into `s`. Exposed so tests can walk the flag registry.
std::unique_ptr<CLI::App> make_app(Settings& s);

// Merges --config FILE into the argument list (flags > file > defaults),
// runs the chosen subcommand and maps errors to exit codes 2 / 3 / 4 with a
// JSON error object on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clab::cli
