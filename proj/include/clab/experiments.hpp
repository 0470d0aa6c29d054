#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "clab/cgos.hpp"
#include "clab/conductivity.hpp"
#include "clab/forward_dtn.hpp"
#include "clab/grid.hpp"

namespace clab {

struct Column {
    std::string name, unit;
};
using Cell = std::variant<double, std::string>;

struct ExperimentTable {
    std::string name;
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;
    nlohmann::json meta = nlohmann::json::object();

    void add(std::vector<Cell> row);  // throws ShapeMismatch on a short or long row
    std::size_t column(const std::string& name) const;
    double num(std::size_t row, const std::string& col) const;
    std::vector<double> numbers(const std::string& col) const;
    std::string to_csv() const;  // header line, then rows; doubles with 17 digits
};

// Least squares fits in log space. residual = sqrt(SS_res / SS_tot) of the
// log-space regression (0 for a perfect fit); conclusive iff residual <= 0.5.
struct FitResult {
    std::string name;
    std::string model;  // "power", "log_power", "exponential"
    std::map<std::string, double> params;
    double residual = 0;
    double x_lo = 0, x_hi = 0;
    int points = 0;
    bool conclusive = false;

    nlohmann::json to_json() const;
};
// y = A x^a
FitResult fit_power(const std::vector<double>& x, const std::vector<double>& y);
// y = A / |log x|^b, x in (0, 1); params A, b and A_envelope (A raised until every point is below)
FitResult fit_log_power(const std::vector<double>& x, const std::vector<double>& y);
// y = A e^{C x}
FitResult fit_exponential(const std::vector<double>& x, const std::vector<double>& y);

struct Assertion {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentResult {
    std::string name;
    std::vector<ExperimentTable> tables;
    std::vector<FitResult> fits;
    std::vector<Assertion> assertions;
    nlohmann::json findings = nlohmann::json::object();  // recorded, not asserted

    bool passed() const;
    void check(const std::string& name, bool ok, const std::string& detail = "");
    nlohmann::json summary() const;
};

// Count of i with v[i] > v[i-1] (1 + tol).
int count_inversions(const std::vector<double>& v, double tol = 0.0);

// ---------------------------------------------------------------- decay

// min{-log k / (4 log M - log k), 1/5} with M = ||B||_p + ||B||_2 evaluated
// with the conjectured norm ||B||_p = max(p, p') - 1.
double alpha_lower(double kappa, double p);

struct DecayOptions {
    std::vector<double> k_radii = {2, 4, 8, 16, 32};
    double k_angle = 0.0;
    double p = 2.0;
    int neumann_N = 10;  // split used by the linear solve; psi itself is the full series
};
// For every member and every grid: ||psi_k - Id||_inf (linear route) and
// ||phi_mu - Id||_inf (nonlinear route) against |k|.
ExperimentResult decay_sweep(const std::vector<ConductivityModel>& family, const std::vector<Grid>& grids,
                             const DecayOptions& opt = {});

// ---------------------------------------------------------------- stability

using ModelPair = std::pair<ConductivityModel, ConductivityModel>;
// (a, a + t (b - a)) for t = 1, 1/2, ..., 2^{1-count}, a and b Holder-s members
// with seeds seed and seed + 1 and sup |mu| <= kappa
std::vector<ModelPair> holder_mixture_pairs(double s, double kappa, int count, std::uint64_t seed);

struct StabilityOptions {
    int N = 16;
    std::vector<int> mesh_levels = {3, 4};
    double s = 2.0;                    // dist_s = ||gamma1 - gamma2||_{L^s(D)}
    double envelope_tol = 0.2;         // dist may dip below the running max by this fraction
    double caccioppoli_C = -1;         // corpus constant; < 0 skips that link of the chain
    std::size_t chain_pair = 0;        // which pair gets the chain check
};
ExperimentResult stability_sweep(const std::vector<ModelPair>& pairs, const Grid& grid,
                                 const StabilityOptions& opt = {});

// The Holder / Plancherel / frequency-split chain bounding ||mu1 - mu2||_{L^s(D)}
// by CGOS differences at k = 1. One row per displayed inequality.
struct ChainOptions {
    double fourier_C = 1.09;   // high-frequency tail constant for p = 2, t = 1/R
    double caccioppoli_C = -1;  // < 0 skips the Caccioppoli link
};
ExperimentResult interpolation_chain(const ConductivityModel& g1, const ConductivityModel& g2, const Grid& grid,
                                     const ChainOptions& opt = {});

// ---------------------------------------------------------------- instability

// Oracle DtN matrix of a piecewise constant radial conductivity, modes 1..N.
DtNMatrix radial_oracle_matrix(const std::vector<double>& radii, const std::vector<double>& values, int N);

struct InstabilityOptions {
    int N = 64;  // oracle modes
    int sub = 4;
};
// gamma_{R_n} for each R; throws BadOrdering unless R_{n+1}^2 > R_n.
ExperimentResult instability_demo(const std::vector<double>& R, const Grid& grid, const InstabilityOptions& opt = {});

// ---------------------------------------------------------------- Neumann tail

// cell-averaged kappa (z / conj z) e_k(z) on the unit disk
BeltramiField neumann_coefficient(const Grid& g, double kappa, cplx k);
ExperimentResult neumann_tail_experiment(const BeltramiField& nu, cplx k, const std::vector<int>& N_list,
                                         double s = 2.0);

// ---------------------------------------------------------------- corpus-wide

// lhs <= C rhs over the corpus at k, one C per grid; C stable between grids.
ExperimentResult caccioppoli_experiment(const std::vector<ConductivityModel>& corpus, const std::vector<Grid>& grids,
                                        cplx k = 1.0, double p = 2.0, double stability_tol = 0.25);

// max over corpus and R of ||F 1_{|xi|>R}||_{p'} / omega_p(gamma - 1)(1/R), one per p and grid
ExperimentResult fourier_tail_experiment(const std::vector<ConductivityModel>& corpus, const std::vector<Grid>& grids,
                                        const std::vector<double>& ps = {1.5, 2.0},
                                        const std::vector<double>& Rs = {4, 8, 16}, double stability_tol = 0.25);

struct ScatteringOptions {
    int angles = 8;
    double r_min = 0.25, r_max = 8.0;
    double bound = 1.05;
    std::vector<double> dk = {0.2, 0.1, 0.05};
};
ExperimentResult scattering_experiment(const std::vector<ConductivityModel>& corpus, const std::vector<Grid>& grids,
                                       const ScatteringOptions& opt = {});

// ---------------------------------------------------------------- suite

ConductivityModel corpus_member(const nlohmann::json& j);
int sampling_for(const ConductivityModel& m);  // 4 for layered data, 1 otherwise

nlohmann::json default_suite_config();
// Runs every experiment listed under config["experiments"] and writes
// out/<experiment>/<table>.csv and out/summary.json. Errors inside one
// experiment are recorded in the summary and do not stop the others.
nlohmann::json run_suite(const nlohmann::json& config, const std::string& out_dir);

std::uint64_t fnv1a(const std::string& s);

}  // namespace clab
