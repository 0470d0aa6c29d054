#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clab/grid.hpp"

namespace clab {

struct ModulusSample {
    double t;
    double value;
};

struct ModulusCurve {
    double p = 2.0;
    std::vector<ModulusSample> samples;

    std::string to_csv() const;  // columns t,value
};

// A reference modulus omega(t).
struct ModulusSpec {
    enum class Kind { Power, LogPower, Tabulated };
    Kind kind = Kind::Power;
    double c = 1.0;
    double s = 1.0;      // Power: c t^s
    double alpha = 1.0;  // LogPower: c / log(e + 1/t)^alpha
    std::vector<std::pair<double, double>> table;  // Tabulated, sorted by t

    static ModulusSpec power(double c, double s);
    static ModulusSpec log_power(double c, double alpha);
    static ModulusSpec tabulated(std::vector<std::pair<double, double>> table);

    double operator()(double t) const;
    nlohmann::json to_json() const;
    static ModulusSpec from_json(const nlohmann::json& j);
};

// t = 2h * 2^j up to t_max.
std::vector<double> dyadic_ladder(const Grid& g, double t_max = 2.0);

// sup over lattice shifts |y| <= t of ||f - f(. - y)||_p (periodic shifts).
// p = 2 uses every lattice shift via the autocorrelation; other exponents
// use all shifts with |y| <= 6h plus 48 rays on a geometric radius ladder.
// Throws TooFine when t < h.
double omega_p(const GridField& f, double p, double t);
ModulusCurve modulus_curve(const GridField& f, double p, double t_max = 2.0);

// sup over the ladder of omega_p f(t) / omega(t).
double besov_seminorm(const GridField& f, double p, const ModulusSpec& omega);

struct MembershipReport {
    bool member = true;
    bool ellipticity_ok = true;
    bool support_ok = true;
    bool modulus_ok = true;
    std::optional<double> first_violation_t;
    double observed = 0.0;  // omega_p at the first violation
    double bound = 0.0;
    std::string detail;
};

// gamma in G(K, r0 D, p, omega): K^-1 <= gamma <= K, gamma = 1 off r0 D,
// omega_p gamma <= omega on the ladder.
MembershipReport check_membership_gamma(const GridField& gamma, double K, double r0, double p,
                                        const ModulusSpec& omega);
// mu in M(kappa, p, omega): real, |mu| <= kappa, supported in the closed disk.
MembershipReport check_membership_mu(const GridField& mu, double kappa, double p,
                                     const ModulusSpec& omega);

// (|| F 1_{|xi|>R} ||_{p'}, omega_p f(1/R)) with F = fft(f).
std::pair<double, double> fourier_tail_check(const GridField& f, double p, double R);

// (sup form, averaged form) where the averaged form is
// ( mean over lattice shifts |y| <= t of ||f - f(.-y)||_p^p )^{1/p}.
std::pair<double, double> averaged_modulus_equiv(const GridField& f, double p, double t);

// least squares slope of log value against log t over samples in [t_lo, t_hi]
double fit_log_slope(const ModulusCurve& c, double t_lo, double t_hi);

}  // namespace clab
