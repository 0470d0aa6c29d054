#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clab/grid.hpp"

namespace clab {

struct EllipticityProfile {
    double K = 1.0;
    double kappa = 0.0;
    double p_kappa = INFINITY;  // critical exponent 1 + 1/kappa

    static EllipticityProfile from_K(double K);
    static EllipticityProfile from_kappa(double kappa);
};

// Analytic description of a conductivity; sampled onto grids on demand.
struct ConductivityModel {
    std::string name;
    nlohmann::json params;
    double r0 = 1.0;  // gamma == 1 outside r0 D
    double K = 1.0;
    std::function<double(cplx)> value;
    // piecewise constant radial data, when the model is of that kind:
    // gamma = layer_values[i] on layer_radii[i] <= |z| < layer_radii[i+1]
    std::vector<double> layer_radii, layer_values;

    bool is_radial_layers() const { return !layer_values.empty(); }
};

struct ConductivityField {
    GridField gamma;
    double support_radius = 1.0;
    EllipticityProfile profile;
};

struct BeltramiField {
    GridField mu;
    EllipticityProfile profile;
};

// Point samples; with sub > 1 every node gets the mean over a sub x sub
// grid of points in its cell (used for discontinuous data).
ConductivityField sample(const ConductivityModel& m, const Grid& g, int sub = 1);

BeltramiField gamma_to_mu(const ConductivityField& gamma);
ConductivityField mu_to_gamma(const BeltramiField& mu);
double mu_of_gamma(double gamma);
double gamma_of_mu(double mu);

ConductivityModel family_constant();
ConductivityModel family_gamma_R(double R);
ConductivityModel family_radial_layers(std::vector<double> radii, std::vector<double> values);
ConductivityModel family_bump(double amplitude, double radius);
// 1 + amplitude * cutoff(|z|/r0) * (normalized lacunary sum of f^{-s} cos(f e.z + phase)
// over J octaves f = 4 * 2^j, three directions per octave, seeded rotations and
// phases). |gamma - 1| <= amplitude.
inline constexpr double kHolderBase = 4.0;
inline constexpr int kHolderDirs = 3;
ConductivityModel family_holder(double s, std::uint64_t seed, double amplitude = 0.3,
                                double r0 = 0.9, int J = 6);
// amplitude giving sup |mu| = kappa for the Holder family
double holder_amplitude_for_kappa(double kappa);

// Build a model from {"family": name, ...params}.
ConductivityModel family_from_json(const nlohmann::json& j);

struct ModulusSpec;
// A modulus that bounds omega_p of the model on t <= 2, derived from its
// construction (jump areas, Lipschitz constants, lacunary tail sums).
ModulusSpec declared_modulus(const ConductivityModel& m, double p);

// Closed form of the annulus Steklov perturbation.
double m_x(double R, double x);

}  // namespace clab
