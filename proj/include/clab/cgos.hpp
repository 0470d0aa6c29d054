#pragma once

#include <string>
#include <vector>

#include "clab/conductivity.hpp"
#include "clab/grid.hpp"

namespace clab {

// Principal solution of dbar f = mu d f, f(z) - z -> 0 at infinity.
struct PrincipalSolution {
    GridField f, dbar_f, d_f;
    double residual = 0;  // ||dbar f - mu d f||_2 / ||d f||_2 on the unit disk
    int iterations = 0;
    std::vector<double> increments;  // ||h_{n+1} - h_n||_2 per Neumann step
};
PrincipalSolution solve_principal(const BeltramiField& mu, double tol = 1e-10, int max_iter = 500);

// psi_k = z + C(dbar psi_k) with dbar psi = a (1 + B dbar psi), a = -(conj k / k) e_{-k} nu.
// The Neumann terms are G_0 = a, G_n = a B G_{n-1}; g sums n <= N, h the rest.
struct NeumannDiagnostics {
    int N = 0;
    double kappa = 0;                 // sup |nu|
    std::vector<double> term_norms;   // ||G_n||_2, n = 0, 1, ... until convergence
    double partial_norm = 0, partial_bound = 0;  // ||g||_2 and kappa sqrt(pi) / (1 - kappa)
    double tail_norm = 0, tail_bound = 0;        // ||h||_2 and kappa sqrt(pi) kappa^{N+1} / (1 - kappa)
    GridField g, h;
};
struct PsiSolution {
    GridField psi, dbar_psi;
    NeumannDiagnostics diag;
};
PsiSolution solve_linear_psi(const BeltramiField& nu, cplx k, int N, double tol = 1e-12, int max_terms = 500);

enum class CgosMethod { Auto, Krylov, FixedPoint };

struct CgosOptions {
    double tol = 1e-9;  // relative residual of the reduced equation
    int max_iter = 600;
    int restart = 80;
    CgosMethod method = CgosMethod::Auto;
    bool throw_on_failure = true;
    std::string mu_id;
};

// f = e^{ikz} M solving dbar f = mu conj(d f), M - 1 = C h, h = dbar M.
struct CGOSRecord {
    cplx k;
    std::string mu_id;
    GridField M, f;
    GridField h, dM;  // dbar M and d M
    double residual = 0;  // ||dbar f - mu conj(d f)||_2 / ||d f||_2 on the unit disk
    int iterations = 0;
    bool converged = false;
    std::string method;
};
CGOSRecord solve_cgos(const BeltramiField& mu, cplx k, const CgosOptions& opt = {});

struct PhiResult {
    GridField phi;
    double exp_defect = 0;      // max |e^{ik(phi - z)} - M| / |M|
    double decay_constant = 0;  // max |z| |phi - z| on 2 <= |z| <= max(L/2, 2 + 2h)
};
PhiResult phi_from_cgos(const CGOSRecord& rec);

// u = Re f_mu + i Im f_{-mu} with its Wirtinger derivatives.
struct UGamma {
    GridField u, du, dbar_u;
    CGOSRecord plus, minus;
};
UGamma u_gamma(const ConductivityField& gamma, cplx k, const CgosOptions& opt = {});
// max over smooth test bumps of |int gamma grad u . grad phi| / int gamma |grad u| |grad phi|
double conductivity_weak_defect(const ConductivityField& gamma, const UGamma& u,
                                const std::vector<cplx>& centers = {0.0, 0.4, {0, -0.5}, {-0.6, 0.3}},
                                double radius = 0.45);

// lambda = conj(f+ - f-) / (f+ - f-), 1 where |f+ - f-| <= 1e-12 max(|f+|, |f-|)
GridField lambda_mu(const CGOSRecord& plus, const CGOSRecord& minus);
// f_{lambda mu} from f_{+-mu}: ((f+ - f-)/(f+ + f-) + 1/lambda) lambda (f+ + f-)/2
GridField rotation_formula(const CGOSRecord& plus, const CGOSRecord& minus, cplx lambda);
// relative L^2(D) distance between a direct solve at lambda mu and the formula
double rotation_identity_defect(const BeltramiField& mu, cplx k, cplx lambda, const CGOSRecord& plus,
                                const CGOSRecord& minus, const CgosOptions& opt = {});

// 1 on |z| <= r_in, cosine taper down to 0 at r_out (gradient Lipschitz too)
struct RadialCutoff {
    double r_in = 1.2, r_out = 2.0;
    double value(cplx z) const;
    cplx grad(cplx z) const;  // phi_x + i phi_y
};

struct CaccioppoliCurves {
    double p = 2, r = 4, q = 4;
    std::vector<double> t, lhs, rhs;
    std::vector<double> mu_term, f_term;  // ||f grad phi||_r omega_q mu and omega_p(f grad phi)
    double f_grad_norm = 0;
};
// lhs = omega_p(phi dbar f), rhs = ||f grad phi||_r omega_q mu + omega_p(f grad phi)
// for the CGOS f at k, 1/q = 1/p - 1/r.
CaccioppoliCurves caccioppoli_modulus_check(const BeltramiField& mu, cplx k, double p, double r,
                                            const RadialCutoff& cutoff = {}, const CgosOptions& opt = {});
// smallest C with lhs <= C rhs wherever rhs > 0
double caccioppoli_constant(const CaccioppoliCurves& c);

}  // namespace clab
