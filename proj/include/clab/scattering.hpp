#pragma once

#include <string>
#include <vector>

#include "clab/cgos.hpp"
#include "clab/conductivity.hpp"
#include "clab/forward_dtn.hpp"

namespace clab {

// tau(k) = (1/2pi) int_D d_z(conj M_mu - conj M_{-mu}); d_z taken spectrally
// on the whole grid, then summed over the closed unit disk.
cplx tau_from_records(const CGOSRecord& plus, const CGOSRecord& minus);
// same integral written with dbar M from the solve: d_z conj M = conj(dbar M)
cplx tau_direct(const CGOSRecord& plus, const CGOSRecord& minus);
cplx tau(const BeltramiField& mu, cplx k, const CgosOptions& opt = {});

// polar list: `angles` directions times radii r_min, 2 r_min, ... <= r_max
std::vector<cplx> polar_k_grid(int angles = 8, double r_min = 0.25, double r_max = 8.0);

struct ScatteringSamples {
    std::vector<cplx> k, tau;
    std::vector<double> residual;  // worst Beltrami residual of the two solves

    double sup_abs() const;
    std::string to_csv() const;  // k_re,k_im,tau_re,tau_im,residual
};
// one pair of CGOS solves per k; parallel over k, rows in input order
ScatteringSamples scattering_samples(const BeltramiField& mu, const std::vector<cplx>& ks,
                                     const CgosOptions& opt = {});

struct TransportCheck {
    double dk = 0;
    double residual = 0;  // ||dkbar u + i tau conj u||_2 / ||tau conj u||_2 on |z| <= 2
    cplx tau_definition, tau_transport;
};
// dkbar u from the 4-point central stencil k +- dk, k +- i dk applied to
// e^{-ikz} u. tau_transport is the least squares fit of dkbar u = -i tau conj u
// over |z| <= 2.
TransportCheck transport_residual(const ConductivityField& gamma, cplx k, double dk, const CgosOptions& opt = {});

struct TauPairRow {
    cplx k;
    double tau_diff = 0;
    double rho = 0;
};
struct TauStability {
    double rho = 0;  // dtn_distance of the FEM maps
    std::vector<TauPairRow> rows;
    // max over rows of log(tau_diff / rho) / (1 + |k|); 0 when every row is trivial
    double C = 0;
};
TauStability tau_stability_pair(const ConductivityModel& g1, const ConductivityModel& g2, const std::vector<cplx>& ks,
                                const Grid& grid, int N, int mesh_level, int sub = 1, const CgosOptions& opt = {});
double tau_stability_constant(const std::vector<TauPairRow>& rows);

}  // namespace clab
