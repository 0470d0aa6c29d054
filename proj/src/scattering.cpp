#include "clab/scattering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "clab/errors.hpp"
#include "clab/parallel.hpp"

namespace clab {
namespace {

BeltramiField negated(BeltramiField mu) {
    mu.mu *= -1.0;
    return mu;
}

cplx disk_sum(const GridField& f, double radius = 1.0) {
    const Grid& g = f.grid();
    cplx s = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (std::abs(g.node(i, j)) <= radius) s += f(i, j);
    return s * g.h() * g.h();
}

}  // namespace

cplx tau_from_records(const CGOSRecord& plus, const CGOSRecord& minus) {
    if (plus.M.grid() != minus.M.grid()) throw ShapeMismatch("tau: records on different grids");
    if (plus.k != minus.k) throw InvalidArgument("tau: records at different k");
    return disk_sum(d(plus.M.conj() - minus.M.conj())) / (2 * kPi);
}

cplx tau_direct(const CGOSRecord& plus, const CGOSRecord& minus) {
    if (plus.M.grid() != minus.M.grid()) throw ShapeMismatch("tau: records on different grids");
    return disk_sum((plus.h - minus.h).conj()) / (2 * kPi);
}

cplx tau(const BeltramiField& mu, cplx k, const CgosOptions& opt) {
    return tau_from_records(solve_cgos(mu, k, opt), solve_cgos(negated(mu), k, opt));
}

std::vector<cplx> polar_k_grid(int angles, double r_min, double r_max) {
    if (angles < 1 || !(r_min > 0) || r_max < r_min) throw InvalidArgument("polar_k_grid: bad parameters");
    std::vector<cplx> out;
    for (double r = r_min; r <= r_max * (1 + 1e-12); r *= 2)
        for (int a = 0; a < angles; ++a) out.push_back(std::polar(r, 2 * kPi * a / angles));
    return out;
}

double ScatteringSamples::sup_abs() const {
    double m = 0;
    for (cplx t : tau) m = std::max(m, std::abs(t));
    return m;
}

std::string ScatteringSamples::to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17) << "k_re,k_im,tau_re,tau_im,residual\n";
    for (std::size_t i = 0; i < k.size(); ++i)
        os << k[i].real() << ',' << k[i].imag() << ',' << tau[i].real() << ',' << tau[i].imag() << ','
           << residual[i] << '\n';
    return os.str();
}

ScatteringSamples scattering_samples(const BeltramiField& mu, const std::vector<cplx>& ks, const CgosOptions& opt) {
    ScatteringSamples s;
    s.k = ks;
    s.tau.assign(ks.size(), 0.0);
    s.residual.assign(ks.size(), 0.0);
    BeltramiField neg = negated(mu);
    parallel_for(ks.size(), [&](std::size_t i) {
        CGOSRecord p = solve_cgos(mu, ks[i], opt), m = solve_cgos(neg, ks[i], opt);
        s.tau[i] = tau_from_records(p, m);
        s.residual[i] = std::max(p.residual, m.residual);
    });
    return s;
}

TransportCheck transport_residual(const ConductivityField& gamma, cplx k, double dk, const CgosOptions& opt) {
    if (!(dk > 0)) throw InvalidArgument("transport_residual: dk must be positive");
    const Grid& g = gamma.gamma.grid();
    if (dk > 1) throw InvalidArgument("transport_residual: dk must be at most 1");
    UGamma u0 = u_gamma(gamma, k, opt);
    std::array<cplx, 4> ks = {k + dk, k - dk, k + kI * dk, k - kI * dk};
    std::array<GridField, 4> us;
    parallel_for(4, [&](std::size_t a) { us[a] = u_gamma(gamma, ks[a], opt).u; });

    TransportCheck out;
    out.dk = dk;
    out.tau_definition = tau_from_records(u0.plus, u0.minus);
    double num = 0, den = 0, uu = 0;
    cplx fit = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (std::abs(g.node(i, j)) > 2.0) continue;
            std::size_t t = std::size_t(i) * g.n + j;
            // difference e^{-ikz} u, which is smooth in k; dkbar e^{ikz} = 0
            cplx z = g.node(i, j);
            std::array<cplx, 4> w;
            for (int a = 0; a < 4; ++a) w[a] = std::exp(-kI * ks[a] * z) * us[a][t];
            cplx dkbar = std::exp(kI * k * z) * 0.5 * ((w[0] - w[1]) + kI * (w[2] - w[3])) / (2 * dk);
            cplx u = u0.u[t], rhs = -kI * out.tau_definition * std::conj(u);
            num += std::norm(dkbar - rhs);
            den += std::norm(rhs);
            fit += kI * dkbar * u;
            uu += std::norm(u);
        }
    out.residual = den > 0 ? std::sqrt(num / den) : std::sqrt(num);  // gamma = 1: both sides vanish
    out.tau_transport = fit / uu;
    return out;
}

double tau_stability_constant(const std::vector<TauPairRow>& rows) {
    double C = -HUGE_VAL;
    for (const auto& r : rows)
        if (r.tau_diff > 0 && r.rho > 0) C = std::max(C, std::log(r.tau_diff / r.rho) / (1 + std::abs(r.k)));
    return std::isfinite(C) ? C : 0.0;
}

TauStability tau_stability_pair(const ConductivityModel& g1, const ConductivityModel& g2, const std::vector<cplx>& ks,
                                const Grid& grid, int N, int mesh_level, int sub, const CgosOptions& opt) {
    TauStability out;
    std::vector<double> radii;
    for (const auto* m : {&g1, &g2})
        for (double r : m->layer_radii) radii.push_back(r);
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    std::vector<double> iface;
    for (double r : radii)
        if (r > 0 && r < 1) iface.push_back(r);
    DiskMesh mesh = DiskMesh::build(mesh_level, iface);
    out.rho = dtn_distance(dtn_matrix(g1, N, mesh), dtn_matrix(g2, N, mesh));

    BeltramiField mu1 = gamma_to_mu(sample(g1, grid, sub)), mu2 = gamma_to_mu(sample(g2, grid, sub));
    out.rows.resize(ks.size());
    parallel_for(ks.size(), [&](std::size_t i) {
        cplx t1 = tau(mu1, ks[i], opt), t2 = tau(mu2, ks[i], opt);
        out.rows[i] = {ks[i], std::abs(t1 - t2), out.rho};
    });
    out.C = tau_stability_constant(out.rows);
    return out;
}

}  // namespace clab
