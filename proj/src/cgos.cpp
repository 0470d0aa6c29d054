#include "clab/cgos.hpp"

#include <algorithm>
#include <cmath>

#include "clab/errors.hpp"
#include "clab/krylov.hpp"
#include "clab/modulus.hpp"
#include "clab/planar.hpp"

namespace clab {
namespace {

// Nodes where the coefficient lives; every operator in this file maps data
// on these nodes to data on these nodes.
struct Support {
    Grid grid;
    std::vector<std::size_t> idx;
    std::vector<cplx> z;
    std::shared_ptr<const PlanarKernel> ker;

    explicit Support(const GridField& mu) : grid(mu.grid()) {
        const int n = grid.n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                std::size_t k = std::size_t(i) * n + j;
                if (mu[k] == 0.0) continue;
                cplx p = grid.node(i, j);
                // the kernels allow one cell of slack for cell-averaged data
                if (std::abs(p) > 1.0 + grid.h() * (1 + 1e-9))
                    throw UnsupportedSupport("coefficient must vanish outside the closed unit disk");
                idx.push_back(k);
                z.push_back(p);
            }
        if (!idx.empty()) ker = PlanarKernel::get(grid, Reach::Disk);
    }
    std::size_t size() const { return idx.size(); }
    std::vector<cplx> gather(const GridField& f) const {
        std::vector<cplx> v(idx.size());
        for (std::size_t t = 0; t < idx.size(); ++t) v[t] = f[idx[t]];
        return v;
    }
    GridField scatter(const std::vector<cplx>& v) const {
        GridField f(grid);
        for (std::size_t t = 0; t < idx.size(); ++t) f[idx[t]] = v[t];
        return f;
    }
    void apply(const cplx* in, cplx* C, cplx* B) const { ker->apply_sparse(idx, in, C, B); }
    double l2(const std::vector<cplx>& v) const {
        double s = 0;
        for (auto& x : v) s += std::norm(x);
        return grid.h() * std::sqrt(s);
    }
};

// residuals are measured where the coefficient may live: the closed unit
// disk plus the one-cell slack
Disk support_disk(const Grid& g) { return Disk{0.0, 1.0 + g.h() * (1 + 1e-9)}; }
bool in_disk(const Grid& g, int i, int j) { return support_disk(g).contains(g.node(i, j)); }

double disk_ratio(const GridField& num, const GridField& den) {
    Disk D = support_disk(num.grid());
    double d = lp_norm(den, 2, D);
    return d == 0 ? 0.0 : lp_norm(num, 2, D) / d;
}

BeltramiField negated(const BeltramiField& mu) {
    BeltramiField m = mu;
    m.mu *= -1.0;
    return m;
}

// Full-grid quantities of a solved h = dbar M. The Beltrami residual uses
// the same discrete operators as the solve on the support nodes; the full
// grid transforms only feed the output fields.
void finish_record(CGOSRecord& rec, const BeltramiField& mu, const Support& s, const std::vector<cplx>& h) {
    const Grid& g = mu.mu.grid();
    const cplx k = rec.k;
    rec.h = s.scatter(h);
    if (s.size() == 0) {
        rec.M = GridField(g, 1.0);
        rec.dM = GridField(g);
    } else {
        CauchyBeurling cb = cauchy_beurling(rec.h, Reach::Full, 1.0);
        rec.M = std::move(cb.C);
        for (auto& v : rec.M.values()) v += 1.0;
        rec.dM = std::move(cb.B);
    }
    rec.f = GridField(g);
    GridField df(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx z = g.node(i, j), e = std::exp(kI * k * z);
            rec.f(i, j) = e * rec.M(i, j);
            if (in_disk(g, i, j)) df(i, j) = e * (kI * k * rec.M(i, j) + rec.dM(i, j));
        }
    GridField res(g);
    if (s.size() > 0) {
        std::vector<cplx> C(s.size()), B(s.size());
        s.apply(h.data(), C.data(), B.data());
        for (std::size_t t = 0; t < s.size(); ++t) {
            cplx e = std::exp(kI * k * s.z[t]);
            cplx dfv = e * (kI * k * (1.0 + C[t]) + B[t]);
            res[s.idx[t]] = e * h[t] - mu.mu[s.idx[t]] * std::conj(dfv);
        }
    }
    rec.residual = disk_ratio(res, df);
}

}  // namespace

PrincipalSolution solve_principal(const BeltramiField& mu, double tol, int max_iter) {
    const Grid& g = mu.mu.grid();
    if (lp_norm(mu.mu, INFINITY) >= 1) throw EllipticityViolation("principal solution needs sup |mu| < 1");
    Support s(mu.mu);
    PrincipalSolution out;
    std::vector<cplx> m = s.gather(mu.mu), h = m, Bh(s.size());
    while (s.size() > 0) {
        if (out.iterations >= max_iter)
            throw NoConvergence("principal solution: Neumann series stalled at " +
                                std::to_string(out.increments.back()));
        s.apply(h.data(), nullptr, Bh.data());
        double d2 = 0;
        for (std::size_t t = 0; t < h.size(); ++t) {
            cplx hn = m[t] * (1.0 + Bh[t]);
            d2 += std::norm(hn - h[t]);
            h[t] = hn;
        }
        ++out.iterations;
        out.increments.push_back(g.h() * std::sqrt(d2));
        if (out.increments.back() <= tol) break;
    }
    out.dbar_f = s.scatter(h);
    out.f = GridField::from(g, [](cplx z) { return z; });
    out.d_f = GridField(g, 1.0);
    if (s.size() > 0) {
        CauchyBeurling cb = cauchy_beurling(out.dbar_f, Reach::Full, 1.0);
        out.f += cb.C;
        out.d_f += cb.B;
    }
    GridField res(g);
    if (s.size() > 0) {
        s.apply(h.data(), nullptr, Bh.data());
        for (std::size_t t = 0; t < s.size(); ++t) res[s.idx[t]] = h[t] - m[t] * (1.0 + Bh[t]);
    }
    out.residual = disk_ratio(res, out.d_f);
    return out;
}

PsiSolution solve_linear_psi(const BeltramiField& nu, cplx k, int N, double tol, int max_terms) {
    if (k == 0.0) throw ZeroFrequency("psi_k needs k != 0");
    if (N < 0) throw InvalidArgument("truncation N must be >= 0");
    const Grid& g = nu.mu.grid();
    Support s(nu.mu);
    PsiSolution out;
    NeumannDiagnostics& d = out.diag;
    d.N = N;
    d.kappa = lp_norm(nu.mu, INFINITY);
    if (d.kappa >= 1) throw EllipticityViolation("psi_k needs sup |nu| < 1");

    const cplx c = -std::conj(k) / k;
    std::vector<cplx> a(s.size()), G(s.size()), BG(s.size()), gsum(s.size(), 0.0), hsum(s.size(), 0.0);
    for (std::size_t t = 0; t < s.size(); ++t) a[t] = c * e_k(-k, s.z[t]) * nu.mu[s.idx[t]];
    G = a;
    for (int n = 0; s.size() > 0; ++n) {
        double norm = s.l2(G);
        d.term_norms.push_back(norm);
        auto& acc = n <= N ? gsum : hsum;
        for (std::size_t t = 0; t < G.size(); ++t) acc[t] += G[t];
        if (n >= N && norm <= tol) break;
        if (n + 1 >= max_terms) throw NoConvergence("psi_k Neumann series did not converge");
        s.apply(G.data(), nullptr, BG.data());
        for (std::size_t t = 0; t < G.size(); ++t) G[t] = a[t] * BG[t];
    }
    d.partial_norm = s.l2(gsum);
    d.tail_norm = s.l2(hsum);
    const double amp = d.kappa * std::sqrt(kPi) / (1 - d.kappa);
    d.partial_bound = amp;
    d.tail_bound = amp * std::pow(d.kappa, N + 1);
    d.g = s.scatter(gsum);
    d.h = s.scatter(hsum);

    out.dbar_psi = d.g + d.h;
    out.psi = GridField::from(g, [](cplx z) { return z; });
    if (s.size() > 0) out.psi += cauchy(out.dbar_psi, 1.0);
    return out;
}

CGOSRecord solve_cgos(const BeltramiField& mu, cplx k, const CgosOptions& opt) {
    if (lp_norm(mu.mu, INFINITY) >= 1) throw EllipticityViolation("CGOS needs sup |mu| < 1");
    Support s(mu.mu);
    CGOSRecord rec;
    rec.k = k;
    rec.mu_id = opt.mu_id;
    const std::size_t m = s.size();
    std::vector<cplx> h(m, 0.0);
    double reduced = 0;

    if (m > 0 && k != 0.0) {
        std::vector<cplx> nu(m), rhs(m), C(m), B(m);
        const cplx ikb = kI * std::conj(k);
        for (std::size_t t = 0; t < m; ++t) {
            nu[t] = mu.mu[s.idx[t]] * e_k(-k, s.z[t]);
            rhs[t] = -ikb * nu[t];
        }
        // h - nu conj(Bh) + i conj(k) nu conj(Ch)
        auto apply = [&](const cplx* x, cplx* y) {
            s.apply(x, C.data(), B.data());
            for (std::size_t t = 0; t < m; ++t) y[t] = x[t] - nu[t] * std::conj(B[t]) + ikb * nu[t] * std::conj(C[t]);
        };
        auto relres = [&] {
            std::vector<cplx> y(m);
            apply(h.data(), y.data());
            double a = 0, b = 0;
            for (std::size_t t = 0; t < m; ++t) {
                a += std::norm(y[t] - rhs[t]);
                b += std::norm(rhs[t]);
            }
            return std::sqrt(a / b);
        };
        auto fixed_point = [&] {
            rec.method = "fixed-point";
            for (int it = 0; it < opt.max_iter; ++it) {
                s.apply(h.data(), C.data(), B.data());
                double dn = 0, hn = 0;
                for (std::size_t t = 0; t < m; ++t) {
                    cplx v = nu[t] * std::conj(B[t]) - ikb * nu[t] * std::conj(C[t]) + rhs[t];
                    dn += std::norm(v - h[t]);
                    hn += std::norm(v);
                    h[t] = v;
                }
                ++rec.iterations;
                if (!std::isfinite(dn) || dn <= opt.tol * opt.tol * hn * 1e-2) break;
            }
            reduced = relres();
        };

        if (opt.method == CgosMethod::FixedPoint) {
            fixed_point();
        } else {
            rec.method = "gmres";
            Eigen::VectorXd b(2 * m);
            std::copy(rhs.begin(), rhs.end(), reinterpret_cast<cplx*>(b.data()));
            LinearOp op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
                y.resize(x.size());
                apply(reinterpret_cast<const cplx*>(x.data()), reinterpret_cast<cplx*>(y.data()));
            };
            GmresResult r = gmres(op, b, Eigen::VectorXd::Zero(2 * m), opt.tol, opt.max_iter, opt.restart);
            rec.iterations = r.iterations;
            std::copy_n(reinterpret_cast<const cplx*>(r.x.data()), m, h.begin());
            reduced = r.residual;
            if (!r.converged && opt.method == CgosMethod::Auto && std::abs(k) <= 1) {
                std::fill(h.begin(), h.end(), 0.0);
                rec.iterations = 0;
                fixed_point();
            }
        }
    } else {
        rec.method = "trivial";
    }

    finish_record(rec, mu, s, h);
    rec.converged = reduced <= opt.tol && rec.residual <= 1e-6 && rec.M.all_finite();
    if (!rec.converged && opt.throw_on_failure)
        throw NoConvergence("CGOS solve stopped at reduced residual " + std::to_string(reduced) +
                            ", Beltrami residual " + std::to_string(rec.residual));
    return rec;
}

PhiResult phi_from_cgos(const CGOSRecord& rec) {
    if (rec.k == 0.0) throw ZeroFrequency("phi needs k != 0");
    const Grid& g = rec.M.grid();
    double lo = HUGE_VAL, hi = 0;
    for (auto& v : rec.M.values()) {
        lo = std::min(lo, std::abs(v));
        hi = std::max(hi, std::abs(v));
    }
    // f = e^{ikz} M vanishes exactly where M does
    if (!(lo >= 1e-12 * hi)) throw ZeroOnGrid("CGOS solution vanishes on the grid");

    PhiResult out;
    GridField q(g);
    bool any = false;
    for (std::size_t t = 0; t < g.size(); ++t)
        if (rec.h[t] != 0.0) {
            q[t] = rec.h[t] / (kI * rec.k * rec.M[t]);
            any = true;
        }
    out.phi = GridField::from(g, [](cplx z) { return z; });
    if (any) out.phi += cauchy(q, 1.0);

    const double r_hi = std::max(g.L / 2, 2 + 2 * g.h());
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx z = g.node(i, j), dz = out.phi(i, j) - z;
            cplx M = rec.M(i, j);
            out.exp_defect = std::max(out.exp_defect, std::abs(std::exp(kI * rec.k * dz) - M) / std::abs(M));
            double r = std::abs(z);
            if (r >= 2 && r <= r_hi) out.decay_constant = std::max(out.decay_constant, r * std::abs(dz));
        }
    return out;
}

UGamma u_gamma(const ConductivityField& gamma, cplx k, const CgosOptions& opt) {
    BeltramiField mu = gamma_to_mu(gamma);
    UGamma out;
    out.plus = solve_cgos(mu, k, opt);
    out.minus = solve_cgos(negated(mu), k, opt);
    const Grid& g = mu.mu.grid();
    out.u = GridField(g);
    out.du = GridField(g);
    out.dbar_u = GridField(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx e = std::exp(kI * k * g.node(i, j));
            const CGOSRecord& p = out.plus;
            const CGOSRecord& m = out.minus;
            cplx dp = e * (kI * k * p.M(i, j) + p.dM(i, j)), bp = e * p.h(i, j);
            cplx dm = e * (kI * k * m.M(i, j) + m.dM(i, j)), bm = e * m.h(i, j);
            out.u(i, j) = cplx(p.f(i, j).real(), m.f(i, j).imag());
            out.du(i, j) = 0.5 * (dp + std::conj(bp) + dm - std::conj(bm));
            out.dbar_u(i, j) = 0.5 * (bp + std::conj(dp) + bm - std::conj(dm));
        }
    return out;
}

double conductivity_weak_defect(const ConductivityField& gamma, const UGamma& u, const std::vector<cplx>& centers,
                                double radius) {
    const Grid& g = gamma.gamma.grid();
    double worst = 0;
    for (cplx c : centers) {
        cplx num = 0;
        double den = 0;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                cplx w = g.node(i, j) - c;
                double s = std::norm(w) / (radius * radius);
                if (s >= 1) continue;
                // phi = exp(1 - 1/(1 - s)); dphi = dphi/ds * conj(w) / r^2
                double phi = std::exp(1 - 1 / (1 - s));
                double dphids = -phi / ((1 - s) * (1 - s));
                cplx dphi = dphids * std::conj(w) / (radius * radius);
                cplx dbphi = std::conj(dphi);
                double gm = gamma.gamma(i, j).real();
                cplx du = u.du(i, j), db = u.dbar_u(i, j);
                num += gm * 2.0 * (du * dbphi + db * dphi);
                den += gm * std::sqrt(2 * (std::norm(du) + std::norm(db))) * 2 * std::abs(dphi);
            }
        if (den > 0) worst = std::max(worst, std::abs(num) / den);
    }
    return worst;
}

GridField lambda_mu(const CGOSRecord& plus, const CGOSRecord& minus) {
    const Grid& g = plus.f.grid();
    GridField out(g, 1.0);
    for (std::size_t t = 0; t < g.size(); ++t) {
        cplx d = plus.f[t] - minus.f[t];
        double scale = std::max(std::abs(plus.f[t]), std::abs(minus.f[t]));
        if (std::abs(d) > 1e-12 * scale) out[t] = std::conj(d) / d;
    }
    return out;
}

GridField rotation_formula(const CGOSRecord& plus, const CGOSRecord& minus, cplx lambda) {
    const Grid& g = plus.f.grid();
    GridField out(g);
    for (std::size_t t = 0; t < g.size(); ++t) {
        cplx fp = plus.f[t], fm = minus.f[t], s = fp + fm;
        out[t] = ((fp - fm) / s + 1.0 / lambda) * lambda * s / 2.0;
    }
    return out;
}

double rotation_identity_defect(const BeltramiField& mu, cplx k, cplx lambda, const CGOSRecord& plus,
                                const CGOSRecord& minus, const CgosOptions& opt) {
    if (std::abs(std::abs(lambda) - 1) > 1e-12) throw InvalidArgument("lambda must lie on the unit circle");
    BeltramiField lm = mu;
    lm.mu *= lambda;
    CGOSRecord direct = solve_cgos(lm, k, opt);
    GridField formula = rotation_formula(plus, minus, lambda);
    return disk_ratio(direct.f - formula, direct.f);
}

double RadialCutoff::value(cplx z) const {
    double r = std::abs(z);
    if (r <= r_in) return 1;
    if (r >= r_out) return 0;
    return 0.5 * (1 + std::cos(kPi * (r - r_in) / (r_out - r_in)));
}

cplx RadialCutoff::grad(cplx z) const {
    double r = std::abs(z);
    if (r <= r_in || r >= r_out) return 0.0;
    double w = r_out - r_in;
    return -0.5 * kPi / w * std::sin(kPi * (r - r_in) / w) * (z / r);
}

CaccioppoliCurves caccioppoli_modulus_check(const BeltramiField& mu, cplx k, double p, double r,
                                            const RadialCutoff& cutoff, const CgosOptions& opt) {
    const double kappa = lp_norm(mu.mu, INFINITY);
    const double pk = kappa > 0 ? 1 + 1 / kappa : INFINITY;
    // sharp norm of B on L^p is known only at p = 2; elsewhere the
    // conjectured value max(p, p') - 1 stands in
    const double bnorm = std::max(p, p / (p - 1)) - 1;
    if (!(p > 1 && p < pk) || !(kappa * bnorm < 1)) throw BadExponents("need 1 < p < p_kappa and kappa ||B||_p < 1");
    if (!(r >= p && (r < pk || std::isinf(pk)))) throw BadExponents("need p <= r < p_kappa");
    if (!(cutoff.r_in < cutoff.r_out) || cutoff.r_out > mu.mu.grid().L)
        throw InvalidArgument("cutoff radii must satisfy r_in < r_out <= L");

    CaccioppoliCurves out;
    out.p = p;
    out.r = r;
    out.q = r == p ? INFINITY : 1 / (1 / p - 1 / r);

    CGOSRecord rec = solve_cgos(mu, k, opt);
    const Grid& g = mu.mu.grid();
    GridField lhs(g), fx(g), fy(g), fg(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx z = g.node(i, j), e = std::exp(kI * k * z);
            lhs(i, j) = cutoff.value(z) * e * rec.h(i, j);
            cplx gr = cutoff.grad(z);
            fx(i, j) = rec.f(i, j) * gr.real();
            fy(i, j) = rec.f(i, j) * gr.imag();
            fg(i, j) = std::abs(rec.f(i, j)) * std::abs(gr);
        }
    out.f_grad_norm = lp_norm(fg, r);
    ModulusCurve cl = modulus_curve(lhs, p), cm = modulus_curve(mu.mu, out.q);
    ModulusCurve cx = modulus_curve(fx, p), cy = modulus_curve(fy, p);
    for (std::size_t a = 0; a < cl.samples.size(); ++a) {
        out.t.push_back(cl.samples[a].t);
        out.lhs.push_back(cl.samples[a].value);
        out.mu_term.push_back(out.f_grad_norm * cm.samples[a].value);
        out.f_term.push_back(std::hypot(cx.samples[a].value, cy.samples[a].value));
        out.rhs.push_back(out.mu_term.back() + out.f_term.back());
    }
    return out;
}

double caccioppoli_constant(const CaccioppoliCurves& c) {
    double C = 0;
    for (std::size_t a = 0; a < c.t.size(); ++a)
        if (c.rhs[a] > 0) C = std::max(C, c.lhs[a] / c.rhs[a]);
    return C;
}

}  // namespace clab
