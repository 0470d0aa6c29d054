#include <doctest.h>

#include <Eigen/Dense>

#include "clab/cgos.hpp"
#include "clab/errors.hpp"
#include "clab/krylov.hpp"
#include "support.hpp"

using namespace clab;

namespace {

// cell-averaged radial stretch coefficient c z / conj z on the unit disk
BeltramiField stretch_mu(const Grid& g, double c) {
    auto m0 = [&](cplx z) {
        double r = std::abs(z);
        return r > 1 || r == 0 ? cplx(0) : c * z / std::conj(z);
    };
    const int S = 8;
    const double h = g.h();
    return {GridField::from(g,
                            [&](cplx z) {
                                cplx a = 0;
                                for (int p = 0; p < S; ++p)
                                    for (int q = 0; q < S; ++q)
                                        a += m0(z + h * cplx((p + 0.5) / S - 0.5, (q + 0.5) / S - 0.5));
                                return a / double(S * S);
                            }),
            {}};
}

// z |z|^{a-1} on the disk, identity outside: principal map of the stretch
cplx stretch_map(cplx z, double a) {
    double r = std::abs(z);
    if (r == 0) return 0.0;
    return r <= 1 ? z * std::pow(r, a - 1) : z;
}

BeltramiField mu_of(const ConductivityModel& m, const Grid& g) {
    return gamma_to_mu(sample(m, g, m.is_radial_layers() ? 4 : 1));
}

double sup_minus_id(const GridField& f) {
    const Grid& g = f.grid();
    double e = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) e = std::max(e, std::abs(f(i, j) - g.node(i, j)));
    return e;
}

int inversions(const std::vector<double>& v) {
    int c = 0;
    for (std::size_t i = 1; i < v.size(); ++i) c += v[i] > v[i - 1];
    return c;
}

cplx bilinear(const GridField& f, cplx z) {
    const Grid& g = f.grid();
    double x = (z.real() + g.L) / g.h(), y = (z.imag() + g.L) / g.h();
    int i = std::clamp(int(std::floor(x)), 0, g.n - 2), j = std::clamp(int(std::floor(y)), 0, g.n - 2);
    double a = x - i, b = y - j;
    return (1 - a) * (1 - b) * f(i, j) + a * (1 - b) * f(i + 1, j) + (1 - a) * b * f(i, j + 1) + a * b * f(i + 1, j + 1);
}

}  // namespace

TEST_CASE("GMRES against a direct solve") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(60, 60) * 0.3 + Eigen::MatrixXd::Identity(60, 60) * 2.0;
    Eigen::VectorXd b = Eigen::VectorXd::Random(60);
    LinearOp op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = A * x; };
    for (int restart : {5, 20, 80}) {
        GmresResult r = gmres(op, b, Eigen::VectorXd::Zero(60), 1e-12, 2000, restart);
        CHECK(r.converged);
        CHECK((r.x - A.partialPivLu().solve(b)).norm() <= 1e-10 * b.norm());
    }
    GmresResult z = gmres(op, Eigen::VectorXd::Zero(60), Eigen::VectorXd::Ones(60), 1e-12, 10);
    CHECK(z.converged);
    CHECK(z.x.norm() == 0.0);
    GmresResult cut = gmres(op, b, Eigen::VectorXd::Zero(60), 1e-14, 2, 2);
    CHECK_FALSE(cut.converged);
    CHECK(cut.iterations == 2);
}

TEST_CASE("principal solution") {
    Grid g = Grid::make(256, 4.0);
    PrincipalSolution zero = solve_principal(BeltramiField{GridField(g), {}});
    CHECK(zero.iterations == 0);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(zero.f[k] == g.node(int(k / g.n), int(k % g.n)));

    // contraction at the rate kappa
    BeltramiField mu = stretch_mu(g, -0.5);
    PrincipalSolution p = solve_principal(mu);
    CHECK(p.residual <= 1e-6);
    for (std::size_t n = 1; n < p.increments.size(); ++n) CHECK(p.increments[n] <= 0.5 * 1.02 * p.increments[n - 1]);
    CHECK(p.increments.back() <= 1e-10);

    CHECK_THROWS_AS(solve_principal(mu, 1e-10, 3), NoConvergence);
    BeltramiField big{GridField(g), {}};
    big.mu(g.n / 2, g.n / 2) = 1.0;
    CHECK_THROWS_AS(solve_principal(big), EllipticityViolation);
    BeltramiField outside{GridField(g), {}};
    outside.mu(g.n / 2 + 48, g.n / 2) = 0.2;  // |z| = 1.5
    CHECK_THROWS_AS(solve_principal(outside), UnsupportedSupport);
}

TEST_CASE("principal solution reproduces the radial stretch" * doctest::timeout(120)) {
    Grid g = Grid::make(1024, 4.0);
    // K = 2, a = 1/K: mu = (a - 1)/(a + 1) z / conj z
    PrincipalSolution p = solve_principal(stretch_mu(g, -1.0 / 3));
    double e = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) e = std::max(e, std::abs(p.f(i, j) - stretch_map(g.node(i, j), 0.5)));
    CHECK(e <= 5e-3);
    CHECK(p.residual <= 1e-6);
}

TEST_CASE("Jacobian integrability of an expanding stretch") {
    // K = 2 with a = K: |d f|^{-1} = (2/3) |z|^{-1}, whose L^1(D) norm is 4 pi / 3
    std::vector<double> norms;
    for (int n : {256, 512}) {
        Grid g = Grid::make(n, 4.0);
        PrincipalSolution p = solve_principal(stretch_mu(g, 1.0 / 3));
        GridField inv(g);
        for (std::size_t k = 0; k < g.size(); ++k) inv[k] = 1.0 / std::abs(p.d_f[k]);
        norms.push_back(lp_norm(inv, 1.0, Disk{}));
    }
    CHECK(norms[1] == doctest::Approx(4 * kPi / 3).epsilon(0.05));
    CHECK(std::abs(norms[0] / norms[1] - 1) <= 0.05);
}

TEST_CASE("linear psi_k and the Neumann diagnostics") {
    Grid g = Grid::make(256, 4.0);
    CHECK_THROWS_AS(solve_linear_psi(BeltramiField{GridField(g), {}}, 0.0, 3), ZeroFrequency);
    PsiSolution zero = solve_linear_psi(BeltramiField{GridField(g), {}}, 2.0, 3);
    CHECK(sup_minus_id(zero.psi) == 0.0);

    for (double kappa : {0.3, 0.5, 0.7}) {
        BeltramiField nu = stretch_mu(g, kappa);
        PsiSolution s = solve_linear_psi(nu, cplx(1, 1), 10);
        const auto& d = s.diag;
        CHECK(std::abs(d.kappa - kappa) <= 1e-3);  // cell averaging trims the peak
        CHECK(d.tail_norm <= d.tail_bound);
        CHECK(d.partial_norm <= d.partial_bound);
        for (std::size_t n = 0; n < d.term_norms.size(); ++n)
            CHECK(d.term_norms[n] <= std::pow(kappa, n) * kappa * std::sqrt(kPi) * (1 + 1e-9));
        // the split reproduces the full solution
        CHECK(testsupport::max_abs_diff(d.g + d.h, s.dbar_psi) == 0.0);
    }
    // the documented example: kappa = 0.5, N = 10
    PsiSolution e = solve_linear_psi(stretch_mu(g, 0.5), 1.0, 10);
    CHECK(e.diag.tail_norm <= 0.5 * std::sqrt(kPi) * std::pow(0.5, 11) / 0.5);
}

TEST_CASE("psi_k and phi decay in |k| for a Holder coefficient") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField nu = mu_of(family_holder(0.5, 1, holder_amplitude_for_kappa(0.2)), g);
    std::vector<double> lin, non;
    for (double k : {2.0, 4.0, 8.0, 16.0, 32.0}) {
        lin.push_back(sup_minus_id(solve_linear_psi(nu, k, 10).psi));
        non.push_back(sup_minus_id(phi_from_cgos(solve_cgos(nu, k)).phi));
    }
    CHECK(inversions(lin) <= 1);
    CHECK(inversions(non) <= 1);
    CHECK(lin.back() < lin.front());
    for (std::size_t i = 0; i < lin.size(); ++i) {
        CHECK(non[i] <= 3 * lin[i]);
        CHECK(lin[i] <= 3 * non[i]);
    }
}

TEST_CASE("sup norm of psi_k - Id agrees with that of the inverse map") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField nu = mu_of(family_bump(0.8, 0.8), g);
    PsiSolution s = solve_linear_psi(nu, 2.0, 10);
    double fwd = sup_minus_id(s.psi), inv = 0;
    for (int i = 0; i < g.n; i += 2)
        for (int j = 0; j < g.n; j += 2) {
            cplx w = g.node(i, j);
            if (std::abs(w.real()) > g.L - 0.5 || std::abs(w.imag()) > g.L - 0.5) continue;
            cplx z = w;
            for (int it = 0; it < 30; ++it) z -= bilinear(s.psi, z) - w;
            inv = std::max(inv, std::abs(z - w));
        }
    CHECK(std::abs(fwd - inv) <= 5e-3);
}

TEST_CASE("CGOS trivial cases") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField zero{GridField(g), {}};
    CGOSRecord r = solve_cgos(zero, cplx(1, 0.5));
    CHECK(r.converged);
    CHECK(r.residual == 0.0);
    double e = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx ex = std::exp(kI * cplx(1, 0.5) * g.node(i, j));
            e = std::max(e, std::abs(r.f(i, j) - ex) / std::abs(ex));
            CHECK(r.M(i, j) == 1.0);
        }
    CHECK(e <= 1e-10);

    BeltramiField mu = mu_of(family_bump(0.8, 0.8), g);
    CGOSRecord k0 = solve_cgos(mu, 0.0);
    for (auto& v : k0.f.values()) CHECK(v == 1.0);
}

TEST_CASE("CGOS solves satisfy the Beltrami equation") {
    Grid g = Grid::make(256, 4.0);
    std::vector<ConductivityModel> corpus = {family_bump(0.8, 0.8), family_holder(0.5, 1), family_gamma_R(0.5)};
    for (const auto& m : corpus) {
        BeltramiField mu = mu_of(m, g);
        for (cplx k : {cplx(0.5, 0), cplx(1, 1), cplx(4, 0), cplx(0, -8)}) {
            CGOSRecord r = solve_cgos(mu, k);
            INFO(m.name, " k=", k.real(), ",", k.imag());
            CHECK(r.converged);
            CHECK(r.residual <= 1e-6);
            double e = 0;
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j) {
                    cplx ex = std::exp(kI * k * g.node(i, j)) * r.M(i, j);
                    e = std::max(e, std::abs(r.f(i, j) - ex) / std::abs(ex));
                }
            CHECK(e <= 1e-12);
            // M - 1 is much smaller near the frame than on the disk
            double in = 0, frame = 0;
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j) {
                    double a = std::abs(r.M(i, j) - 1.0), rr = std::abs(g.node(i, j));
                    if (rr <= 1) in = std::max(in, a);
                    if (rr >= 3.5) frame = std::max(frame, a);
                }
            CHECK(frame <= 0.5 * in);
        }
    }
}

TEST_CASE("CGOS: Krylov and fixed point agree for small |k|") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField mu = mu_of(family_bump(0.8, 0.8), g);
    for (double k : {0.5, 1.0}) {
        CGOSRecord a = solve_cgos(mu, k);
        CgosOptions o;
        o.method = CgosMethod::FixedPoint;
        CGOSRecord b = solve_cgos(mu, k, o);
        CHECK(a.method == "gmres");
        CHECK(b.method == "fixed-point");
        CHECK(testsupport::max_abs_diff(a.M, b.M) <= 1e-9);
    }
    CgosOptions tiny;
    tiny.max_iter = 1;
    CHECK_THROWS_AS(solve_cgos(mu, 4.0, tiny), NoConvergence);
    tiny.throw_on_failure = false;
    CHECK_FALSE(solve_cgos(mu, 4.0, tiny).converged);
}

TEST_CASE("CGOS: Jost pair and growth in |k|") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField mu = mu_of(family_gamma_R(0.5), g);
    BeltramiField neg = mu;
    neg.mu *= -1.0;
    std::vector<double> logs;
    for (double k : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        CGOSRecord p = solve_cgos(mu, k), m = solve_cgos(neg, k);
        double lo = HUGE_VAL;
        for (std::size_t t = 0; t < g.size(); ++t) lo = std::min(lo, (p.M[t] / m.M[t]).real());
        CHECK(lo > 0);
        // W^{1,2} norm of M - 1 over the grid
        GridField Mm1 = p.M;
        for (auto& v : Mm1.values()) v -= 1.0;
        double w = std::sqrt(std::pow(lp_norm(Mm1, 2), 2) + std::pow(lp_norm(p.h, 2), 2) + std::pow(lp_norm(p.dM, 2), 2));
        logs.push_back(std::log(w));
    }
    // log ||M - 1|| grows at most linearly in |k|, and the slope flattens
    std::vector<double> ks = {1, 2, 4, 8, 16};
    for (std::size_t i = 2; i < ks.size(); ++i) {
        double s0 = (logs[i - 1] - logs[i - 2]) / (ks[i - 1] - ks[i - 2]);
        double s1 = (logs[i] - logs[i - 1]) / (ks[i] - ks[i - 1]);
        CHECK(s1 <= s0 + 0.02);
    }
}

TEST_CASE("phi from the CGOS") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField zero{GridField(g), {}};
    CHECK(sup_minus_id(phi_from_cgos(solve_cgos(zero, 1.0)).phi) == 0.0);
    CHECK_THROWS_AS(phi_from_cgos(solve_cgos(zero, 0.0)), ZeroFrequency);

    BeltramiField mu = mu_of(family_bump(0.8, 0.8), g);
    CGOSRecord r = solve_cgos(mu, 1.0);
    PhiResult ph = phi_from_cgos(r);
    CHECK(ph.exp_defect <= 1e-6);
    // ik(phi - z) against the principal log of M along the positive axis
    double e = 0;
    for (int i = g.n / 2; i < g.n; ++i) {
        int j = g.n / 2;
        cplx M = r.M(i, j);
        REQUIRE(std::abs(M - 1.0) < 1.0);
        e = std::max(e, std::abs(kI * 1.0 * (ph.phi(i, j) - g.node(i, j)) - std::log(M)));
    }
    CHECK(e <= 1e-6);
    CHECK(ph.decay_constant > 0);
    CHECK(ph.decay_constant <= 2.5 * sup_minus_id(ph.phi));

    CGOSRecord bad = r;
    bad.M(3, 3) = 0.0;
    CHECK_THROWS_AS(phi_from_cgos(bad), ZeroOnGrid);
}

TEST_CASE("u_gamma") {
    Grid g = Grid::make(256, 4.0);
    auto one = sample(family_constant(), g);
    UGamma u = u_gamma(one, cplx(1, -0.5));
    double e = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx ex = std::exp(kI * cplx(1, -0.5) * g.node(i, j));
            e = std::max(e, std::abs(u.u(i, j) - ex) / std::abs(ex));
        }
    CHECK(e <= 1e-12);
    auto bump = sample(family_bump(0.8, 0.8), g);
    UGamma u0 = u_gamma(bump, 0.0);
    for (auto& v : u0.u.values()) CHECK(v == 1.0);
}

TEST_CASE("u_gamma solves the conductivity equation weakly" * doctest::timeout(120)) {
    Grid g = Grid::make(512, 4.0);
    auto bump = sample(family_bump(0.8, 0.8), g);
    CHECK(conductivity_weak_defect(bump, u_gamma(bump, 1.0)) <= 1e-4);
}

TEST_CASE("lambda_mu and the rotation identity") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField zero{GridField(g), {}};
    CGOSRecord zp = solve_cgos(zero, 1.0), zm = solve_cgos(zero, 1.0);
    GridField lz = lambda_mu(zp, zm);
    for (auto& v : lz.values()) CHECK(v == 1.0);
    CHECK(rotation_identity_defect(zero, 1.0, kI, zp, zm) <= 1e-14);

    BeltramiField mu = mu_of(family_bump(0.8, 0.8), g), neg = mu;
    neg.mu *= -1.0;
    CGOSRecord p = solve_cgos(mu, 1.0), m = solve_cgos(neg, 1.0);
    GridField lam = lambda_mu(p, m);
    for (auto& v : lam.values()) CHECK(std::abs(std::abs(v) - 1) <= 1e-12);
    // outside the support f+ and f- still differ (through M), so lambda is informative there too
    CHECK(lam(g.n / 2, g.n / 2) != 1.0);

    for (cplx l : {cplx(1), cplx(-1), kI, -kI}) CHECK(rotation_identity_defect(mu, 1.0, l, p, m) <= 1e-4);
    // lambda = -1 returns f_{-mu}
    CHECK(testsupport::max_abs_diff(rotation_formula(p, m, -1.0), m.f) <= 1e-12 * lp_norm(m.f, INFINITY));
    CHECK_THROWS_AS(rotation_identity_defect(mu, 1.0, 2.0, p, m), InvalidArgument);
}

TEST_CASE("Caccioppoli modulus inequality") {
    Grid g = Grid::make(256, 4.0);
    BeltramiField zero{GridField(g), {}};
    CaccioppoliCurves z = caccioppoli_modulus_check(zero, 1.0, 2.0, 4.0);
    for (double v : z.lhs) CHECK(v == 0.0);

    BeltramiField mu = mu_of(family_bump(0.8, 0.8), g);  // kappa = 0.286, p_kappa = 4.5
    CHECK_THROWS_AS(caccioppoli_modulus_check(mu, 1.0, 2.0, 5.0), BadExponents);
    CHECK_THROWS_AS(caccioppoli_modulus_check(mu, 1.0, 1.0, 2.0), BadExponents);
    CHECK_THROWS_AS(caccioppoli_modulus_check(mu, 1.0, 2.0, 1.5), BadExponents);
    CHECK(caccioppoli_modulus_check(mu, 1.0, 2.0, 2.0).q == INFINITY);

    CaccioppoliCurves c = caccioppoli_modulus_check(mu, 1.0, 2.0, 4.0);
    CHECK(c.q == doctest::Approx(4.0));
    double C = caccioppoli_constant(c);
    CHECK(C > 0);
    for (std::size_t a = 0; a < c.t.size(); ++a) {
        CHECK(c.lhs[a] <= C * c.rhs[a] * (1 + 1e-12));
        CHECK(c.rhs[a] == doctest::Approx(c.mu_term[a] + c.f_term[a]));
    }
    // both parts of the right side are live; the f grad phi part is the larger one here
    for (std::size_t a = 0; a < c.t.size(); ++a) {
        CHECK(c.mu_term[a] > 0);
        CHECK(c.f_term[a] > 0);
    }
    CHECK(c.f_grad_norm > 0);
}
