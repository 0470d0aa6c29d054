#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>

#include "clab/errors.hpp"
#include "clab/field_io.hpp"
#include "clab/grid.hpp"
#include "clab/planar.hpp"
#include "support.hpp"

using namespace clab;
using testsupport::at;
using testsupport::bump;
using testsupport::max_abs;
using testsupport::max_abs_diff;

namespace {

double l2(const FrequencyField& F) {
    double s = 0;
    for (auto& v : F.values) s += std::norm(v);
    return std::sqrt(s) * F.dxi();
}

// window that is 1 on |z| <= 2.2 and vanishes well before the frame
GridField window(const Grid& g) {
    return GridField::from(g, [](cplx z) {
        double r = std::abs(z);
        if (r <= 2.2) return cplx(1.0);
        if (r >= 3.6) return cplx(0.0);
        double t = (r - 2.2) / 1.4;
        double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
        return cplx(b / (a + b));
    });
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid::make(100, 4.0), InvalidArgument);
    CHECK_THROWS_AS(Grid::make(32, 4.0), InvalidArgument);
    CHECK_THROWS_AS(Grid::make(128, 3.0), InvalidArgument);
    Grid g = Grid::make(128, 4.0);
    CHECK(g.h() == doctest::Approx(1.0 / 16));
    CHECK(g.node(0, 0) == cplx(-4, -4));
    CHECK(g.node(64, 64) == cplx(0, 0));
}

TEST_CASE("fft of zero is zero, round trip and Parseval") {
    Grid g = Grid::make(128, 4.0);
    FrequencyField Z = fft(GridField(g));
    for (auto& v : Z.values) CHECK(v == cplx(0));

    GridField f = testsupport::random_field(g, 7);
    FrequencyField F = fft(f);
    GridField back = ifft(F);
    double err = 0, ref = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        err = std::max(err, std::abs(back[k] - f[k]));
        ref = std::max(ref, std::abs(f[k]));
    }
    CHECK(err / ref < 1e-12);
    double lhs = lp_norm(f, 2.0);
    CHECK(std::abs(lhs - kParsevalConstant * l2(F)) / lhs < 1e-10);
}

TEST_CASE("exponential concentrates in a single bin") {
    Grid g = Grid::make(128, 4.0);
    // xi0 on the frequency lattice
    FrequencyField probe{g, {}};
    cplx xi0 = probe.dxi() * cplx(5, -3);
    GridField f = GridField::from(g, [&](cplx z) { return e_k(std::conj(xi0), z); });
    FrequencyField F = fft(f);
    // the transform picks up exp(2i(xi + xi0).z), so the peak is at -xi0
    int a = g.n / 2 - 5, b = g.n / 2 + 3;
    double peak = std::abs(F(a, b)), rest = 0;
    for (int p = 0; p < g.n; ++p)
        for (int q = 0; q < g.n; ++q)
            if (p != a || q != b) rest = std::max(rest, std::abs(F(p, q)));
    CHECK(peak == doctest::Approx(4.0 * g.L * g.L).epsilon(1e-12));
    CHECK(rest < 1e-10 * peak);
    CHECK(std::abs(F.xi(a, b) + xi0) < 1e-14);
}

TEST_CASE("Gaussian transform against direct quadrature") {
    Grid g = Grid::make(256, 6.0);
    GridField f = GridField::from(g, [](cplx z) { return std::exp(-std::norm(z)); });
    FrequencyField F = fft(f);
    // product Gauss-Legendre quadrature of the defining integral
    struct Row {
        int a, b;
        double ref;
    };
    const Row rows[] = {{0, 0, 3.1415926535899272},
                        {3, 0, 1.6953337274128324},
                        {2, 5, 0.43046090241181123},
                        {-4, 1, 0.9797755689356936},
                        {6, -6, 0.02259396791613966}};
    for (const Row& r : rows) {
        cplx v = F(g.n / 2 + r.a, g.n / 2 + r.b);
        CHECK(std::abs(v - r.ref) / r.ref < 1e-6);
    }
}

TEST_CASE("Wirtinger derivatives") {
    Grid g = Grid::make(512, 4.0);
    CHECK(max_abs(dbar(GridField(g, 3.0))) < 1e-13);
    CHECK(max_abs(d(GridField(g, cplx(1, 2)))) < 1e-13);

    FrequencyField probe{g, {}};
    cplx xi0 = probe.dxi() * cplx(-7, 4);
    GridField f = GridField::from(g, [&](cplx z) { return e_k(std::conj(xi0), z); });
    GridField expect = (kI * xi0) * f;
    CHECK(max_abs_diff(dbar(f), expect) < 1e-11);
    // d picks the conjugate: d e^{2i xi0.z} = i conj(xi0) e^{2i xi0.z}
    CHECK(max_abs_diff(d(f), (kI * std::conj(xi0)) * f) < 1e-11);

    // product rule: dbar(zbar phi) = phi + zbar dbar(phi)
    GridField phi = GridField::from(g, [](cplx z) { return bump(z, 2.0); });
    GridField zb = GridField::from(g, [](cplx z) { return std::conj(z); });
    GridField lhs = dbar(zb * phi);
    GridField rhs = phi + zb * dbar(phi);
    CHECK(max_abs_diff(lhs, rhs) < 1e-6);
    CHECK(std::abs(at(lhs, 0.0) - 1.0) < 1e-6);
}

TEST_CASE("periodic Beurling transform") {
    Grid g = Grid::make(128, 4.0);
    CHECK(max_abs(beurling(GridField(g))) < 1e-15);

    GridField f = testsupport::random_field(g, 3);
    cplx mean = 0;
    for (auto& v : f.values()) mean += v;
    mean /= double(g.size());
    for (auto& v : f.values()) v -= mean;
    double a = lp_norm(f, 2), b = lp_norm(beurling(f), 2);
    CHECK(std::abs(a - b) / a < 1e-8);

    // translation equivariance on lattice shifts
    auto shift = [&](const GridField& u, int di, int dj) {
        GridField o(g);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) o((i + di) % g.n, (j + dj) % g.n) = u(i, j);
        return o;
    };
    GridField lhs = beurling(shift(f, 5, 17)), rhs = shift(beurling(f), 5, 17);
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("periodic Beurling of the disk indicator" * doctest::timeout(120)) {
    Grid g = Grid::make(1024, 4.0);
    GridField chi = GridField::from(g, [](cplx z) { return std::abs(z) <= 1.0 ? 1.0 : 0.0; });
    GridField B = beurling(chi);
    CHECK(std::abs(at(B, 2.0) - (-0.25)) < 2e-2);
    CHECK(std::abs(at(B, cplx(0, 0.5))) < 2e-2);
}

TEST_CASE("planar Cauchy transform") {
    Grid g = Grid::make(512, 4.0);
    CHECK(max_abs(cauchy(GridField(g))) == 0.0);
    GridField wide = GridField::from(g, [](cplx z) { return bump(z, 1.5); });
    CHECK_THROWS_AS(cauchy(wide), UnsupportedSupport);

    GridField f = testsupport::smooth_disk_field(g);
    CauchyBeurling cb = cauchy_beurling(f);
    GridField w = window(g);
    GridField db = dbar(w * cb.C), dd = d(w * cb.C);
    double ref = max_abs(f);
    CHECK(max_abs_diff(db, f, 2.0) / ref < 1e-6);
    CHECK(max_abs_diff(dd, cb.B, 2.0) / ref < 1e-6);

    // the disk-reach kernel agrees with the full one on the disk
    CauchyBeurling cd = cauchy_beurling(f, Reach::Disk);
    CHECK(max_abs_diff(cd.C, cb.C, 1.0) < 1e-7);
    CHECK(max_abs_diff(cd.B, cb.B, 1.0) < 1e-7);
    CHECK(PlanarKernel::get(g, Reach::Disk)->box_size() < g.n);
}

TEST_CASE("planar Cauchy of the disk indicator" * doctest::timeout(120)) {
    Grid g = Grid::make(1024, 4.0);
    GridField chi = GridField::from(g, [](cplx z) { return std::abs(z) <= 1.0 ? 1.0 : 0.0; });
    CauchyBeurling cb = cauchy_beurling(chi);
    CHECK(std::abs(at(cb.C, 0.5) - 0.5) < 1e-2);
    CHECK(std::abs(at(cb.C, 2.0) - 0.5) < 1e-2);
    CHECK(std::abs(at(cb.B, 2.0) + 0.25) < 1e-2);
}

TEST_CASE("modulation") {
    Grid g = Grid::make(128, 4.0);
    GridField f = testsupport::random_field(g, 11);
    CHECK(max_abs_diff(modulate(f, 0.0), f) == 0.0);
    cplx k(1.3, -0.7);
    CHECK(max_abs_diff(modulate(modulate(f, k), -k), f) < 1e-14 * max_abs(f) * 10);
    GridField m = modulate(f, k);
    for (std::size_t q = 0; q < g.size(); ++q) CHECK(std::abs(std::abs(m[q]) - std::abs(f[q])) < 1e-13);

    // spectrum moves by conj(k) when conj(k) sits on the frequency lattice
    FrequencyField F = fft(f);
    cplx kk = std::conj(F.dxi() * cplx(3, -2));
    FrequencyField G = fft(modulate(f, kk));
    double err = 0;
    for (int a = 10; a < g.n - 10; ++a)
        for (int b = 10; b < g.n - 10; ++b) err = std::max(err, std::abs(G(a, b) - F(a + 3, b - 2)));
    CHECK(err < 1e-8);
}

TEST_CASE("lp norms") {
    Grid g = Grid::make(256, 4.0);
    CHECK(lp_norm(GridField(g, 1.0), 2.0) == doctest::Approx(2 * g.L).epsilon(1e-13));
    GridField chi = GridField::from(g, [](cplx z) { return std::abs(z) <= 1.0 ? 1.0 : 0.0; });
    CHECK(std::abs(lp_norm(chi, 1.0) - kPi) <= 4 * g.h() * 2 * kPi);
    CHECK(lp_norm(chi, INFINITY) == 1.0);
    CHECK(lp_norm(chi, 2.0, Disk{3.0, 0.5}) == 0.0);
    CHECK_THROWS_AS(lp_norm(chi, 0.0), InvalidArgument);
}

TEST_CASE("CKF1 round trip is bit identical") {
    Grid g = Grid::make(64, 4.0);
    GridField f = testsupport::random_field(g, 5);
    std::string path = (std::filesystem::temp_directory_path() / "clab_rt.ckf1").string();
    write_field(path, f);
    GridField r = read_field(path);
    CHECK(r.grid() == g);
    CHECK(std::memcmp(r.data(), f.data(), g.size() * sizeof(cplx)) == 0);
    std::remove(path.c_str());
    CHECK_THROWS_AS(decode_field("XXXX1234"), IOError);
}

TEST_CASE("tabulated kernel cutoff matches the quadrature") {
    for (Reach r : {Reach::Disk, Reach::Full}) {
        KernelCutoff kc = kernel_cutoff(Grid::make(256, 4.0), r);
        KernelCutoffTable t(kc);
        double err = 0;
        for (double rho = 0; rho < 14 / kc.w; rho += 0.173) err = std::max(err, std::abs(t(rho) - kc.g(rho)));
        CHECK(err <= 1e-12);
        // g(0) is the total jump of chi
        CHECK(kc.g(0) == doctest::Approx(-1.0).epsilon(1e-12));
    }
}
