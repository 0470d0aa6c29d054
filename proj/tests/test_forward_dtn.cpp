#include <doctest.h>

#include <map>

#include "clab/conductivity.hpp"
#include "clab/errors.hpp"
#include "clab/forward_dtn.hpp"

using namespace clab;

namespace {

double rel_asym(const DtNMatrix& d) { return (d.A - d.A.transpose()).norm() / d.A.norm(); }

}  // namespace

TEST_CASE("disk mesh is conforming and well shaped") {
    for (int lev = 0; lev <= 4; ++lev) {
        for (const std::vector<double>& iface : {std::vector<double>{}, std::vector<double>{0.25, 0.5},
                                                 std::vector<double>{0.3, 0.4, 0.8}}) {
            DiskMesh m = DiskMesh::build(lev, iface);
            CHECK(int(m.boundary.size()) == 32 << lev);
            CHECK(m.max_degree() == (32 << lev) / 16);
            CHECK(m.min_angle_deg() >= 20.0);
            for (int b : m.boundary) CHECK(std::abs(std::abs(m.vertices[b]) - 1) <= 1e-12);
            for (std::size_t k = 1; k < m.boundary.size(); ++k)
                CHECK(std::arg(m.vertices[m.boundary[k]] * std::conj(m.vertices[m.boundary[k - 1]])) > 0);
            // every edge is shared by two triangles except the boundary ones
            std::map<std::pair<int, int>, int> edges;
            double area = 0;
            for (auto& t : m.triangles) {
                cplx a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
                double tw = (b - a).real() * (c - a).imag() - (b - a).imag() * (c - a).real();
                CHECK(tw > 0);
                area += tw / 2;
                for (int e = 0; e < 3; ++e) {
                    int u = t[e], v = t[(e + 1) % 3];
                    ++edges[{std::min(u, v), std::max(u, v)}];
                }
            }
            int once = 0;
            for (auto& [e, c] : edges) {
                CHECK(c <= 2);
                once += c == 1;
            }
            CHECK(once == int(m.boundary.size()));
            // polygon area
            double nb = double(m.boundary.size());
            CHECK(area == doctest::Approx(0.5 * nb * std::sin(2 * kPi / nb)).epsilon(1e-12));
            for (double r : iface) CHECK(std::find(m.ring_radii.begin(), m.ring_radii.end(), r) != m.ring_radii.end());
        }
    }
    // layers thinner than the ring spacing cost angle quality but stay valid
    DiskMesh thin = DiskMesh::build(0, {0.3, 0.33});
    CHECK(thin.min_angle_deg() > 0);
    CHECK(DiskMesh::build(2, {0.3, 0.33}).min_angle_deg() >= 20.0);
    CHECK_THROWS_AS(DiskMesh::build(2, {1.2}), InvalidArgument);
}

TEST_CASE("Dirichlet problem with unit conductivity") {
    auto one = family_constant();
    std::vector<double> err;
    for (int lev = 1; lev <= 3; ++lev) {
        auto mesh = std::make_shared<const DiskMesh>(DiskMesh::build(lev));
        FemSolution c = solve_dirichlet(one, BasisIndex{0, 0}, mesh);
        CHECK((c.u.array() - 1.0).abs().maxCoeff() <= 1e-13);
        CHECK(c.energy <= 1e-20);

        FemSolution s = solve_dirichlet(one, BasisIndex{3, 1}, mesh);
        double e = 0;
        for (std::size_t v = 0; v < mesh->vertices.size(); ++v)
            e = std::max(e, std::abs(s.u[v] - basis_extension({3, 1}, mesh->vertices[v])));
        err.push_back(e);
        CHECK(s.energy == doctest::Approx(2 * kPi * 3).epsilon(0.05));
    }
    // second order in the mesh size
    CHECK(err[0] / err[1] > 3.0);
    CHECK(err[1] / err[2] > 3.0);
    CHECK(err[2] < 5e-3);
}

TEST_CASE("Dirichlet problem with layered conductivity matches the radial profile") {
    std::vector<double> radii = {0.3, 0.6}, values = {4.0};
    auto m = family_radial_layers(radii, values);
    auto mesh = std::make_shared<const DiskMesh>(DiskMesh::build(4, radii));
    for (int j : {1, 2, 4}) {
        FemSolution s = solve_dirichlet(m, BasisIndex{j, 1}, mesh);
        double e = 0, ref = 0;
        for (std::size_t v = 0; v < mesh->vertices.size(); ++v) {
            cplx z = mesh->vertices[v];
            double exact = std::sqrt(2.0) * radial_dtn_profile(radii, values, j, std::abs(z)) * std::cos(j * std::arg(z));
            e = std::max(e, std::abs(s.u[v] - exact));
            ref = std::max(ref, std::abs(exact));
        }
        CHECK(e / ref <= 1e-2);
        // energy does not exceed K times the harmonic energy
        CHECK(s.energy <= 4.0 * 2 * kPi * j * 1.01);
        CHECK(s.value_at(0.0) == doctest::Approx(s.u[0]));
    }
    CHECK_THROWS_AS(solve_dirichlet(m, BasisIndex{40, 1}, mesh), DegreeTooHigh);
}

TEST_CASE("DtN of the unit conductivity") {
    DiskMesh mesh = DiskMesh::build(3);
    DtNMatrix A = dtn_matrix(family_constant(), 8, mesh);
    CHECK(A.A.rows() == 17);
    CHECK(std::abs(A.A(0, 0)) <= 1e-12 * A.A.norm());
    for (auto a : basis_indices(8))
        for (auto b : basis_indices(8)) {
            if (a == b) {
                if (a.j > 0) CHECK(A(a, b) == doctest::Approx(2 * kPi * a.j).epsilon(1e-2));
            } else {
                CHECK(std::abs(A(a, b)) <= 1e-8 * A.A.diagonal().maxCoeff());
            }
        }
    for (int j = 1; j <= 8; ++j) CHECK(A.exp_eigenvalue(j) == doctest::Approx(j).epsilon(1e-2));
    CHECK_THROWS_AS(dtn_matrix(family_constant(), 17, mesh), DegreeTooHigh);
}

TEST_CASE("DtN of gamma_R against the closed form") {
    auto gr = family_gamma_R(0.5);
    auto one = family_constant();
    std::vector<std::vector<double>> rel;
    for (int lev : {2, 3, 4}) {
        DiskMesh mesh = DiskMesh::build(lev, {0.25, 0.5});
        DtNMatrix A = dtn_matrix(gr, 6, mesh), B = dtn_matrix(one, 6, mesh);
        CHECK(rel_asym(A) <= 1e-8);
        DtNMatrix D = A - B;
        for (int c = 0; c < D.A.cols(); ++c) CHECK(std::abs(D.A(0, c)) <= 1e-12 * A.A.norm());
        std::vector<double> r;
        for (int j = 1; j <= 6; ++j) r.push_back(std::abs(D.exp_eigenvalue(j) - j * m_x(0.5, j)) / (j * m_x(0.5, j)));
        rel.push_back(r);
    }
    for (int j = 0; j < 6; ++j) {
        CHECK(rel[2][j] <= 1e-2);
        double order = std::log2(rel[1][j] / rel[2][j]);
        CHECK(order >= 1.8);
    }
    CHECK(rel[2][0] == doctest::Approx(0).epsilon(1e-3));
}

TEST_CASE("radial oracle") {
    for (int j = 0; j <= 5; ++j) CHECK(radial_dtn_oracle({0.2, 0.5}, {1.0}, j) == doctest::Approx(j).epsilon(1e-14));
    CHECK(radial_dtn_oracle({0.25, 0.5}, {3.0}, 1) == doctest::Approx(1 + 2.0 / 9).epsilon(1e-14));
    for (int j = 1; j <= 8; ++j)
        CHECK(radial_dtn_oracle({0.25, 0.5}, {3.0}, j) - j == doctest::Approx(j * m_x(0.5, j)).epsilon(1e-12));
    double prev = 1;
    for (double R : {0.5, 0.3, 0.1, 0.01}) {
        double d = radial_dtn_oracle({R * R, R}, {3.0}, 2) - 2;
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 1e-6);
    CHECK(radial_dtn_profile({0.25, 0.5}, {3.0}, 2, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(radial_dtn_oracle({0.5, 0.25}, {3.0}, 1), DegenerateLayers);
    CHECK_THROWS_AS(radial_dtn_oracle({0.25, 0.5}, {3.0, 1.0}, 1), DegenerateLayers);
    CHECK_THROWS_AS(radial_dtn_oracle({0.25, 1.5}, {3.0}, 1), DegenerateLayers);
    CHECK_THROWS_AS(radial_dtn_oracle({0.25, 0.5}, {-3.0}, 1), DegenerateLayers);
}

TEST_CASE("DtN distance") {
    auto gr = family_gamma_R(0.5);
    auto one = family_constant();
    std::vector<double> rho;
    for (int lev : {3, 4}) {
        DiskMesh mesh = DiskMesh::build(lev, {0.25, 0.5});
        DtNMatrix A = dtn_matrix(gr, 8, mesh), B = dtn_matrix(one, 8, mesh);
        CHECK(dtn_distance(A, A) == 0.0);
        double r = dtn_distance(A, B);
        CHECK(r > 0);
        rho.push_back(r);
        double last = 0;
        for (int n = 0; n <= 8; ++n) {
            double rn = dtn_distance(A.truncated(n), B.truncated(n));
            CHECK(rn >= last * (1 - 1e-12));
            last = rn;
        }
        CHECK_THROWS_AS(dtn_distance(A, B.truncated(4)), ShapeMismatch);
    }
    CHECK(std::abs(rho[0] / rho[1] - 1) <= 0.05);
}

TEST_CASE("DtN entries decay with the support radius") {
    auto one = family_constant();
    DiskMesh plain = DiskMesh::build(3);
    std::vector<std::pair<ConductivityModel, double>> corpus = {
        {family_gamma_R(0.5), 0.5},
        {family_radial_layers({0.1, 0.3, 0.5}, {2.0, 0.5}), 0.5},
        {family_bump(1.0, 0.5), 0.5},
        {family_holder(0.5, 3, 0.5, 0.5), 0.5},
        {family_gamma_R(0.7), 0.7}};
    double C = 0;
    for (auto& [g, r0] : corpus) {
        DiskMesh mesh = DiskMesh::build(3, g.layer_radii.empty() ? std::vector<double>{} : g.layer_radii);
        DtNMatrix D = dtn_matrix(g, 8, mesh) - dtn_matrix(one, 8, mesh);
        for (auto a : basis_indices(8))
            for (auto b : basis_indices(8)) {
                if (a.j == 0 || b.j == 0) continue;
                C = std::max(C, std::abs(D(a, b)) / (std::sqrt(a.j * b.j) * std::pow(r0, std::max(a.j, b.j))));
            }
    }
    // one constant serves the whole corpus
    CHECK(C < 10.0);

    // slope of log |entry(j,j)| against j for gamma with r0 = 0.5
    DiskMesh mesh = DiskMesh::build(3, {0.25, 0.5});
    DtNMatrix D = dtn_matrix(family_gamma_R(0.5), 8, mesh) - dtn_matrix(one, 8, mesh);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int j = 1; j <= 8; ++j) {
        double y = std::log(std::abs(D({j, 1}, {j, 1})));
        sx += j, sy += y, sxx += j * j, sxy += j * y;
    }
    double slope = (8 * sxy - sx * sy) / (8 * sxx - sx * sx);
    CHECK(slope <= std::log(0.5) + 0.1);
    (void)plain;
}

TEST_CASE("difference of DtN maps is controlled on U") {
    auto gr = family_gamma_R(0.5);
    auto one = family_constant();
    LambdaBound same = compare_lambdas_bound(gr, gr, 0.6, {1, 1}, {1, 1}, 3);
    CHECK(same.lhs == 0.0);
    CHECK_THROWS_AS(compare_lambdas_bound(gr, one, 0.4, {1, 1}, {1, 1}, 3), SupportViolation);

    double C = 0, prev_l = HUGE_VAL, prev_r = HUGE_VAL;
    for (double R : {0.7, 0.5, 0.3}) {
        LambdaBound b = compare_lambdas_bound(family_gamma_R(R), one, R + 0.05, {1, 1}, {1, 1}, 3);
        CHECK(b.lhs > 0);
        C = std::max(C, b.lhs / b.rhs);
        CHECK(b.lhs < prev_l);
        CHECK(b.rhs < prev_r);
        prev_l = b.lhs;
        prev_r = b.rhs;
    }
    CHECK(C < 10.0);
}

TEST_CASE("DtN JSON round trip and grid-sampled conductivity") {
    DiskMesh mesh = DiskMesh::build(2, {0.25, 0.5});
    DtNMatrix A = dtn_matrix(family_gamma_R(0.5), 4, mesh);
    DtNMatrix B = DtNMatrix::from_json(A.to_json());
    CHECK(B.N == 4);
    CHECK(B.pairing == std::string("area-form-c-sqrt2"));
    CHECK((A.A - B.A).norm() == 0.0);
    auto j = A.to_json();
    j["entries"].erase(0);
    CHECK_THROWS_AS(DtNMatrix::from_json(j), ShapeMismatch);

    // a smooth conductivity sampled on a grid gives nearly the same matrix
    auto bump = family_bump(0.8, 0.7);
    Grid g = Grid::make(256, 4.0);
    ConductivityModel sampled = model_from_field(sample(bump, g));
    DiskMesh m3 = DiskMesh::build(3);
    DtNMatrix X = dtn_matrix(bump, 6, m3), Y = dtn_matrix(sampled, 6, m3);
    CHECK((X.A - Y.A).norm() / X.A.norm() < 1e-3);
}
