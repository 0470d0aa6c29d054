#include "clab/forward_dtn.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "clab/errors.hpp"

namespace clab {

namespace {

const double kSqrt2 = std::sqrt(2.0);

double signed_area(cplx a, cplx b, cplx c) {
    return 0.5 * ((b - a).real() * (c - a).imag() - (b - a).imag() * (c - a).real());
}

// Gauss-Legendre nodes and weights on [0, 1]
std::pair<std::vector<double>, std::vector<double>> gauss01(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5)), dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = 0.5 * (1 - z);
        w[i] = 1.0 / ((1 - z * z) * dp * dp);
    }
    return {x, w};
}

// gradient of the P1 hat functions on a triangle, and its area
struct TriGeom {
    double area;
    cplx grad[3];  // gradient as x + iy
};

TriGeom tri_geom(const DiskMesh& m, const std::array<int, 3>& t) {
    cplx a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
    TriGeom g;
    double twice = ((b - a).real() * (c - a).imag() - (b - a).imag() * (c - a).real());
    g.area = 0.5 * twice;
    cplx p[3] = {a, b, c};
    for (int k = 0; k < 3; ++k) {
        cplx e = p[(k + 2) % 3] - p[(k + 1) % 3];  // edge opposite k, counterclockwise
        // grad phi_k = rot(e) / (2 area), rot(x,y) = (-y, x) points inward to k
        g.grad[k] = cplx(-e.imag(), e.real()) / twice;
    }
    return g;
}

// value and gradient (x + iy) of every basis extension at z
void basis_values(int N, cplx z, double* val, cplx* grad) {
    cplx zp = 1.0, zpm1 = 0.0;  // z^j and z^{j-1}
    val[0] = 1.0;
    grad[0] = 0.0;
    for (int j = 1; j <= N; ++j) {
        zpm1 = zp;
        zp *= z;
        cplx dz = double(j) * zpm1;  // derivative of z^j
        int c = DtNMatrix::index(j, 1), s = DtNMatrix::index(j, -1);
        val[c] = kSqrt2 * zp.real();
        val[s] = kSqrt2 * zp.imag();
        // grad Re g = (Re g', -Im g'), grad Im g = (Im g', Re g')
        grad[c] = kSqrt2 * std::conj(dz);
        grad[s] = kSqrt2 * cplx(dz.imag(), dz.real());
    }
}

double dot(cplx a, cplx b) { return a.real() * b.real() + a.imag() * b.imag(); }

struct Assembly {
    Eigen::SparseMatrix<double> Kii;  // interior block
    Eigen::SparseMatrix<double> Kib;  // interior x boundary
    std::vector<double> gamma;
};

Assembly assemble(const DiskMesh& m, const std::vector<double>& gamma) {
    const int ni = m.num_interior, nb = int(m.boundary.size());
    std::vector<Eigen::Triplet<double>> ti, tb;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tr = m.triangles[t];
        TriGeom g = tri_geom(m, tr);
        for (int a = 0; a < 3; ++a) {
            if (tr[a] >= ni) continue;
            for (int b = 0; b < 3; ++b) {
                double v = gamma[t] * g.area * dot(g.grad[a], g.grad[b]);
                if (tr[b] < ni)
                    ti.emplace_back(tr[a], tr[b], v);
                else
                    tb.emplace_back(tr[a], tr[b] - ni, v);
            }
        }
    }
    Assembly as;
    as.Kii.resize(ni, ni);
    as.Kii.setFromTriplets(ti.begin(), ti.end());
    as.Kib.resize(ni, nb);
    as.Kib.setFromTriplets(tb.begin(), tb.end());
    as.gamma = gamma;
    return as;
}

using Solver = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

Eigen::MatrixXd solve_checked(const Solver& s, const Eigen::SparseMatrix<double>& K, const Eigen::MatrixXd& rhs) {
    Eigen::MatrixXd x = s.solve(rhs);
    if (s.info() != Eigen::Success) throw SolverFailure("sparse solve failed");
    for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
        double r = (K * x.col(c) - rhs.col(c)).norm(), b = rhs.col(c).norm();
        if (b > 0 && r > 1e-10 * b) throw SolverFailure("sparse solve residual " + std::to_string(r / b));
    }
    return x;
}

void factor(Solver& s, const Eigen::SparseMatrix<double>& K) {
    s.compute(K);
    if (s.info() != Eigen::Success) throw SolverFailure("stiffness factorization failed");
}

std::vector<double> all_interfaces(const ConductivityModel& m) {
    std::vector<double> r;
    for (double x : m.layer_radii)
        if (x > 0 && x < 1) r.push_back(x);
    return r;
}

}  // namespace

// ---------------------------------------------------------------- mesh

DiskMesh DiskMesh::build(int level, const std::vector<double>& interfaces) {
    if (level < 0 || level > 7) throw InvalidArgument("mesh level must lie in [0,7]");
    DiskMesh m;
    m.level = level;
    const int nb = 32 << level;
    const double edge = 2 * kPi / nb, dr = edge * std::sqrt(3.0) / 2;

    std::vector<double> fixed = {0.0, 1.0};
    for (double r : interfaces) {
        if (!(r > 0 && r < 1)) throw InvalidArgument("mesh interfaces must lie in (0,1)");
        fixed.push_back(r);
    }
    std::sort(fixed.begin(), fixed.end());
    fixed.erase(std::unique(fixed.begin(), fixed.end(), [](double a, double b) { return b - a < 1e-12; }),
                fixed.end());
    for (std::size_t s = 0; s + 1 < fixed.size(); ++s) {
        double a = fixed[s], b = fixed[s + 1];
        int k = std::max(1, int(std::lround((b - a) / dr)));
        for (int i = 1; i <= k; ++i) m.ring_radii.push_back(i == k ? b : a + (b - a) * i / k);
    }
    const int M = int(m.ring_radii.size());
    std::vector<int> count(M), start(M);
    std::vector<double> offset(M);
    m.vertices.push_back(0.0);
    for (int i = 0; i < M; ++i) {
        double r = m.ring_radii[i];
        count[i] = i == M - 1 ? nb : std::max(6, int(std::lround(2 * kPi * r / edge)));
        offset[i] = 0.5 * ((M - 1 - i) % 2);
        start[i] = int(m.vertices.size());
        for (int k = 0; k < count[i]; ++k) m.vertices.push_back(std::polar(r, 2 * kPi * (k + offset[i]) / count[i]));
    }
    // the boundary ring is last; put exact unit vectors there
    for (int k = 0; k < nb; ++k) {
        double th = 2 * kPi * k / nb;
        m.vertices[start[M - 1] + k] = cplx(std::cos(th), std::sin(th));
        m.boundary.push_back(start[M - 1] + k);
    }
    m.num_interior = start[M - 1];

    auto add = [&](int a, int b, int c) {
        std::array<int, 3> t{a, b, c};
        cplx pa = m.vertices[a], pb = m.vertices[b], pc = m.vertices[c];
        double tw = (pb - pa).real() * (pc - pa).imag() - (pb - pa).imag() * (pc - pa).real();
        if (tw < 0) std::swap(t[1], t[2]);
        m.triangles.push_back(t);
    };
    // fan around the center
    for (int k = 0; k < count[0]; ++k) add(0, start[0] + k, start[0] + (k + 1) % count[0]);
    // zip consecutive rings by angle
    for (int i = 0; i + 1 < M; ++i) {
        int na = count[i], nbb = count[i + 1];
        auto ang_a = [&](int k) { return (k + offset[i]) / na; };
        auto ang_b = [&](int k) { return (k + offset[i + 1]) / nbb; };
        int ia = 0, ib = 0;
        while (ia < na || ib < nbb) {
            int A0 = start[i] + ia % na, B0 = start[i + 1] + ib % nbb;
            bool step_a = ib == nbb || (ia < na && ang_a(ia + 1) < ang_b(ib + 1));
            if (step_a) {
                add(A0, start[i] + (ia + 1) % na, B0);
                ++ia;
            } else {
                add(A0, start[i + 1] + (ib + 1) % nbb, B0);
                ++ib;
            }
        }
    }
    return m;
}

double DiskMesh::min_angle_deg() const {
    double worst = 180;
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            cplx a = vertices[t[k]], b = vertices[t[(k + 1) % 3]], c = vertices[t[(k + 2) % 3]];
            double ang = std::abs(std::arg((b - a) / (c - a)));
            worst = std::min(worst, ang * 180 / kPi);
        }
    }
    return worst;
}

// ---------------------------------------------------------------- basis

std::vector<BasisIndex> basis_indices(int N) {
    std::vector<BasisIndex> b{{0, 0}};
    for (int j = 1; j <= N; ++j) {
        b.push_back({j, 1});
        b.push_back({j, -1});
    }
    return b;
}

double basis_trace(BasisIndex b, double theta) {
    if (b.j == 0) return 1.0;
    return kSqrt2 * (b.p == 1 ? std::cos(b.j * theta) : std::sin(b.j * theta));
}

double basis_extension(BasisIndex b, cplx z) {
    if (b.j == 0) return 1.0;
    cplx zj = std::pow(z, b.j);
    return kSqrt2 * (b.p == 1 ? zj.real() : zj.imag());
}

int DtNMatrix::index(int j, int p) {
    if (j == 0) return 0;
    return 2 * j - 1 + (p == 1 ? 0 : 1);
}

double DtNMatrix::exp_eigenvalue(int j) const {
    if (j < 1 || j > N) throw InvalidArgument("mode outside the matrix");
    return (A(index(j, 1), index(j, 1)) + A(index(j, -1), index(j, -1))) / (4 * kPi);
}

DtNMatrix DtNMatrix::truncated(int n) const {
    if (n > N || n < 0) throw InvalidArgument("cannot truncate to a larger degree");
    DtNMatrix d = *this;
    d.N = n;
    d.A = A.topLeftCorner(2 * n + 1, 2 * n + 1);
    return d;
}

nlohmann::json DtNMatrix::to_json() const {
    nlohmann::json rows = nlohmann::json::array(), basis = nlohmann::json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        std::vector<double> r(A.cols());
        for (Eigen::Index k = 0; k < A.cols(); ++k) r[k] = A(i, k);
        rows.push_back(r);
    }
    for (auto b : basis_indices(N)) basis.push_back({b.j, b.p});
    return {{"N", N}, {"pairing", pairing}, {"basis", basis}, {"entries", rows}};
}

DtNMatrix DtNMatrix::from_json(const nlohmann::json& j) {
    DtNMatrix d;
    d.N = j.at("N").get<int>();
    d.pairing = j.at("pairing").get<std::string>();
    const auto& e = j.at("entries");
    int s = 2 * d.N + 1;
    if (int(e.size()) != s) throw ShapeMismatch("DtN entries do not match N");
    d.A.resize(s, s);
    for (int r = 0; r < s; ++r) {
        if (int(e[r].size()) != s) throw ShapeMismatch("DtN entries do not match N");
        for (int c = 0; c < s; ++c) d.A(r, c) = e[r][c].get<double>();
    }
    return d;
}

DtNMatrix operator-(const DtNMatrix& a, const DtNMatrix& b) {
    if (a.N != b.N || a.pairing != b.pairing) throw ShapeMismatch("DtN matrices differ in degree or pairing");
    DtNMatrix d = a;
    d.A = a.A - b.A;
    return d;
}

// ---------------------------------------------------------------- conductivity on the mesh

std::vector<double> triangle_conductivity(const DiskMesh& m, const ConductivityModel& g) {
    std::vector<double> out(m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tr = m.triangles[t];
        cplx c = (m.vertices[tr[0]] + m.vertices[tr[1]] + m.vertices[tr[2]]) / 3.0;
        double v = g.value(c);
        if (!(v > 0) || !std::isfinite(v)) throw EllipticityViolation("conductivity must be positive on the mesh");
        out[t] = v;
    }
    return out;
}

ConductivityModel model_from_field(const ConductivityField& f) {
    ConductivityModel m;
    m.name = "grid";
    m.params = {{"n", f.gamma.grid().n}, {"L", f.gamma.grid().L}};
    m.r0 = f.support_radius;
    m.K = f.profile.K;
    GridField g = f.gamma;
    m.value = [g](cplx z) {
        const Grid& gr = g.grid();
        double x = (z.real() + gr.L) / gr.h(), y = (z.imag() + gr.L) / gr.h();
        int i = int(std::floor(x)), j = int(std::floor(y));
        if (i < 0 || j < 0 || i + 1 >= gr.n || j + 1 >= gr.n) return 1.0;
        double a = x - i, b = y - j;
        return (1 - a) * (1 - b) * g(i, j).real() + a * (1 - b) * g(i + 1, j).real() +
               (1 - a) * b * g(i, j + 1).real() + a * b * g(i + 1, j + 1).real();
    };
    return m;
}

// ---------------------------------------------------------------- Dirichlet problem

double FemSolution::value_at(cplx z) const {
    const DiskMesh& m = *mesh;
    for (const auto& t : m.triangles) {
        cplx a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
        double A = signed_area(a, b, c);
        double l0 = signed_area(z, b, c) / A, l1 = signed_area(a, z, c) / A, l2 = 1 - l0 - l1;
        if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) return l0 * u[t[0]] + l1 * u[t[1]] + l2 * u[t[2]];
    }
    throw InvalidArgument("point outside the mesh");
}

FemSolution solve_dirichlet(const ConductivityModel& gamma, const std::vector<double>& coeffs,
                            std::shared_ptr<const DiskMesh> mesh) {
    const DiskMesh& m = *mesh;
    const int ni = m.num_interior, nb = int(m.boundary.size());
    int N = (int(coeffs.size()) - 1) / 2;
    if (int(coeffs.size()) != 2 * N + 1) throw ShapeMismatch("boundary coefficients need 2N+1 entries");
    if (N > m.max_degree()) throw DegreeTooHigh("boundary data degree exceeds the mesh resolution");
    auto basis = basis_indices(N);
    Eigen::VectorXd fb(nb);
    for (int k = 0; k < nb; ++k) {
        double th = std::arg(m.vertices[m.boundary[k]]);
        double v = 0;
        for (std::size_t q = 0; q < basis.size(); ++q) v += coeffs[q] * basis_trace(basis[q], th);
        fb[k] = v;
    }
    Assembly as = assemble(m, triangle_conductivity(m, gamma));
    Solver s;
    factor(s, as.Kii);
    Eigen::MatrixXd rhs = -(as.Kib * fb);
    Eigen::VectorXd ui = solve_checked(s, as.Kii, rhs);
    FemSolution sol;
    sol.mesh = mesh;
    sol.u.resize(ni + nb);
    sol.u.head(ni) = ui;
    sol.u.tail(nb) = fb;
    double e = 0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        TriGeom g = tri_geom(m, m.triangles[t]);
        cplx grad = 0;
        for (int a = 0; a < 3; ++a) grad += sol.u[m.triangles[t][a]] * g.grad[a];
        e += as.gamma[t] * g.area * std::norm(grad);
    }
    sol.energy = e;
    return sol;
}

FemSolution solve_dirichlet(const ConductivityModel& gamma, BasisIndex data, std::shared_ptr<const DiskMesh> mesh) {
    std::vector<double> c(2 * data.j + 1, 0.0);
    c[DtNMatrix::index(data.j, data.p)] = 1.0;
    return solve_dirichlet(gamma, c, std::move(mesh));
}

// ---------------------------------------------------------------- DtN matrix

// <L f_q, f_r> = min over v in V0 of int gamma grad(P_q + v) . grad(P_r + v):
// with E = int gamma grad P_q . grad P_r and b_{i,q} = int gamma grad phi_i . grad P_q,
// the entry is E - b^T K^{-1} b. Integrals of grad P over a triangle are done
// on its edges (Green), exact for the polynomial extensions.
DtNMatrix dtn_matrix(const ConductivityModel& gamma, int N, const DiskMesh& m) {
    if (N < 0) throw InvalidArgument("degree must be nonnegative");
    if (N > m.max_degree()) throw DegreeTooHigh("degree " + std::to_string(N) + " exceeds mesh limit " +
                                                std::to_string(m.max_degree()));
    const int S = 2 * N + 1, ni = m.num_interior;
    std::vector<double> gam = triangle_conductivity(m, gamma);
    Assembly as = assemble(m, gam);

    auto [gx, gw] = gauss01(N + 2);
    const int npt = int(gx.size());
    std::vector<double> val(S);
    std::vector<cplx> grad(S);

    // E via sum over triangles of gamma_T * int_{dT} P_q dP_r/dn, accumulated
    // as a dense product in chunks of quadrature points
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(S, S);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(ni, S);
    const int chunk = 4096;
    Eigen::MatrixXd Pv(chunk, S), Dn(chunk, S);
    int fill = 0;
    auto flush = [&] {
        if (fill == 0) return;
        E.noalias() += Pv.topRows(fill).transpose() * Dn.topRows(fill);
        fill = 0;
    };
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tr = m.triangles[t];
        TriGeom g = tri_geom(m, tr);
        std::vector<cplx> gP(S, 0.0);  // int_T grad P_q
        for (int e = 0; e < 3; ++e) {
            cplx a = m.vertices[tr[e]], c = m.vertices[tr[(e + 1) % 3]];
            cplx d = c - a;
            cplx nrm = cplx(d.imag(), -d.real());  // outward normal times |edge| (ccw)
            for (int q = 0; q < npt; ++q) {
                basis_values(N, a + gx[q] * d, val.data(), grad.data());
                for (int s = 0; s < S; ++s) {
                    gP[s] += gw[q] * val[s] * nrm;
                    Pv(fill, s) = gam[t] * gw[q] * val[s];
                    Dn(fill, s) = dot(grad[s], nrm);
                }
                if (++fill == chunk) flush();
            }
        }
        for (int k = 0; k < 3; ++k) {
            if (tr[k] >= ni) continue;
            for (int s = 0; s < S; ++s) b(tr[k], s) += gam[t] * dot(g.grad[k], gP[s]);
        }
    }
    flush();

    Solver solver;
    factor(solver, as.Kii);
    Eigen::MatrixXd w = solve_checked(solver, as.Kii, b);
    DtNMatrix out;
    out.N = N;
    out.A = E - b.transpose() * w;
    return out;
}

DtNMatrix dtn_matrix(const ConductivityModel& gamma, int N, int mesh_level) {
    DiskMesh m = DiskMesh::build(mesh_level, all_interfaces(gamma));
    return dtn_matrix(gamma, N, m);
}

double dtn_distance(const DtNMatrix& a, const DtNMatrix& b) {
    DtNMatrix d = a - b;
    const int S = 2 * d.N + 1;
    Eigen::VectorXd w(S);
    for (auto bi : basis_indices(d.N)) w[DtNMatrix::index(bi.j, bi.p)] = 1.0 / std::sqrt(1.0 + bi.j);
    Eigen::MatrixXd M = w.asDiagonal() * d.A * w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- radial oracle

namespace {
struct Layer {
    double r_in, r_out, gamma;
};

std::vector<Layer> radial_layers(const std::vector<double>& radii, const std::vector<double>& values) {
    if (radii.size() != values.size() + 1 || values.empty())
        throw DegenerateLayers("need one more radius than layer values");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] < radii[i + 1])) throw DegenerateLayers("layer radii must increase strictly");
    if (!(radii.front() >= 0) || !(radii.back() < 1)) throw DegenerateLayers("layers must lie inside the disk");
    for (double v : values)
        if (!(v > 0) || !std::isfinite(v)) throw DegenerateLayers("layer values must be positive");
    std::vector<Layer> L;
    if (radii.front() > 0) L.push_back({0.0, radii.front(), 1.0});
    for (std::size_t i = 0; i < values.size(); ++i) L.push_back({radii[i], radii[i + 1], values[i]});
    L.push_back({radii.back(), 1.0, 1.0});
    return L;
}

// coefficients (alpha, beta) of a = alpha r^j + beta r^{-j} in every layer
std::vector<std::pair<double, double>> transfer(const std::vector<Layer>& L, int j) {
    std::vector<std::pair<double, double>> c(L.size());
    c[0] = {1.0, 0.0};
    for (std::size_t i = 1; i < L.size(); ++i) {
        double r = L[i].r_in;
        auto [al, be] = c[i - 1];
        double A = al * std::pow(r, j) + be * std::pow(r, -j);
        double dA = j * (al * std::pow(r, j - 1) - be * std::pow(r, -j - 1));
        double q = r * L[i - 1].gamma * dA / (L[i].gamma * j);
        c[i] = {(A + q) / (2 * std::pow(r, j)), (A - q) * std::pow(r, j) / 2};
    }
    return c;
}
}  // namespace

double radial_dtn_oracle(const std::vector<double>& radii, const std::vector<double>& values, int j) {
    auto L = radial_layers(radii, values);
    if (j < 0) throw InvalidArgument("mode must be nonnegative");
    if (j == 0) return 0.0;
    auto [al, be] = transfer(L, j).back();
    return j * (al - be) / (al + be);
}

double radial_dtn_profile(const std::vector<double>& radii, const std::vector<double>& values, int j, double r) {
    auto L = radial_layers(radii, values);
    if (!(r >= 0 && r <= 1)) throw InvalidArgument("radius outside the disk");
    if (j == 0) return 1.0;
    auto c = transfer(L, j);
    std::size_t i = 0;
    while (i + 1 < L.size() && r >= L[i].r_out) ++i;
    auto a = [&](std::size_t k, double x) {
        return x == 0 ? (k == 0 ? 0.0 : HUGE_VAL) : c[k].first * std::pow(x, j) + c[k].second * std::pow(x, -j);
    };
    return a(i, r) / a(L.size() - 1, 1.0);
}

// ---------------------------------------------------------------- local comparison bound

LambdaBound compare_lambdas_bound(const ConductivityModel& g1, const ConductivityModel& g2, double u_radius,
                                  BasisIndex f1, BasisIndex f2, int mesh_level) {
    std::vector<double> iface = all_interfaces(g1), i2 = all_interfaces(g2);
    iface.insert(iface.end(), i2.begin(), i2.end());
    if (u_radius > 0 && u_radius < 1) iface.push_back(u_radius);
    auto mesh = std::make_shared<const DiskMesh>(DiskMesh::build(mesh_level, iface));
    const DiskMesh& m = *mesh;
    std::vector<double> a = triangle_conductivity(m, g1), b = triangle_conductivity(m, g2);
    auto centroid = [&](std::size_t t) {
        const auto& tr = m.triangles[t];
        return (m.vertices[tr[0]] + m.vertices[tr[1]] + m.vertices[tr[2]]) / 3.0;
    };
    for (std::size_t t = 0; t < a.size(); ++t)
        if (std::abs(centroid(t)) >= u_radius && std::abs(a[t] - b[t]) > 1e-14 * std::max(a[t], b[t]))
            throw SupportViolation("conductivities differ outside U");
    int N = std::max(f1.j, f2.j);
    DtNMatrix L1 = dtn_matrix(g1, N, m), L2 = dtn_matrix(g2, N, m);
    LambdaBound r;
    r.lhs = std::abs((L1 - L2)(f1, f2));
    FemSolution u2 = solve_dirichlet(g2, f1, mesh);
    double eu = 0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        if (std::abs(centroid(t)) >= u_radius) continue;
        TriGeom g = tri_geom(m, m.triangles[t]);
        cplx grad = 0;
        for (int k = 0; k < 3; ++k) grad += u2.u[m.triangles[t][k]] * g.grad[k];
        eu += g.area * std::norm(grad);
    }
    // int_D |grad sqrt2 Re z^j|^2 = 2 pi j
    double eF = f2.j == 0 ? 0.0 : 2 * kPi * f2.j;
    r.rhs = std::sqrt(eu) * std::sqrt(eF);
    return r;
}

}  // namespace clab
