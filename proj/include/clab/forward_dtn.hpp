#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "clab/conductivity.hpp"
#include "clab/grid.hpp"

namespace clab {

// Concentric-ring triangulation of the unit disk. Rings are placed on every
// requested interface radius so piecewise constant radial data never cuts a
// triangle. Level l puts 32 * 2^l vertices on the boundary circle.
struct DiskMesh {
    int level = 0;
    std::vector<cplx> vertices;
    std::vector<std::array<int, 3>> triangles;  // counterclockwise
    std::vector<int> boundary;                  // ordered by angle, starting at 0
    std::vector<double> ring_radii;
    int num_interior = 0;  // interior vertices are 0 .. num_interior-1

    static DiskMesh build(int level, const std::vector<double>& interfaces = {});

    int max_degree() const { return int(boundary.size()) / 16; }
    double min_angle_deg() const;
    double mesh_size() const { return 2 * kPi / double(boundary.size()); }
};

// Basis on the circle: index (0,0) is 1, (j,1) is sqrt2 cos(j t), (j,-1) is
// sqrt2 sin(j t); orthonormal in L^2(dt/2pi). Harmonic extensions are
// sqrt2 Re z^j and sqrt2 Im z^j.
struct BasisIndex {
    int j = 0;
    int p = 0;
    bool operator==(const BasisIndex&) const = default;
};
std::vector<BasisIndex> basis_indices(int N);
double basis_trace(BasisIndex b, double theta);
double basis_extension(BasisIndex b, cplx z);

inline constexpr const char* kPairingTag = "area-form-c-sqrt2";

struct DtNMatrix {
    int N = 0;
    std::string pairing = kPairingTag;
    Eigen::MatrixXd A;  // (2N+1) x (2N+1) in basis_indices(N) order

    static int index(int j, int p);
    double operator()(BasisIndex a, BasisIndex b) const { return A(index(a.j, a.p), index(b.j, b.p)); }
    // eigenvalue of the mode e^{ijt} for rotation invariant data:
    // (A[(j,1),(j,1)] + A[(j,-1),(j,-1)]) / (4 pi)
    double exp_eigenvalue(int j) const;
    DtNMatrix truncated(int n) const;
    nlohmann::json to_json() const;
    static DtNMatrix from_json(const nlohmann::json& j);
};
DtNMatrix operator-(const DtNMatrix& a, const DtNMatrix& b);

struct FemSolution {
    std::shared_ptr<const DiskMesh> mesh;
    Eigen::VectorXd u;  // nodal values
    double energy = 0;  // int gamma |grad u|^2

    double value_at(cplx z) const;  // piecewise linear interpolation
};

// Piecewise-constant conductivity on the mesh, evaluated at centroids.
std::vector<double> triangle_conductivity(const DiskMesh& mesh, const ConductivityModel& m);
// Grid-sampled conductivity as a model (bilinear interpolation, 1 off the grid).
ConductivityModel model_from_field(const ConductivityField& f);

FemSolution solve_dirichlet(const ConductivityModel& gamma, BasisIndex data,
                            std::shared_ptr<const DiskMesh> mesh);
// boundary data given as coefficients in basis_indices order
FemSolution solve_dirichlet(const ConductivityModel& gamma, const std::vector<double>& coeffs,
                            std::shared_ptr<const DiskMesh> mesh);

DtNMatrix dtn_matrix(const ConductivityModel& gamma, int N, const DiskMesh& mesh);
// builds a mesh aligned with the model's layers
DtNMatrix dtn_matrix(const ConductivityModel& gamma, int N, int mesh_level);

// spectral norm of W^{-1/2} (A1 - A2) W^{-1/2}, W = diag(1 + j)
double dtn_distance(const DtNMatrix& a, const DtNMatrix& b);

// Steklov eigenvalue of a piecewise constant radial conductivity
// (gamma = values[i] on radii[i] <= r < radii[i+1], 1 elsewhere).
double radial_dtn_oracle(const std::vector<double>& radii, const std::vector<double>& values, int j);
// a(r) / a(1) for the same mode
double radial_dtn_profile(const std::vector<double>& radii, const std::vector<double>& values, int j,
                          double r);

struct LambdaBound {
    double lhs = 0;  // |<(L1 - L2) f1, f2>|
    double rhs = 0;  // ||grad u2||_{L2(U)} ||grad F||_{L2(D)}
};
// gamma1 and gamma2 must agree outside the disk |z| < u_radius; u2 solves the
// gamma2 problem with data f1 and F is the harmonic extension of f2.
LambdaBound compare_lambdas_bound(const ConductivityModel& g1, const ConductivityModel& g2, double u_radius,
                                  BasisIndex f1, BasisIndex f2, int mesh_level);

}  // namespace clab
