#pragma once

#include <memory>
#include <vector>

#include "clab/grid.hpp"

namespace clab {

// Where outputs of the planar operators are wanted. Full covers the whole
// grid; Disk only the support disk, which needs a much smaller FFT box.
enum class Reach { Full, Disk };

// Cauchy and Beurling transforms on the whole plane for data supported in
// the closed unit disk. The Cauchy kernel is cut off smoothly far outside
// the region of interest and zero-padded, so there is no wraparound and the
// result is the true planar transform up to interpolation error.
class PlanarKernel {
public:
    static std::shared_ptr<const PlanarKernel> get(const Grid& g, Reach reach);

    const Grid& grid() const { return grid_; }
    Reach reach() const { return reach_; }
    int box_size() const { return np_; }
    double support_radius() const { return s_; }

    // Either output may be null. Disk reach zeroes outputs outside the disk.
    void apply(const GridField& f, GridField* C, GridField* B) const;

    // Same on a list of grid indices (all inside the support disk); outputs
    // are returned at the same indices.
    void apply_sparse(const std::vector<std::size_t>& idx, const cplx* in, cplx* outC,
                      cplx* outB) const;

    PlanarKernel(const Grid& g, Reach reach);

private:
    void transform(std::vector<cplx>& buf, std::vector<cplx>* c, std::vector<cplx>* b) const;

    Grid grid_;
    Reach reach_;
    int np_ = 0;
    int off_ = 0;  // grid index = box index + off_
    double s_ = 1.0;
    std::vector<cplx> mc_, mb_;
};

// Smooth radial cutoff data of the truncated kernel, exposed for tests.
struct KernelCutoff {
    double r_in, r_out, rc, w;
    // g(rho) = int chi'(r) J0(rho r) dr; the kernel symbol is (1+g)/((i/2) omega).
    double g(double rho) const;
    double chi(double r) const;
};
KernelCutoff kernel_cutoff(const Grid& g, Reach reach);

// g oscillates on the scale 1/rc only, so a dense table with local degree 9
// Lagrange interpolation matches the quadrature to rounding level with far
// fewer Bessel evaluations than one quadrature per distinct |m|.
class KernelCutoffTable {
public:
    explicit KernelCutoffTable(const KernelCutoff& kc);
    double operator()(double rho) const;

private:
    KernelCutoff kc_;
    double step_;
    std::vector<double> v_;
};

// Planar Cauchy transform. Throws UnsupportedSupport when the L^2 mass of f
// outside the closed unit disk exceeds support_tol relative to ||f||.
GridField cauchy(const GridField& f, double support_tol = 1e-12);
GridField planar_beurling(const GridField& f, double support_tol = 1e-12);

struct CauchyBeurling {
    GridField C, B;
};
CauchyBeurling cauchy_beurling(const GridField& f, Reach reach = Reach::Full,
                               double support_tol = 1e-12);

// The truncated kernel chi(|z|)/(pi z) sampled on the grid (0 at the origin).
GridField truncated_kernel(const Grid& g);

}  // namespace clab
