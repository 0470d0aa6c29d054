#pragma once

#include <complex>
#include <optional>
#include <vector>

namespace clab {

using cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;
constexpr cplx kI{0.0, 1.0};

// Square [-L,L]^2 sampled with n points per axis. Node (i,j) sits at
// x = -L + i h, y = -L + j h and is stored at index i*n + j.
struct Grid {
    int n = 0;
    double L = 0.0;

    static Grid make(int n, double L);  // validates
    double h() const { return 2.0 * L / n; }
    std::size_t size() const { return std::size_t(n) * std::size_t(n); }
    cplx node(int i, int j) const { return {-L + i * h(), -L + j * h()}; }
    bool operator==(const Grid& o) const { return n == o.n && L == o.L; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

class GridField {
public:
    GridField() = default;
    explicit GridField(const Grid& g, cplx fill = 0.0) : grid_(g), v_(g.size(), fill) {}
    GridField(const Grid& g, std::vector<cplx> v);

    template <class F>
    static GridField from(const Grid& g, F&& fn) {
        GridField out(g);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) out(i, j) = fn(g.node(i, j));
        return out;
    }

    const Grid& grid() const { return grid_; }
    int n() const { return grid_.n; }
    cplx& operator()(int i, int j) { return v_[std::size_t(i) * grid_.n + j]; }
    cplx operator()(int i, int j) const { return v_[std::size_t(i) * grid_.n + j]; }
    cplx& operator[](std::size_t k) { return v_[k]; }
    cplx operator[](std::size_t k) const { return v_[k]; }
    std::vector<cplx>& values() { return v_; }
    const std::vector<cplx>& values() const { return v_; }
    cplx* data() { return v_.data(); }
    const cplx* data() const { return v_.data(); }

    GridField& operator+=(const GridField& o);
    GridField& operator-=(const GridField& o);
    GridField& operator*=(const GridField& o);
    GridField& operator*=(cplx s);
    GridField conj() const;
    bool all_finite() const;

private:
    Grid grid_;
    std::vector<cplx> v_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(GridField a, const GridField& b);
GridField operator*(cplx s, GridField a);

// Centered spectrum: entry (a,b) holds the frequency
// xi = dxi * ((a - n/2) + i (b - n/2)), dxi = pi / (2L).
struct FrequencyField {
    Grid grid;
    std::vector<cplx> values;

    double dxi() const { return kPi / (2.0 * grid.L); }
    cplx xi(int a, int b) const { return dxi() * cplx(a - grid.n / 2, b - grid.n / 2); }
    cplx& operator()(int a, int b) { return values[std::size_t(a) * grid.n + b]; }
    cplx operator()(int a, int b) const { return values[std::size_t(a) * grid.n + b]; }
};

// F(xi) = sum_z h^2 exp(2i xi.z) f(z), the Riemann sum of the continuous
// transform with kernel e^{2i Re(conj(xi) z)}. Parseval: ||f||_2 = ||F||_2 / pi.
FrequencyField fft(const GridField& f);
GridField ifft(const FrequencyField& F);
constexpr double kParsevalConstant = 1.0 / kPi;

// Periodic spectral Wirtinger derivatives. Nyquist rows/columns are dropped.
GridField dbar(const GridField& f);
GridField d(const GridField& f);

// Periodic Beurling multiplier conj(xi)/xi on the n-grid; zero bin -> 0.
GridField beurling(const GridField& f);

// f * e_k with e_k(z) = exp(2i Re(k z)).
GridField modulate(const GridField& f, cplx k);
cplx e_k(cplx k, cplx z);

struct Disk {
    cplx center = 0.0;
    double radius = 1.0;
    bool contains(cplx z) const { return std::abs(z - center) <= radius; }
};

// Riemann-sum L^p (quasi)norm, p = infinity allowed.
double lp_norm(const GridField& f, double p, std::optional<Disk> region = std::nullopt);

// Largest |f| outside the closed disk relative to the whole-field norm (L^2).
double mass_outside(const GridField& f, const Disk& disk);

}  // namespace clab
