#include "clab/grid.hpp"

#include <cmath>
#include <functional>

#include "clab/errors.hpp"
#include "clab/fft_backend.hpp"

namespace clab {

Grid Grid::make(int n, double L) {
    if (n < 64 || (n & (n - 1)) != 0)
        throw InvalidArgument("grid n must be a power of two >= 64, got " + std::to_string(n));
    if (!(L >= 4.0)) throw InvalidArgument("grid half width L must be >= 4");
    return Grid{n, L};
}

GridField::GridField(const Grid& g, std::vector<cplx> v) : grid_(g), v_(std::move(v)) {
    if (v_.size() != g.size()) throw ShapeMismatch("value count does not match grid");
}

namespace {
void same_grid(const GridField& a, const GridField& b) {
    if (a.grid() != b.grid()) throw ShapeMismatch("fields live on different grids");
}
}  // namespace

GridField& GridField::operator+=(const GridField& o) {
    same_grid(*this, o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
    return *this;
}
GridField& GridField::operator-=(const GridField& o) {
    same_grid(*this, o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
    return *this;
}
GridField& GridField::operator*=(const GridField& o) {
    same_grid(*this, o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] *= o.v_[k];
    return *this;
}
GridField& GridField::operator*=(cplx s) {
    for (auto& x : v_) x *= s;
    return *this;
}
GridField GridField::conj() const {
    GridField out(*this);
    for (auto& x : out.v_) x = std::conj(x);
    return out;
}
bool GridField::all_finite() const {
    for (auto& x : v_)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    return true;
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(GridField a, const GridField& b) { return a *= b; }
GridField operator*(cplx s, GridField a) { return a *= s; }

FrequencyField fft(const GridField& f) {
    const Grid& g = f.grid();
    const int n = g.n;
    std::vector<cplx> buf = f.values();
    fftw::backward(buf.data(), n, n);
    FrequencyField F{g, std::vector<cplx>(g.size())};
    const double h2 = g.h() * g.h();
    for (int q = 0; q < n; ++q) {
        int mq = q < n / 2 ? q : q - n;
        for (int r = 0; r < n; ++r) {
            int mr = r < n / 2 ? r : r - n;
            double sgn = ((mq + mr) & 1) ? -1.0 : 1.0;
            F((q + n / 2) % n, (r + n / 2) % n) = h2 * sgn * buf[std::size_t(q) * n + r];
        }
    }
    return F;
}

GridField ifft(const FrequencyField& F) {
    const Grid& g = F.grid;
    const int n = g.n;
    std::vector<cplx> buf(g.size());
    const double scale = 1.0 / (g.h() * g.h() * double(n) * double(n));
    for (int q = 0; q < n; ++q) {
        int mq = q < n / 2 ? q : q - n;
        for (int r = 0; r < n; ++r) {
            int mr = r < n / 2 ? r : r - n;
            double sgn = ((mq + mr) & 1) ? -1.0 : 1.0;
            buf[std::size_t(q) * n + r] = scale * sgn * F((q + n / 2) % n, (r + n / 2) % n);
        }
    }
    fftw::forward(buf.data(), n, n);
    return GridField(g, std::move(buf));
}

namespace {

// Applies m(omega) to the periodic interpolant, omega = pi*(mx + i my)/L
// being the angular wave vector of exp(i omega . z).
GridField periodic_multiplier(const GridField& f, const std::function<cplx(cplx, bool)>& m) {
    const Grid& g = f.grid();
    const int n = g.n;
    std::vector<cplx> buf = f.values();
    fftw::forward(buf.data(), n, n);
    const double w0 = kPi / g.L;
    const double inv = 1.0 / (double(n) * double(n));
    for (int q = 0; q < n; ++q) {
        int mq = q < n / 2 ? q : q - n;
        for (int r = 0; r < n; ++r) {
            int mr = r < n / 2 ? r : r - n;
            bool nyq = (q == n / 2) || (r == n / 2);
            buf[std::size_t(q) * n + r] *= m(w0 * cplx(mq, mr), nyq) * inv;
        }
    }
    fftw::backward(buf.data(), n, n);
    return GridField(g, std::move(buf));
}

}  // namespace

GridField dbar(const GridField& f) {
    return periodic_multiplier(f, [](cplx w, bool nyq) { return nyq ? cplx(0) : 0.5 * kI * w; });
}

GridField d(const GridField& f) {
    return periodic_multiplier(f, [](cplx w, bool nyq) {
        return nyq ? cplx(0) : 0.5 * kI * std::conj(w);
    });
}

GridField beurling(const GridField& f) {
    return periodic_multiplier(f, [](cplx w, bool) {
        return std::norm(w) == 0.0 ? cplx(0) : std::conj(w) / w;
    });
}

cplx e_k(cplx k, cplx z) { return std::exp(2.0 * kI * std::real(k * z)); }

GridField modulate(const GridField& f, cplx k) {
    const Grid& g = f.grid();
    GridField out(f);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) out(i, j) *= e_k(k, g.node(i, j));
    return out;
}

double lp_norm(const GridField& f, double p, std::optional<Disk> region) {
    if (!(p > 0)) throw InvalidArgument("lp_norm needs p > 0");
    const Grid& g = f.grid();
    const double h2 = g.h() * g.h();
    const bool inf = std::isinf(p);
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (region && !region->contains(g.node(i, j))) continue;
            double a = std::abs(f(i, j));
            if (inf)
                acc = std::max(acc, a);
            else if (p == 2.0)
                acc += a * a;
            else
                acc += std::pow(a, p);
        }
    if (inf) return acc;
    return std::pow(acc * h2, 1.0 / p);
}

double mass_outside(const GridField& f, const Disk& disk) {
    const Grid& g = f.grid();
    double in = 0, out = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            double a = std::norm(f(i, j));
            (disk.contains(g.node(i, j)) ? in : out) += a;
        }
    double tot = in + out;
    return tot == 0 ? 0.0 : std::sqrt(out / tot);
}

}  // namespace clab
