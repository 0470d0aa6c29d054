#include "clab/planar.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "clab/errors.hpp"
#include "clab/fft_backend.hpp"

namespace clab {
namespace {

constexpr double kGap = 1.5;
constexpr int kTrap = 120;

double support_slack(const Grid& g) { return 1.0 + g.h(); }

}  // namespace

KernelCutoffTable::KernelCutoffTable(const KernelCutoff& kc) : kc_(kc), step_(2 * kPi / kc.rc / 48) {
    int m = int(13.0 / kc.w / step_) + 12;
    v_.resize(m);
    for (int i = 0; i < m; ++i) v_[i] = kc.g(i * step_);
}

double KernelCutoffTable::operator()(double rho) const {
    if (rho * kc_.w >= 13.0) return 0.0;
    double x = rho / step_;
    int i0 = int(std::floor(x)) - 4;
    double acc = 0;
    for (int a = 0; a < 10; ++a) {
        double l = 1;
        for (int b = 0; b < 10; ++b)
            if (b != a) l *= (x - (i0 + b)) / double(a - b);
        acc += l * v_[std::abs(i0 + a)];  // g is even
    }
    return acc;
}

double KernelCutoff::chi(double r) const { return 0.5 * std::erfc((r - rc) / w); }

double KernelCutoff::g(double rho) const {
    if (rho * w >= 13.0) return 0.0;  // Gaussian-smoothed J0 average is below 1e-16 here
    // chi' is a Gaussian in t = (r - rc)/w; the trapezoidal rule on
    // [-7.5, 7.5] is spectrally accurate for it
    const double a = -7.5, dt = 15.0 / (kTrap - 1);
    double acc = 0.0;
    for (int i = 0; i < kTrap; ++i) {
        double t = a + i * dt;
        double wt = (i == 0 || i == kTrap - 1) ? 0.5 : 1.0;
        acc += wt * std::exp(-t * t) * std::cyl_bessel_j(0.0, rho * (rc + w * t));
    }
    return -acc * dt / std::sqrt(kPi);
}

KernelCutoff kernel_cutoff(const Grid& g, Reach reach) {
    const double s = support_slack(g);
    double r_in = reach == Reach::Full ? g.L * std::sqrt(2.0) + s : 2.0 * s;
    double r_out = r_in + kGap;
    return {r_in, r_out, 0.5 * (r_in + r_out), kGap / 14.4};
}

PlanarKernel::PlanarKernel(const Grid& g, Reach reach) : grid_(g), reach_(reach) {
    const double h = g.h();
    s_ = support_slack(g);
    KernelCutoff kc = kernel_cutoff(g, reach);
    // period must keep every periodic copy of the kernel away from the
    // differences z - w that are actually evaluated
    double pmin = reach == Reach::Full ? g.L + s_ + kc.r_out + h : 2.0 * s_ + kc.r_out + h;
    np_ = fftw::smooth_size(int(std::ceil(pmin / h)));
    if (reach == Reach::Disk && np_ > g.n) np_ = g.n;
    off_ = (g.n - np_) / 2;

    const double dw = 2.0 * kPi / (np_ * h);
    // symbol depends on |m|^2 only; tabulate g on the distinct values
    int mmax = np_ / 2;
    KernelCutoffTable table(kc);
    std::vector<double> gtab(std::size_t(2 * mmax * mmax) + 1, std::nan(""));
    auto gval = [&](int mq, int mr) {
        std::size_t key = std::size_t(mq * mq + mr * mr);
        if (std::isnan(gtab[key])) gtab[key] = table(dw * std::sqrt(double(key)));
        return gtab[key];
    };
    const double inv = 1.0 / (double(np_) * double(np_));
    mc_.assign(std::size_t(np_) * np_, 0.0);
    mb_.assign(std::size_t(np_) * np_, 0.0);
    for (int q = 0; q < np_; ++q) {
        int mq = q < np_ / 2 ? q : q - np_;
        for (int r = 0; r < np_; ++r) {
            int mr = r < np_ / 2 ? r : r - np_;
            if (mq == 0 && mr == 0) continue;
            cplx w = dw * cplx(mq, mr);
            double one_g = 1.0 + gval(std::abs(mq), std::abs(mr));
            std::size_t k = std::size_t(q) * np_ + r;
            mc_[k] = inv * one_g / (0.5 * kI * w);
            mb_[k] = inv * one_g * std::conj(w) / w;
        }
    }
}

std::shared_ptr<const PlanarKernel> PlanarKernel::get(const Grid& g, Reach reach) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, int>, std::shared_ptr<const PlanarKernel>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(g.n, g.L, int(reach));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto k = std::make_shared<const PlanarKernel>(g, reach);
    cache.emplace(key, k);
    return k;
}

void PlanarKernel::transform(std::vector<cplx>& buf, std::vector<cplx>* c,
                             std::vector<cplx>* b) const {
    fftw::forward(buf.data(), np_, np_);
    if (c && b) {
        *b = buf;
        for (std::size_t k = 0; k < buf.size(); ++k) (*b)[k] *= mb_[k];
        fftw::backward(b->data(), np_, np_);
    }
    std::vector<cplx>& out = c ? *c : *b;
    if (c) {
        out.swap(buf);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] *= mc_[k];
    } else {
        out.swap(buf);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] *= mb_[k];
    }
    fftw::backward(out.data(), np_, np_);
}

void PlanarKernel::apply(const GridField& f, GridField* C, GridField* B) const {
    if (f.grid() != grid_) throw ShapeMismatch("kernel built for another grid");
    if (!C && !B) return;
    const int n = grid_.n;
    std::vector<cplx> buf(std::size_t(np_) * np_, 0.0);
    for (int e = 0; e < np_; ++e) {
        int i = e + off_;
        if (i < 0 || i >= n) continue;
        for (int q = 0; q < np_; ++q) {
            int j = q + off_;
            if (j < 0 || j >= n) continue;
            buf[std::size_t(e) * np_ + q] = f(i, j);
        }
    }
    std::vector<cplx> bc, bb;
    transform(buf, C ? &bc : nullptr, B ? &bb : nullptr);
    auto extract = [&](const std::vector<cplx>& src, GridField* dst) {
        if (!dst) return;
        *dst = GridField(grid_);
        for (int i = 0; i < n; ++i) {
            int e = i - off_;
            if (e < 0 || e >= np_) continue;
            for (int j = 0; j < n; ++j) {
                int q = j - off_;
                if (q < 0 || q >= np_) continue;
                if (reach_ == Reach::Disk && std::abs(grid_.node(i, j)) > s_) continue;
                (*dst)(i, j) = src[std::size_t(e) * np_ + q];
            }
        }
    };
    extract(bc, C);
    extract(bb, B);
}

void PlanarKernel::apply_sparse(const std::vector<std::size_t>& idx, const cplx* in, cplx* outC,
                                cplx* outB) const {
    const std::size_t n = std::size_t(grid_.n);
    std::vector<cplx> buf(std::size_t(np_) * np_, 0.0);
    auto box = [&](std::size_t k) {
        std::size_t i = k / n, j = k % n;
        return (i - off_) * std::size_t(np_) + (j - off_);
    };
    for (std::size_t t = 0; t < idx.size(); ++t) buf[box(idx[t])] = in[t];
    std::vector<cplx> bc, bb;
    transform(buf, outC ? &bc : nullptr, outB ? &bb : nullptr);
    for (std::size_t t = 0; t < idx.size(); ++t) {
        std::size_t k = box(idx[t]);
        if (outC) outC[t] = bc[k];
        if (outB) outB[t] = bb[k];
    }
}

namespace {
void check_support(const GridField& f, double tol) {
    double out = mass_outside(f, Disk{0.0, 1.0 + 1e-9});
    if (out > tol)
        throw UnsupportedSupport("field has relative mass " + std::to_string(out) +
                                 " outside the closed unit disk");
}
}  // namespace

CauchyBeurling cauchy_beurling(const GridField& f, Reach reach, double support_tol) {
    check_support(f, support_tol);
    CauchyBeurling out;
    PlanarKernel::get(f.grid(), reach)->apply(f, &out.C, &out.B);
    return out;
}

GridField cauchy(const GridField& f, double support_tol) {
    check_support(f, support_tol);
    GridField C;
    PlanarKernel::get(f.grid(), Reach::Full)->apply(f, &C, nullptr);
    return C;
}

GridField planar_beurling(const GridField& f, double support_tol) {
    check_support(f, support_tol);
    GridField B;
    PlanarKernel::get(f.grid(), Reach::Full)->apply(f, nullptr, &B);
    return B;
}

GridField truncated_kernel(const Grid& g) {
    KernelCutoff kc = kernel_cutoff(g, Reach::Full);
    return GridField::from(g, [&](cplx z) {
        double r = std::abs(z);
        return r == 0.0 ? cplx(0) : kc.chi(r) / (kPi * z);
    });
}

}  // namespace clab
