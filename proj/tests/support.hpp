#pragma once

#include <cmath>
#include <random>

#include "clab/grid.hpp"

namespace testsupport {

using clab::cplx;

// C-infinity bump supported in the disk of radius rho, equal to 1 at 0.
inline double bump(cplx z, double rho = 1.0) {
    double t = std::norm(z) / (rho * rho);
    return t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t)) : 0.0;
}

inline clab::GridField smooth_disk_field(const clab::Grid& g) {
    return clab::GridField::from(g, [](cplx z) {
        return bump(z, 0.95) * (1.0 + 0.3 * z.real() + cplx(0, 0.2) * z.imag() * z.imag());
    });
}

inline clab::GridField random_field(const clab::Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    clab::GridField f(g);
    for (auto& v : f.values()) v = cplx(N(rng), N(rng));
    return f;
}

inline double max_abs_diff(const clab::GridField& a, const clab::GridField& b, double radius = 1e300) {
    double m = 0;
    const auto& g = a.grid();
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (std::abs(g.node(i, j)) <= radius) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

inline double max_abs(const clab::GridField& a, double radius = 1e300) {
    return max_abs_diff(a, clab::GridField(a.grid()), radius);
}

// value at the node nearest to z
inline cplx at(const clab::GridField& f, cplx z) {
    const auto& g = f.grid();
    int i = int(std::lround((z.real() + g.L) / g.h()));
    int j = int(std::lround((z.imag() + g.L) / g.h()));
    return f(i, j);
}

}  // namespace testsupport
