#pragma once

#include <complex>

namespace clab::fftw {

// In-place 2D transforms on an n0 x n1 row-major buffer. Plans are cached
// per shape and shared between threads; execution uses the new-array API.
// forward: sum f exp(-i ...); backward: sum F exp(+i ...). Unnormalized.
void forward(std::complex<double>* data, int n0, int n1);
void backward(std::complex<double>* data, int n0, int n1);

// Smallest m >= n with m even and m = 2^a 3^b 5^c 7^d.
int smooth_size(int n);

}  // namespace clab::fftw
