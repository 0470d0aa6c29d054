#include "clab/fft_backend.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace clab::fftw {
namespace {

std::mutex g_mu;
std::map<std::tuple<int, int, int>, fftw_plan> g_plans;

fftw_plan plan_for(int n0, int n1, int sign) {
    std::lock_guard<std::mutex> lock(g_mu);
    auto key = std::make_tuple(n0, n1, sign);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;
    // planning may scribble on the buffer, so use a scratch one
    std::vector<std::complex<double>> scratch(std::size_t(n0) * n1);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(n0, n1, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    g_plans.emplace(key, plan);
    return plan;
}

void run(std::complex<double>* data, int n0, int n1, int sign) {
    fftw_plan plan = plan_for(n0, n1, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, p, p);
}

}  // namespace

void forward(std::complex<double>* data, int n0, int n1) { run(data, n0, n1, FFTW_FORWARD); }
void backward(std::complex<double>* data, int n0, int n1) { run(data, n0, n1, FFTW_BACKWARD); }

int smooth_size(int n) {
    for (int m = n + (n & 1);; m += 2) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace clab::fftw
