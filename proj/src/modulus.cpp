#include "clab/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "clab/errors.hpp"
#include "clab/fft_backend.hpp"

namespace clab {
namespace {

struct Shift {
    int a, b;
    double r;
};

// |f(x) - f(x-y)|^p summed over the only region where it can be nonzero.
class Differ {
public:
    explicit Differ(const GridField& f) : f_(f), n_(f.n()) {
        bg_ = f(0, 0);
        i0_ = j0_ = n_;
        i1_ = j1_ = -1;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (f(i, j) != bg_) {
                    i0_ = std::min(i0_, i);
                    i1_ = std::max(i1_, i);
                    j0_ = std::min(j0_, j);
                    j1_ = std::max(j1_, j);
                }
    }
    bool empty() const { return i1_ < 0; }

    double norm(int a, int b, double p, double h2) const {
        if (empty()) return 0.0;
        int ilo = std::min(i0_, i0_ + a), ihi = std::max(i1_, i1_ + a);
        int jlo = std::min(j0_, j0_ + b), jhi = std::max(j1_, j1_ + b);
        if (ihi - ilo >= n_) ihi = ilo + n_ - 1;
        if (jhi - jlo >= n_) jhi = jlo + n_ - 1;
        const bool inf = std::isinf(p);
        double acc = 0.0;
        for (int ii = ilo; ii <= ihi; ++ii) {
            int i = ((ii % n_) + n_) % n_;
            int is = (((ii - a) % n_) + n_) % n_;
            for (int jj = jlo; jj <= jhi; ++jj) {
                int j = ((jj % n_) + n_) % n_;
                int js = (((jj - b) % n_) + n_) % n_;
                double v = std::abs(f_(i, j) - f_(is, js));
                if (inf)
                    acc = std::max(acc, v);
                else if (p == 2.0)
                    acc += v * v;
                else if (p == 1.0)
                    acc += v;
                else
                    acc += std::pow(v, p);
            }
        }
        return inf ? acc : std::pow(acc * h2, 1.0 / p);
    }

private:
    const GridField& f_;
    int n_;
    cplx bg_;
    int i0_, i1_, j0_, j1_;
};

std::vector<Shift> shift_set(const Grid& g, double t) {
    const double h = g.h();
    std::set<std::pair<int, int>> seen;
    std::vector<Shift> out;
    auto add = [&](int a, int b) {
        if (a == 0 && b == 0) return;
        double r = h * std::hypot(a, b);
        if (r > t * (1 + 1e-12)) return;
        if (seen.insert({a, b}).second) out.push_back({a, b, r});
    };
    for (int a = -6; a <= 6; ++a)
        for (int b = -6; b <= 6; ++b)
            if (a * a + b * b <= 36) add(a, b);
    for (double rho = 6 * h * 1.25; rho <= t * (1 + 1e-12); rho *= 1.25)
        for (int k = 0; k < 48; ++k) {
            double th = 2 * kPi * k / 48;
            add(int(std::lround(rho * std::cos(th) / h)), int(std::lround(rho * std::sin(th) / h)));
        }
    std::sort(out.begin(), out.end(), [](const Shift& x, const Shift& y) {
        return std::tie(x.r, x.a, x.b) < std::tie(y.r, y.a, y.b);
    });
    return out;
}

// ||f - f(.-y)||_2^2 for every lattice shift y, from the autocorrelation.
std::vector<double> all_shift_sq(const GridField& f) {
    const int n = f.n();
    const double h2 = f.grid().h() * f.grid().h();
    // subtract the background so the sums stay well conditioned
    cplx bg = f(0, 0);
    std::vector<cplx> buf(f.values());
    double e = 0;
    for (auto& v : buf) {
        v -= bg;
        e += std::norm(v);
    }
    fftw::forward(buf.data(), n, n);
    for (auto& v : buf) v = std::norm(v) / (double(n) * double(n));
    fftw::backward(buf.data(), n, n);
    std::vector<double> out(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) out[k] = std::max(0.0, 2.0 * h2 * (e - buf[k].real()));
    return out;
}

struct ShiftTable {
    std::vector<Shift> shifts;
    std::vector<double> values;  // the p-norm for each shift
};

ShiftTable shift_table(const GridField& f, double p, double t) {
    const Grid& g = f.grid();
    ShiftTable tab;
    if (p == 2.0) {
        std::vector<double> sq = all_shift_sq(f);
        const int n = g.n;
        int rmax = std::min(n / 2 - 1, int(std::floor(t / g.h() + 1e-9)));
        for (int a = -rmax; a <= rmax; ++a)
            for (int b = -rmax; b <= rmax; ++b) {
                if (a == 0 && b == 0) continue;
                double r = g.h() * std::hypot(a, b);
                if (r > t * (1 + 1e-12)) continue;
                tab.shifts.push_back({a, b, r});
                tab.values.push_back(std::sqrt(sq[std::size_t((a + n) % n) * n + (b + n) % n]));
            }
    } else {
        Differ df(f);
        const double h2 = g.h() * g.h();
        tab.shifts = shift_set(g, t);
        for (const Shift& s : tab.shifts) tab.values.push_back(df.norm(s.a, s.b, p, h2));
    }
    return tab;
}

double max_within(const ShiftTable& tab, double t) {
    double m = 0.0;
    for (std::size_t k = 0; k < tab.shifts.size(); ++k)
        if (tab.shifts[k].r <= t * (1 + 1e-12)) m = std::max(m, tab.values[k]);
    return m;
}

void check_t(const Grid& g, double t) {
    if (t < g.h() * (1 - 1e-12))
        throw TooFine("t = " + std::to_string(t) + " is below the grid spacing");
}

}  // namespace

std::string ModulusCurve::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "t,value\n";
    for (auto& s : samples) os << s.t << ',' << s.value << '\n';
    return os.str();
}

ModulusSpec ModulusSpec::power(double c, double s) {
    ModulusSpec m;
    m.kind = Kind::Power;
    m.c = c;
    m.s = s;
    return m;
}
ModulusSpec ModulusSpec::log_power(double c, double alpha) {
    ModulusSpec m;
    m.kind = Kind::LogPower;
    m.c = c;
    m.alpha = alpha;
    return m;
}
ModulusSpec ModulusSpec::tabulated(std::vector<std::pair<double, double>> table) {
    if (table.empty()) throw InvalidArgument("empty modulus table");
    std::sort(table.begin(), table.end());
    ModulusSpec m;
    m.kind = Kind::Tabulated;
    m.table = std::move(table);
    return m;
}

double ModulusSpec::operator()(double t) const {
    switch (kind) {
        case Kind::Power:
            return c * std::pow(t, s);
        case Kind::LogPower:
            return c / std::pow(std::log(std::exp(1.0) + 1.0 / t), alpha);
        case Kind::Tabulated: {
            if (t <= table.front().first) return table.front().second * t / table.front().first;
            if (t >= table.back().first) return table.back().second;
            auto it = std::upper_bound(table.begin(), table.end(), std::make_pair(t, -HUGE_VAL));
            auto lo = *(it - 1), hi = *it;
            double u = (t - lo.first) / (hi.first - lo.first);
            return lo.second + u * (hi.second - lo.second);
        }
    }
    return 0.0;
}

nlohmann::json ModulusSpec::to_json() const {
    switch (kind) {
        case Kind::Power:
            return {{"kind", "power"}, {"params", {{"c", c}, {"s", s}}}};
        case Kind::LogPower:
            return {{"kind", "log_power"}, {"params", {{"c", c}, {"alpha", alpha}}}};
        case Kind::Tabulated: {
            nlohmann::json rows = nlohmann::json::array();
            for (auto& [t, v] : table) rows.push_back({t, v});
            return {{"kind", "tabulated"}, {"params", {{"table", rows}}}};
        }
    }
    return {};
}

ModulusSpec ModulusSpec::from_json(const nlohmann::json& j) {
    std::string k = j.at("kind").get<std::string>();
    const auto& p = j.at("params");
    if (k == "power") return power(p.value("c", 1.0), p.at("s").get<double>());
    if (k == "log_power") return log_power(p.value("c", 1.0), p.at("alpha").get<double>());
    if (k == "tabulated") {
        std::vector<std::pair<double, double>> t;
        for (auto& row : p.at("table")) t.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        return tabulated(std::move(t));
    }
    throw InvalidArgument("unknown modulus kind " + k);
}

std::vector<double> dyadic_ladder(const Grid& g, double t_max) {
    std::vector<double> t;
    for (double x = 2 * g.h(); x <= t_max * (1 + 1e-12); x *= 2) t.push_back(x);
    return t;
}

double omega_p(const GridField& f, double p, double t) {
    check_t(f.grid(), t);
    if (!(p > 0)) throw InvalidArgument("omega_p needs p > 0");
    return max_within(shift_table(f, p, t), t);
}

ModulusCurve modulus_curve(const GridField& f, double p, double t_max) {
    if (!(p > 0)) throw InvalidArgument("modulus_curve needs p > 0");
    ModulusCurve c;
    c.p = p;
    std::vector<double> ts = dyadic_ladder(f.grid(), t_max);
    if (ts.empty()) return c;
    ShiftTable tab = shift_table(f, p, ts.back());
    for (double t : ts) c.samples.push_back({t, max_within(tab, t)});
    return c;
}

double besov_seminorm(const GridField& f, double p, const ModulusSpec& omega) {
    ModulusCurve c = modulus_curve(f, p);
    double m = 0.0;
    for (auto& s : c.samples) {
        double w = omega(s.t);
        if (!(w > 0)) throw InvalidArgument("reference modulus must be positive on the ladder");
        m = std::max(m, s.value / w);
    }
    return m;
}

namespace {
void modulus_part(const GridField& f, double p, const ModulusSpec& omega, MembershipReport& r) {
    ModulusCurve c = modulus_curve(f, p);
    for (auto& s : c.samples) {
        double w = omega(s.t);
        if (s.value > w * (1 + 1e-12)) {
            r.modulus_ok = false;
            r.first_violation_t = s.t;
            r.observed = s.value;
            r.bound = w;
            std::ostringstream os;
            os << "omega_" << p << " = " << s.value << " exceeds " << w << " at t = " << s.t << "; ";
            r.detail += os.str();
            return;
        }
    }
}
}  // namespace

MembershipReport check_membership_gamma(const GridField& gamma, double K, double r0, double p,
                                        const ModulusSpec& omega) {
    MembershipReport r;
    const Grid& g = gamma.grid();
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx v = gamma(i, j);
            if (std::abs(v.imag()) > 0 || v.real() > K * (1 + 1e-14) || v.real() * K < 1 - 1e-14)
                r.ellipticity_ok = false;
            if (std::abs(g.node(i, j)) > r0 * (1 + 1e-12) && std::abs(v - 1.0) > 1e-12) r.support_ok = false;
        }
    if (!r.ellipticity_ok) r.detail += "gamma leaves [1/K, K]; ";
    if (!r.support_ok) r.detail += "gamma differs from 1 outside r0 D; ";
    modulus_part(gamma, p, omega, r);
    r.member = r.ellipticity_ok && r.support_ok && r.modulus_ok;
    return r;
}

MembershipReport check_membership_mu(const GridField& mu, double kappa, double p,
                                     const ModulusSpec& omega) {
    MembershipReport r;
    const Grid& g = mu.grid();
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            cplx v = mu(i, j);
            if (std::abs(v.imag()) > 0 || std::abs(v) > kappa * (1 + 1e-14)) r.ellipticity_ok = false;
            if (std::abs(g.node(i, j)) > 1.0 + 1e-12 && v != 0.0) r.support_ok = false;
        }
    if (!r.ellipticity_ok) r.detail += "mu is not real or exceeds kappa; ";
    if (!r.support_ok) r.detail += "mu not supported in the closed unit disk; ";
    modulus_part(mu, p, omega, r);
    r.member = r.ellipticity_ok && r.support_ok && r.modulus_ok;
    return r;
}

std::pair<double, double> fourier_tail_check(const GridField& f, double p, double R) {
    if (!(p > 1 && p <= 2)) throw BadExponents("fourier_tail_check needs 1 < p <= 2");
    const Grid& g = f.grid();
    if (R > kPi / (2 * g.h()) * (1 + 1e-12)) throw InvalidArgument("R beyond the resolvable band");
    FrequencyField F = fft(f);
    const double q = p / (p - 1);
    const double dxi2 = F.dxi() * F.dxi();
    double acc = 0;
    for (int a = 0; a < g.n; ++a)
        for (int b = 0; b < g.n; ++b)
            if (std::abs(F.xi(a, b)) > R) acc += std::pow(std::abs(F(a, b)), q);
    double lhs = std::pow(acc * dxi2, 1.0 / q);
    return {lhs, omega_p(f, p, 1.0 / R)};
}

std::pair<double, double> averaged_modulus_equiv(const GridField& f, double p, double t) {
    const Grid& g = f.grid();
    if (!(p >= 1 && std::isfinite(p))) throw InvalidArgument("averaged modulus needs finite p >= 1");
    if (t < 2 * g.h() * (1 - 1e-12)) throw TooFine("averaged modulus needs t >= 2h");
    double sup = omega_p(f, p, t);
    const int n = g.n;
    int rmax = std::min(n / 2 - 1, int(std::floor(t / g.h() + 1e-9)));
    // lattice shifts in the disk, subsampled for p != 2
    int stride = 1;
    if (p != 2.0)
        while ((2.0 * rmax / stride) * (2.0 * rmax / stride) > 400) ++stride;
    std::vector<double> sq;
    if (p == 2.0) sq = all_shift_sq(f);
    Differ df(f);
    const double h2 = g.h() * g.h();
    double acc = 0;
    long cnt = 0;
    for (int a = -rmax; a <= rmax; a += stride)
        for (int b = -rmax; b <= rmax; b += stride) {
            if (g.h() * std::hypot(a, b) > t * (1 + 1e-12)) continue;
            ++cnt;
            if (a == 0 && b == 0) continue;
            if (p == 2.0)
                acc += sq[std::size_t((a + n) % n) * n + (b + n) % n];
            else
                acc += std::pow(df.norm(a, b, p, h2), p);
        }
    return {sup, std::pow(acc / double(cnt), 1.0 / p)};
}

double fit_log_slope(const ModulusCurve& c, double t_lo, double t_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& q : c.samples) {
        if (q.t < t_lo * (1 - 1e-12) || q.t > t_hi * (1 + 1e-12) || !(q.value > 0)) continue;
        double x = std::log(q.t), y = std::log(q.value);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++m;
    }
    if (m < 2) throw InvalidArgument("slope fit needs two positive samples in range");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace clab
