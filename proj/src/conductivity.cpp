#include "clab/conductivity.hpp"

#include <cmath>
#include <random>

#include "clab/errors.hpp"
#include "clab/modulus.hpp"

namespace clab {

EllipticityProfile EllipticityProfile::from_K(double K) {
    if (!(K >= 1.0)) throw InvalidArgument("ellipticity K must be >= 1");
    EllipticityProfile e;
    e.K = K;
    e.kappa = (K - 1) / (K + 1);
    e.p_kappa = K == 1.0 ? INFINITY : 2 * K / (K - 1);
    return e;
}

EllipticityProfile EllipticityProfile::from_kappa(double kappa) {
    if (!(kappa >= 0 && kappa < 1)) throw InvalidArgument("kappa must lie in [0,1)");
    EllipticityProfile e;
    e.kappa = kappa;
    e.K = (1 + kappa) / (1 - kappa);
    e.p_kappa = kappa == 0 ? INFINITY : 1 + 1 / kappa;
    return e;
}

double mu_of_gamma(double g) { return (1 - g) / (1 + g); }
double gamma_of_mu(double m) { return (1 - m) / (1 + m); }

ConductivityField sample(const ConductivityModel& m, const Grid& g, int sub) {
    ConductivityField out;
    out.support_radius = m.r0;
    out.profile = EllipticityProfile::from_K(m.K);
    const double h = g.h();
    out.gamma = GridField::from(g, [&](cplx z) {
        if (sub <= 1) return cplx(m.value(z));
        double acc = 0;
        for (int p = 0; p < sub; ++p)
            for (int q = 0; q < sub; ++q)
                acc += m.value(z + h * cplx((p + 0.5) / sub - 0.5, (q + 0.5) / sub - 0.5));
        return cplx(acc / (sub * sub));
    });
    return out;
}

BeltramiField gamma_to_mu(const ConductivityField& c) {
    BeltramiField b{GridField(c.gamma.grid()), c.profile};
    double worst = 1.0;
    for (std::size_t k = 0; k < c.gamma.values().size(); ++k) {
        cplx v = c.gamma[k];
        if (v.imag() != 0.0 || !(v.real() > 0))
            throw EllipticityViolation("conductivity must be real and positive");
        worst = std::max({worst, v.real(), 1.0 / v.real()});
        b.mu[k] = mu_of_gamma(v.real());
    }
    if (worst > c.profile.K * (1 + 1e-12))
        throw EllipticityViolation("conductivity leaves [1/K, K] with K = " + std::to_string(c.profile.K));
    return b;
}

ConductivityField mu_to_gamma(const BeltramiField& b) {
    ConductivityField c{GridField(b.mu.grid()), 1.0, b.profile};
    for (std::size_t k = 0; k < b.mu.values().size(); ++k) {
        cplx v = b.mu[k];
        if (v.imag() != 0.0 || !(std::abs(v.real()) < 1))
            throw EllipticityViolation("Beltrami coefficient must be real with |mu| < 1");
        if (std::abs(v.real()) > b.profile.kappa * (1 + 1e-12))
            throw EllipticityViolation("|mu| exceeds kappa");
        c.gamma[k] = gamma_of_mu(v.real());
    }
    return c;
}

ConductivityModel family_constant() {
    ConductivityModel m;
    m.name = "constant";
    m.params = nlohmann::json::object();
    m.r0 = 0.0;
    m.K = 1.0;
    m.value = [](cplx) { return 1.0; };
    return m;
}

ConductivityModel family_radial_layers(std::vector<double> radii, std::vector<double> values) {
    if (radii.size() != values.size() + 1 || values.empty())
        throw InvalidArgument("radial layers need one more radius than values");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] < radii[i + 1])) throw InvalidArgument("layer radii must increase");
    if (!(radii.front() >= 0 && radii.back() < 1)) throw InvalidArgument("layer radii must lie in [0,1)");
    double K = 1;
    for (double v : values) {
        if (!(v > 0)) throw InvalidArgument("layer values must be positive");
        K = std::max({K, v, 1 / v});
    }
    ConductivityModel m;
    m.name = "radial_layers";
    m.params = {{"radii", radii}, {"values", values}};
    m.r0 = radii.back();
    m.K = K;
    m.layer_radii = radii;
    m.layer_values = values;
    m.value = [radii, values](cplx z) {
        double r = std::abs(z);
        for (std::size_t i = 0; i < values.size(); ++i)
            if (r >= radii[i] && r < radii[i + 1]) return values[i];
        return 1.0;
    };
    return m;
}

ConductivityModel family_gamma_R(double R) {
    if (!(R > 0 && R < 1)) throw InvalidArgument("gamma_R needs 0 < R < 1");
    ConductivityModel m = family_radial_layers({R * R, R}, {3.0});
    m.name = "gamma_R";
    m.params = {{"R", R}};
    return m;
}

ConductivityModel family_bump(double amplitude, double radius) {
    if (!(radius > 0 && radius < 1)) throw InvalidArgument("bump radius must lie in (0,1)");
    if (!(amplitude > -1)) throw InvalidArgument("bump amplitude must exceed -1");
    ConductivityModel m;
    m.name = "bump";
    m.params = {{"amplitude", amplitude}, {"radius", radius}};
    m.r0 = radius;
    m.K = std::max(1 + amplitude, 1 / (1 + amplitude));
    m.value = [amplitude, radius](cplx z) {
        double t = std::norm(z) / (radius * radius);
        return t < 1 ? 1 + amplitude * std::exp(1 - 1 / (1 - t)) : 1.0;
    };
    return m;
}

namespace {
// 53-bit uniform from the raw engine output; the standard distributions are
// not portable across library implementations.
double unit(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }
}  // namespace

ConductivityModel family_holder(double s, std::uint64_t seed, double amplitude, double r0, int J) {
    if (!(s > 0 && s < 1)) throw InvalidArgument("Holder exponent must lie in (0,1)");
    if (!(amplitude >= 0 && amplitude < 1)) throw InvalidArgument("Holder amplitude must lie in [0,1)");
    if (!(r0 > 0 && r0 < 1)) throw InvalidArgument("Holder support radius must lie in (0,1)");
    if (J < 1 || J > 12) throw InvalidArgument("Holder octave count must lie in [1,12]");
    // octave j carries kHolderDirs evenly spaced directions at frequency
    // kHolderBase 2^j; the spread keeps the modulus close to isotropic
    std::mt19937_64 rng(seed);
    std::vector<cplx> dir;
    std::vector<double> phase, weight;
    double norm = 0;
    for (int j = 0; j < J; ++j) {
        double rot = 2 * kPi * unit(rng);
        double f = kHolderBase * std::ldexp(1.0, j);
        for (int d = 0; d < kHolderDirs; ++d) {
            dir.push_back(f * std::polar(1.0, rot + kPi * d / kHolderDirs));
            phase.push_back(2 * kPi * unit(rng));
            weight.push_back(std::pow(f, -s));
            norm += weight.back();
        }
    }
    ConductivityModel m;
    m.name = "holder";
    m.params = {{"s", s}, {"seed", seed}, {"amplitude", amplitude}, {"r0", r0}, {"J", J}};
    m.r0 = r0;
    m.K = 1 / (1 - amplitude);
    m.value = [=](cplx z) {
        double t = std::norm(z) / (r0 * r0);
        if (t >= 1) return 1.0;
        double acc = 0;
        for (std::size_t i = 0; i < dir.size(); ++i)
            acc += weight[i] * std::cos(dir[i].real() * z.real() + dir[i].imag() * z.imag() + phase[i]);
        return 1 + amplitude * std::exp(1 - 1 / (1 - t)) * acc / norm;
    };
    return m;
}

double holder_amplitude_for_kappa(double kappa) { return 2 * kappa / (1 + kappa); }

ConductivityModel family_from_json(const nlohmann::json& j) {
    std::string f = j.at("family").get<std::string>();
    if (f == "constant" || f == "one") return family_constant();
    if (f == "gamma_R") return family_gamma_R(j.at("R").get<double>());
    if (f == "bump") return family_bump(j.value("amplitude", 0.8), j.value("radius", 0.8));
    if (f == "radial_layers")
        return family_radial_layers(j.at("radii").get<std::vector<double>>(),
                                    j.at("values").get<std::vector<double>>());
    if (f == "holder") {
        double amp = j.contains("kappa") ? holder_amplitude_for_kappa(j.at("kappa").get<double>())
                                         : j.value("amplitude", 0.3);
        return family_holder(j.value("s", 0.5), j.value("seed", std::uint64_t(1)), amp, j.value("r0", 0.9),
                             j.value("J", 6));
    }
    throw InvalidArgument("unknown conductivity family " + f);
}

double m_x(double R, double x) {
    if (!(R > 0 && R < 1) || !(x > 0)) throw InvalidArgument("m_x needs 0 < R < 1 and x > 0");
    double u = std::pow(R, 2 * x), u2 = u * u;
    return 4 * (u - u2) / (4 - 3 * u + 2 * u2);
}

namespace {
// max |d/dr exp(1 - 1/(1 - r^2/r0^2))| on (0, r0)
double cutoff_lipschitz(double r0) {
    double m = 0;
    for (int i = 1; i < 4000; ++i) {
        double r = r0 * i / 4000.0, u = r * r / (r0 * r0);
        m = std::max(m, std::exp(1 - 1 / (1 - u)) * 2 * r / (r0 * r0) / ((1 - u) * (1 - u)));
    }
    return m * 1.01;
}
// area factor turning a sup-norm modulus into an L^p one for t <= 2
double area_factor(double r0, double p) { return std::isinf(p) ? 1.0 : std::pow(kPi * (r0 + 2) * (r0 + 2), 1 / p); }
}  // namespace

ModulusSpec declared_modulus(const ConductivityModel& m, double p) {
    if (!(p >= 1)) throw InvalidArgument("declared modulus needs p >= 1");
    if (m.name == "constant" || m.K == 1.0) return ModulusSpec::power(1.0, 1.0);
    if (m.is_radial_layers()) {
        // each interface of radius r with jump J adds J * |D_r sym.diff. (D_r + y)|^{1/p},
        // and that area is at most 4 r t; 25% slack covers the pixelated boundary
        double c = 0, prev = 1;
        for (std::size_t i = 0; i <= m.layer_values.size(); ++i) {
            double v = i < m.layer_values.size() ? m.layer_values[i] : 1.0;
            double r = m.layer_radii[i];
            if (r > 0) c += std::abs(v - prev) * (std::isinf(p) ? 1.0 : std::pow(5 * r, 1 / p));
            prev = v;
        }
        return ModulusSpec::power(c, std::isinf(p) ? 0.0 : 1 / p);
    }
    if (m.name == "bump") {
        double a = m.params.at("amplitude").get<double>(), r = m.params.at("radius").get<double>();
        return ModulusSpec::power(std::abs(a) * cutoff_lipschitz(r) * area_factor(r, p), 1.0);
    }
    if (m.name == "holder") {
        double s = m.params.at("s").get<double>(), a = m.params.at("amplitude").get<double>();
        double r0 = m.params.at("r0").get<double>();
        int J = m.params.at("J").get<int>();
        double lip = cutoff_lipschitz(r0), norm = 0;
        for (int j = 0; j < J; ++j) norm += kHolderDirs * std::pow(kHolderBase * std::ldexp(1.0, j), -s);
        // |c S - c' S'| <= |c - c'| + |S - S'| with |c|, |S| <= 1; sup of bound / t^s
        double worst = 0;
        for (int i = 0; i <= 600; ++i) {
            double t = std::pow(10.0, -6 + i * (6 + std::log10(2.0)) / 600);
            double b = std::min(1.0, lip * t);
            for (int j = 0; j < J; ++j) {
                double f = kHolderBase * std::ldexp(1.0, j);
                b += kHolderDirs * std::pow(f, -s) * std::min(2.0, f * t) / norm;
            }
            worst = std::max(worst, b / std::pow(t, s));
        }
        return ModulusSpec::power(a * worst * area_factor(r0, p), s);
    }
    throw InvalidArgument("no declared modulus for family " + m.name);
}

}  // namespace clab
