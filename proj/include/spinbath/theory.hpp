#pragma once

// Closed-form and semi-analytical descriptions of the central-spin dynamics:
// bath dispersion, envelope laws, the Gaussian bath average of sigma_z(t),
// a Monte-Carlo evaluation of the long-time effective propagator, and
// envelope extraction from sampled oscillations.

#include <spinbath/observables.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinbath {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double bath_dispersion(std::span<const double> couplings)
{
    if (couplings.empty()) throw std::invalid_argument("bath_dispersion: empty coupling list");
    double s = 0.0;
    for (double j : couplings) s += j * j;
    return s;
}

struct TheoryParams {
    double b2 = 0.0;     // variance of the bath field, sum_k J_k^2
    double delta = 0.0;  // central field
    double tau1 = 0.0;   // delta / b2, Gaussian-to-power-law crossover
    double tau2 = 0.0;   // 1 / h_x, zero when the bath has no transverse field

    static TheoryParams from(std::span<const double> couplings, double delta, double hx = 0.0)
    {
        return from_b2(bath_dispersion(couplings), delta, hx);
    }

    static TheoryParams from_b2(double b2, double delta, double hx = 0.0)
    {
        if (!(b2 > 0.0)) throw std::invalid_argument("TheoryParams: b2 must be > 0");
        TheoryParams p;
        p.b2 = b2;
        p.delta = delta;
        p.tau1 = delta / b2;
        p.tau2 = hx > 0.0 ? 1.0 / hx : 0.0;
        return p;
    }
};

enum class EnvelopeLaw { StaticQuarter, DynamicHalf, HeisenbergMF };

inline std::string_view to_string(EnvelopeLaw law)
{
    switch (law) {
    case EnvelopeLaw::StaticQuarter: return "static";
    case EnvelopeLaw::DynamicHalf: return "dynamic";
    case EnvelopeLaw::HeisenbergMF: return "heisenberg";
    }
    return "unknown";
}

inline EnvelopeLaw parse_envelope_law(std::string_view name)
{
    if (name == "static" || name == "StaticQuarter") return EnvelopeLaw::StaticQuarter;
    if (name == "dynamic" || name == "DynamicHalf") return EnvelopeLaw::DynamicHalf;
    if (name == "heisenberg" || name == "HeisenbergMF") return EnvelopeLaw::HeisenbergMF;
    throw std::invalid_argument("unknown envelope law '" + std::string(name) +
                                "' (expected static, dynamic or heisenberg)");
}

/// Static bath: sigma0 [1 + (2t/tau1)^2]^(-1/4); tail sigma0 / sqrt(2t/tau1).
inline double envelope_static(double t, const TheoryParams& p, double sigma0)
{
    const double x = 2.0 * t / p.tau1;
    return sigma0 * std::pow(1.0 + x * x, -0.25);
}

/// Slowly precessing bath: sigma0 [1 + (b2 t/delta)^2]^(-1/2); tail ~ 1/t.
inline double envelope_dynamic(double t, const TheoryParams& p, double sigma0)
{
    const double x = p.b2 * t / p.delta;
    return sigma0 / std::sqrt(1.0 + x * x);
}

/// Two-spin mean-field envelope (1/3)[1 - 2(b2 t^2 - 1) exp(-b2 t^2 / 2)], starting at 1, ending at 1/3.
inline double envelope_heisenberg(double t, double b2)
{
    const double x = b2 * t * t;
    return (1.0 - 2.0 * (x - 1.0) * std::exp(-0.5 * x)) / 3.0;
}

inline double envelope(EnvelopeLaw law, double t, const TheoryParams& p, double sigma0)
{
    switch (law) {
    case EnvelopeLaw::StaticQuarter: return envelope_static(t, p, sigma0);
    case EnvelopeLaw::DynamicHalf: return envelope_dynamic(t, p, sigma0);
    case EnvelopeLaw::HeisenbergMF: return sigma0 * envelope_heisenberg(t, p.b2);
    }
    return 0.0;
}

/// Gaussian average of sigma0 cos(2 delta t + B^2 t / delta) over B ~ N(0, b2), in closed form:
/// sigma0 Re{ exp(-2i delta t) (1 + 2i b2 t / delta)^(-1/2) }.
inline double gaussian_average_analytic(double t, const TheoryParams& p, double sigma0)
{
    const Complex factor = std::pow(Complex(1.0, 2.0 * p.b2 * t / p.delta), -0.5);
    return sigma0 * (std::polar(1.0, -2.0 * p.delta * t) * factor).real();
}

/// Same average by composite Gauss-Legendre quadrature over the scaled field x = B / sqrt(2 b2),
/// panel count doubled until successive estimates agree to `tol`.
inline double gaussian_average_quadrature(double t, const TheoryParams& p, double sigma0, double tol = 1e-10)
{
    // exp(-x^2) < 1e-18 beyond this; the integrand is even, so integrate [0, L] twice.
    constexpr double kHalfWidth = 6.5;
    constexpr int kMaxPanels = 1 << 20;
    const double a = 2.0 * p.b2 * t / p.delta;
    const double base = 2.0 * p.delta * t;
    const auto f = [&](double x) { return std::exp(-x * x) * std::cos(base + a * x * x); };

    const auto integrate = [&](int panels) {
        const double h = kHalfWidth / panels;
        double s = 0.0;
        for (int i = 0; i < panels; ++i)
            s += boost::math::quadrature::gauss<double, 20>::integrate(f, i * h, (i + 1) * h);
        return 2.0 * s / std::sqrt(std::numbers::pi);
    };

    // Start with a few panels per oscillation of cos(a x^2) over the domain.
    int panels = 8;
    while (panels < kMaxPanels && panels < a * kHalfWidth * kHalfWidth / std::numbers::pi) panels *= 2;
    double prev = integrate(panels);
    for (panels *= 2; panels <= kMaxPanels; panels *= 2) {
        const double cur = integrate(panels);
        if (std::abs(cur - prev) < tol) return sigma0 * cur;
        prev = cur;
    }
    throw QuadratureError("gaussian_average_quadrature: no convergence at t = " + std::to_string(t));
}

/// Bath-averaged sigma_z(t) for a static Gaussian bath, evaluated both in closed form and by
/// quadrature. Throws if the two disagree by more than 1e-9.
inline double sigma_z_closed_form(double t, const TheoryParams& p, double sigma0)
{
    if (t < 0.0) throw std::invalid_argument("sigma_z_closed_form: t must be >= 0");
    const double analytic = gaussian_average_analytic(t, p, sigma0);
    const double numeric = gaussian_average_quadrature(t, p, sigma0);
    if (std::abs(analytic - numeric) > 1e-9)
        throw QuadratureError("sigma_z_closed_form: quadrature and closed form differ by " +
                              std::to_string(std::abs(analytic - numeric)) + " at t = " + std::to_string(t));
    return analytic;
}

struct MonteCarloEstimate {
    double sigma_z = 0.0;
    double sigma_y = 0.0;
    double envelope = 0.0;   // sqrt(sigma_z^2 + sigma_y^2)
    double std_error = 0.0;  // standard error of `envelope`
};

/// Monte-Carlo average of the exact single-spin evolution under
/// U = exp[-i sigma_x t (delta + (Bz^2 + By^2) / (4 delta))], with By, Bz ~ N(0, b2).
///
/// Samples are drawn in fixed-size blocks, each block seeded from (seed, block index),
/// so the estimate does not depend on how blocks are scheduled.
inline MonteCarloEstimate magnus_effective_estimate(double t, const TheoryParams& p, double sigma0,
                                                    std::size_t n_samples, std::uint64_t seed)
{
    if (n_samples < 1000) throw std::invalid_argument("magnus_effective_sigma_z: need at least 1000 samples");
    constexpr std::size_t kBlock = 4096;
    const double b = std::sqrt(p.b2);
    std::vector<Complex> z(n_samples);
    for (std::size_t start = 0, block = 0; start < n_samples; start += kBlock, ++block) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(block)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> gauss(0.0, b);
        const std::size_t stop = std::min(n_samples, start + kBlock);
        for (std::size_t i = start; i < stop; ++i) {
            const double by = gauss(rng);
            const double bz = gauss(rng);
            const double angle = t * (p.delta + (bz * bz + by * by) / (4.0 * p.delta));
            // sigma_z(0) = sigma0, sigma_y(0) = 0: the spin rotates by 2*angle about x.
            z[i] = std::polar(1.0, -2.0 * angle);
        }
    }
    Complex mean{};
    for (const auto& v : z) mean += v;
    mean /= static_cast<double>(n_samples);

    MonteCarloEstimate est;
    est.sigma_z = sigma0 * mean.real();
    est.sigma_y = sigma0 * mean.imag();
    const double amp = std::abs(mean);
    est.envelope = sigma0 * amp;
    const Complex dir = amp > 0.0 ? mean / amp : Complex(1.0, 0.0);
    double var = 0.0;
    for (const auto& v : z) {
        const double proj = (v * std::conj(dir)).real() - amp;
        var += proj * proj;
    }
    var /= static_cast<double>(n_samples - 1);
    est.std_error = std::abs(sigma0) * std::sqrt(var / static_cast<double>(n_samples));
    return est;
}

inline double magnus_effective_sigma_z(double t, const TheoryParams& p, double sigma0, std::size_t n_samples,
                                       std::uint64_t seed)
{
    return magnus_effective_estimate(t, p, sigma0, n_samples, seed).sigma_z;
}

// ---------------------------------------------------------------------------
// Envelope extraction and comparison.

class EnvelopeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Local maxima of |values|, each refined by the parabola through it and its two neighbours.
inline TimeSeries extract_envelope(const TimeSeries& series)
{
    series.validate();
    TimeSeries env;
    env.label = series.label.empty() ? "envelope" : series.label + "_envelope";
    const auto& t = series.times;
    const std::size_t n = series.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double y0 = std::abs(series.values[i - 1]);
        const double y1 = std::abs(series.values[i]);
        const double y2 = std::abs(series.values[i + 1]);
        if (!(y1 > y0 && y1 >= y2)) continue;

        // Parabola through (t0,y0), (t1,y1), (t2,y2) in divided-difference form.
        const double d01 = (y1 - y0) / (t[i] - t[i - 1]);
        const double d12 = (y2 - y1) / (t[i + 1] - t[i]);
        const double curv = (d12 - d01) / (t[i + 1] - t[i - 1]);
        double tp = t[i];
        double yp = y1;
        if (curv < 0.0) {
            // y(s) = y1 + d01 (s - t1) + curv (s - t0)(s - t1)
            tp = 0.5 * (t[i - 1] + t[i]) - d01 / (2.0 * curv);
            tp = std::clamp(tp, t[i - 1], t[i + 1]);
            yp = y1 + d01 * (tp - t[i]) + curv * (tp - t[i - 1]) * (tp - t[i]);
        }
        if (!env.times.empty() && !(tp > env.times.back())) continue;
        env.times.push_back(tp);
        env.values.push_back(yp);
    }
    if (env.size() < 3)
        throw EnvelopeError("extract_envelope: found " + std::to_string(env.size()) + " peaks, need at least 3");
    return env;
}

/// max |env - law| / law over envelope points with t in [t_min, t_max].
template <class Law>
double max_relative_deviation(const TimeSeries& env, Law&& law, double t_min, double t_max)
{
    double worst = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double t = env.times[i];
        if (t < t_min || t > t_max) continue;
        const double ref = law(t);
        worst = std::max(worst, std::abs(env.values[i] - ref) / std::abs(ref));
        ++used;
    }
    if (used == 0) throw EnvelopeError("max_relative_deviation: no envelope points in the window");
    return worst;
}

struct InverseTimeFit {
    double c = 0.0;         // best-fit c in c / t
    double residual = 0.0;  // ||env - c/t||_2 / ||env||_2
    std::size_t points = 0;
};

/// Least-squares fit of env(t) ~ c / t over t in [t_min, t_max].
inline InverseTimeFit fit_inverse_time(const TimeSeries& env, double t_min, double t_max)
{
    double num = 0.0;
    double den = 0.0;
    InverseTimeFit fit;
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double t = env.times[i];
        if (t < t_min || t > t_max || t <= 0.0) continue;
        num += env.values[i] / t;
        den += 1.0 / (t * t);
        ++fit.points;
    }
    if (fit.points < 2) throw EnvelopeError("fit_inverse_time: fewer than 2 points in the window");
    fit.c = num / den;
    double r2 = 0.0;
    double e2 = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double t = env.times[i];
        if (t < t_min || t > t_max || t <= 0.0) continue;
        const double r = env.values[i] - fit.c / t;
        r2 += r * r;
        e2 += env.values[i] * env.values[i];
    }
    fit.residual = std::sqrt(r2 / e2);
    return fit;
}

}  // namespace spinbath
