#pragma once

// Time-evolution engines for the compiled spin-bath models.
//
//  - StaticIsingEvolver: closed-form 2x2 rotation per bath configuration,
//    exact for any t when the bath is static and couples through sigma_z.
//  - Chebyshev expansion of exp(-iHt), matrix-free, any model.
//  - Dense eigendecomposition, for verification of small instances only.

#include <spinbath/hilbert.hpp>
#include <spinbath/models.hpp>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinbath {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Method { ExactStaticIsing, Polynomial, DenseOracle };

inline std::string_view to_string(Method m)
{
    switch (m) {
    case Method::ExactStaticIsing: return "exact_static_ising";
    case Method::Polynomial: return "polynomial";
    case Method::DenseOracle: return "dense_oracle";
    }
    return "unknown";
}

struct PropagatorConfig {
    Method method = Method::Polynomial;
    double tolerance = 1e-12;
    double dt = 0.05;

    void validate() const
    {
        if (!(tolerance > 0.0)) throw std::invalid_argument("PropagatorConfig: tolerance must be > 0");
        if (!(dt > 0.0)) throw std::invalid_argument("PropagatorConfig: dt must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Static Ising bath: H = delta sigma_x + sigma_z B, B = sum_k J_k sigma_k^z.

class StaticIsingEvolver {
public:
    explicit StaticIsingEvolver(const ModelSpec& spec)
        : delta_(spec.delta), n_bath_(spec.n_bath)
    {
        if (spec.family != Family::StaticIsing)
            throw std::invalid_argument("StaticIsingEvolver: model family must be static_ising");
        spec.validate();
        const Index nconf = Index{1} << n_bath_;
        field_.resize(nconf);
        for (Index m = 0; m < nconf; ++m) {
            double b = 0.0;
            for (int k = 0; k < n_bath_; ++k) b += ((m >> k) & 1) ? spec.couplings[k] : -spec.couplings[k];
            field_[m] = b;
            omega_.push_back(std::sqrt(delta_ * delta_ + b * b));
        }
    }

    /// Bath field B for bath configuration m (bit k of m = bath spin k).
    double field(Index m) const { return field_[m]; }
    int n_bath() const { return n_bath_; }

    StateVector evolve(const StateVector& s0, double t) const
    {
        StateVector out(s0.n_central(), s0.n_bath());
        evolve_into(s0, t, out);
        return out;
    }

    void evolve_into(const StateVector& s0, double t, StateVector& out) const
    {
        check_shape(s0);
        if (!out.same_shape(s0)) out = StateVector(s0.n_central(), s0.n_bath());
        for (Index m = 0; m < field_.size(); ++m) {
            const double w = omega_[m];
            rotate(s0, out, m, std::cos(w * t), w > 0.0 ? std::sin(w * t) / w : t);
        }
    }

    /// Calls visit(t, psi) at t = j*dt, j = 0..n-1. Phases advance by a fixed
    /// rotation per step and are recomputed exactly every kAnchor steps.
    void sample(const StateVector& s0, double dt, std::size_t n,
                const std::function<void(double, const StateVector&)>& visit) const
    {
        check_shape(s0);
        if (!(dt > 0.0)) throw std::invalid_argument("sample: dt must be > 0");
        constexpr std::size_t kAnchor = 128;
        const Index nconf = field_.size();
        std::vector<double> cos_step(nconf), sin_step(nconf), c(nconf), s(nconf);
        for (Index m = 0; m < nconf; ++m) {
            cos_step[m] = std::cos(omega_[m] * dt);
            sin_step[m] = std::sin(omega_[m] * dt);
        }
        StateVector psi(s0.n_central(), s0.n_bath());
        for (std::size_t j = 0; j < n; ++j) {
            const double t = static_cast<double>(j) * dt;
            for (Index m = 0; m < nconf; ++m) {
                if (j % kAnchor == 0) {
                    c[m] = std::cos(omega_[m] * t);
                    s[m] = std::sin(omega_[m] * t);
                } else {
                    const double cn = c[m] * cos_step[m] - s[m] * sin_step[m];
                    s[m] = s[m] * cos_step[m] + c[m] * sin_step[m];
                    c[m] = cn;
                }
                const double w = omega_[m];
                rotate(s0, psi, m, c[m], w > 0.0 ? s[m] / w : t);
            }
            visit(t, psi);
        }
    }

private:
    void check_shape(const StateVector& s0) const
    {
        if (s0.n_central() != 1 || s0.n_bath() != n_bath_)
            throw std::invalid_argument("StaticIsingEvolver: state shape does not match the model");
    }

    // cos(omega t) - i (sigma_z B + sigma_x delta) sin(omega t)/omega on configuration m.
    void rotate(const StateVector& s0, StateVector& out, Index m, double c, double sinc) const
    {
        const double b = field_[m];
        const Complex up_up{c, -sinc * b};
        const Complex dn_dn{c, sinc * b};
        const Complex off{0.0, -sinc * delta_};
        const Index i_dn = m << 1;
        const Index i_up = i_dn | 1;
        const Complex a_up = s0[i_up];
        const Complex a_dn = s0[i_dn];
        out[i_up] = detail::mul(up_up, a_up) + detail::mul(off, a_dn);
        out[i_dn] = detail::mul(off, a_up) + detail::mul(dn_dn, a_dn);
    }

    double delta_ = 0.0;
    int n_bath_ = 0;
    std::vector<double> field_;
    std::vector<double> omega_;
};

inline StateVector evolve_static_ising(const ModelSpec& spec, const StateVector& s0, double t)
{
    return StaticIsingEvolver(spec).evolve(s0, t);
}

// ---------------------------------------------------------------------------
// Chebyshev expansion:
//   exp(-iHt) = exp(-i c t) sum_k (2 - delta_k0) (-i)^k J_k(R t) T_k((H - c)/R)
// with c = constant part of H and R = sum of |coefficients| >= spectral half-width.

namespace detail {

inline constexpr int kMaxChebyshevDegree = 10000;

inline std::string detail_format(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Expansion coefficients for time tau; stops once past the Bessel turning point
/// and the remaining terms fall below tol.
inline std::vector<Complex> chebyshev_coefficients(double radius, double tau, double tol, int max_degree)
{
    const double x = radius * tau;
    std::vector<Complex> a;
    for (int k = 0;; ++k) {
        if (k > max_degree)
            throw ConvergenceError("Chebyshev expansion did not reach tolerance " + detail_format(tol) +
                                   " within degree " + std::to_string(max_degree) +
                                   " (R*t = " + std::to_string(x) + ")");
        // libstdc++'s cyl_bessel_j returns NaN once x and k pass ~1000.
        const double jk = boost::math::cyl_bessel_j(k, x);
        if (!std::isfinite(jk))
            throw ConvergenceError("Chebyshev coefficient J_" + std::to_string(k) + "(" + std::to_string(x) +
                                   ") is not finite");
        a.push_back((k == 0 ? 1.0 : 2.0) * i_power(3 * k) * jk);
        // Past the turning point J_k(x) decays faster than geometrically, so the
        // first negligible term bounds the whole tail.
        if (k > x && std::abs(a.back()) < 0.1 * tol) break;
    }
    return a;
}

}  // namespace detail

class ChebyshevPropagator {
public:
    ChebyshevPropagator(const CompiledModel& model, double tolerance = 1e-12)
        : model_(model), tol_(tolerance), center_(model.constant()), radius_(model.spectral_radius())
    {
        if (!(tolerance > 0.0)) throw std::invalid_argument("ChebyshevPropagator: tolerance must be > 0");
    }

    double radius() const { return radius_; }
    double center() const { return center_; }

    /// Longest single segment; keeps the expansion degree well under the cap.
    double max_segment() const { return radius_ > 0.0 ? 0.5 * detail::kMaxChebyshevDegree / radius_ : 1e300; }

    StateVector evolve(const StateVector& s0, double t) const
    {
        check_shape(s0);
        if (t < 0.0) throw std::invalid_argument("evolve_polynomial: t must be >= 0");
        StateVector psi = s0;
        if (t == 0.0) return psi;
        const int segments = static_cast<int>(std::ceil(t / max_segment()));
        const double tau = t / segments;
        const auto coeffs = detail::chebyshev_coefficients(radius_, tau, tol_ / segments,
                                                           detail::kMaxChebyshevDegree);
        std::vector<std::vector<Complex>> work(3, std::vector<Complex>(s0.dim()));
        for (int s = 0; s < segments; ++s) psi = step(psi, tau, coeffs, work);
        return psi;
    }

    /// Calls visit(t, psi) at t = j*dt, j = 0..n-1, starting from s0 at t = 0.
    ///
    /// Samples are grouped in chunks: the Chebyshev vectors T_k(H~)psi are built once
    /// per chunk and every sample inside it is a linear combination of them.
    void sample(const StateVector& s0, double dt, std::size_t n,
                const std::function<void(double, const StateVector&)>& visit,
                double chunk_phase = 20.0) const
    {
        check_shape(s0);
        if (!(dt > 0.0)) throw std::invalid_argument("sample: dt must be > 0");
        if (n == 0) return;
        visit(0.0, s0);
        if (n == 1) return;

        const std::size_t per_chunk =
            radius_ > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(chunk_phase / (radius_ * dt))) : n;
        if (radius_ == 0.0 || radius_ * dt > chunk_phase) {
            // Samples are far apart: plain segment-by-segment stepping.
            StateVector psi = s0;
            for (std::size_t j = 1; j < n; ++j) {
                psi = evolve(psi, dt);
                visit(static_cast<double>(j) * dt, psi);
            }
            return;
        }

        const Index d = s0.dim();
        StateVector anchor = s0;
        StateVector psi(s0.n_central(), s0.n_bath());
        std::vector<std::vector<Complex>> basis;
        std::vector<Complex> tmp(d);
        std::size_t j = 1;
        while (j < n) {
            const std::size_t count = std::min(per_chunk, n - j);
            const double tau_max = static_cast<double>(count) * dt;
            const auto probe = detail::chebyshev_coefficients(radius_, tau_max, tol_, detail::kMaxChebyshevDegree);
            const std::size_t degree = probe.size();

            // T_0 psi, T_1 psi, ... via the three-term recurrence.
            basis.resize(degree);
            for (auto& v : basis) v.resize(d);
            std::copy(anchor.amplitudes().begin(), anchor.amplitudes().end(), basis[0].begin());
            if (degree > 1) scaled_apply(basis[0], basis[1]);
            for (std::size_t k = 2; k < degree; ++k) {
                scaled_apply(basis[k - 1], tmp);
                for (Index i = 0; i < d; ++i) basis[k][i] = 2.0 * tmp[i] - basis[k - 2][i];
            }

            for (std::size_t q = 1; q <= count; ++q) {
                const double tau = static_cast<double>(q) * dt;
                auto a = detail::chebyshev_coefficients(radius_, tau, tol_, detail::kMaxChebyshevDegree);
                if (a.size() > degree) a.resize(degree);
                const Complex phase = std::polar(1.0, -center_ * tau);
                for (auto& c : a) c *= phase;
                auto out = psi.amplitudes();
                // Blocked so the output slice stays in cache across all k.
                constexpr Index kBlock = 1024;
                for (Index lo = 0; lo < d; lo += kBlock) {
                    const Index hi = std::min(d, lo + kBlock);
                    for (Index i = lo; i < hi; ++i) out[i] = detail::mul(a[0], basis[0][i]);
                    for (std::size_t k = 1; k < a.size(); ++k) {
                        const Complex c = a[k];
                        const Complex* v = basis[k].data();
                        for (Index i = lo; i < hi; ++i) out[i] += detail::mul(c, v[i]);
                    }
                }
                visit(static_cast<double>(j - 1 + q) * dt, psi);
            }
            anchor = psi;
            j += count;
        }
    }

private:
    void check_shape(const StateVector& s) const
    {
        if (s.n_central() != model_.n_central() || s.n_bath() != model_.n_bath())
            throw std::invalid_argument("ChebyshevPropagator: state and model dimensions differ");
    }

    // out = (H - c) in / R
    void scaled_apply(std::span<const Complex> in, std::span<Complex> out) const
    {
        model_.apply(in, out);
        const double inv = 1.0 / radius_;
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = (out[i] - center_ * in[i]) * inv;
    }

    StateVector step(const StateVector& in, double tau, const std::vector<Complex>& a,
                     std::vector<std::vector<Complex>>& work) const
    {
        const Index d = in.dim();
        StateVector out(in.n_central(), in.n_bath());
        auto res = out.amplitudes();
        if (radius_ == 0.0) {
            const Complex phase = std::polar(1.0, -center_ * tau);
            for (Index i = 0; i < d; ++i) res[i] = detail::mul(phase, in[i]);
            return out;
        }
        auto& prev = work[0];
        auto& cur = work[1];
        auto& next = work[2];
        std::copy(in.amplitudes().begin(), in.amplitudes().end(), prev.begin());
        for (Index i = 0; i < d; ++i) res[i] = detail::mul(a[0], prev[i]);
        if (a.size() > 1) {
            scaled_apply(prev, cur);
            for (Index i = 0; i < d; ++i) res[i] += detail::mul(a[1], cur[i]);
        }
        for (std::size_t k = 2; k < a.size(); ++k) {
            scaled_apply(cur, next);
            for (Index i = 0; i < d; ++i) {
                next[i] = 2.0 * next[i] - prev[i];
                res[i] += detail::mul(a[k], next[i]);
            }
            std::swap(prev, cur);
            std::swap(cur, next);
        }
        const Complex phase = std::polar(1.0, -center_ * tau);
        for (Index i = 0; i < d; ++i) res[i] = detail::mul(phase, res[i]);
        return out;
    }

    const CompiledModel& model_;
    double tol_;
    double center_;
    double radius_;
};

inline StateVector evolve_polynomial(const CompiledModel& model, const StateVector& s0, double t,
                                     const PropagatorConfig& cfg = {})
{
    cfg.validate();
    return ChebyshevPropagator(model, cfg.tolerance).evolve(s0, t);
}

// ---------------------------------------------------------------------------
// Dense reference path.

inline constexpr int kDenseOracleMaxSpins = 10;

/// Dense matrix of H, assembled entry by entry from single-site Pauli tables.
inline Eigen::MatrixXcd dense_hamiltonian(const CompiledModel& model)
{
    if (model.n_sites() > kDenseOracleMaxSpins)
        throw std::length_error("dense oracle refused: " + std::to_string(model.n_sites()) +
                                " spins exceeds the limit of " + std::to_string(kDenseOracleMaxSpins));
    // table[p][out_bit][in_bit], bit 1 = spin up.
    static const Complex table[4][2][2] = {
        {{1, 0}, {0, 1}},                             // I
        {{0, 1}, {1, 0}},                             // X
        {{0, Complex(0, 1)}, {Complex(0, -1), 0}},    // Y: Y|1> = i|0>, Y|0> = -i|1>
        {{-1, 0}, {0, 1}},                            // Z: Z|0> = -|0>
    };
    const auto d = static_cast<Eigen::Index>(model.dim());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& term : model.terms()) {
        const Index flip = term.flip_mask();
        for (Index x = 0; x < model.dim(); ++x) {
            const Index y = x ^ flip;
            Complex v = term.coefficient();
            for (int s = 0; s < term.n_sites(); ++s)
                v *= table[static_cast<int>(term[s])][(y >> s) & 1][(x >> s) & 1];
            h(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) += v;
        }
    }
    return h;
}

class DenseEvolver {
public:
    explicit DenseEvolver(const CompiledModel& model)
        : n_central_(model.n_central()), n_bath_(model.n_bath())
    {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_hamiltonian(model));
        if (es.info() != Eigen::Success) throw ConvergenceError("dense oracle: eigendecomposition failed");
        energies_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
    }

    const Eigen::VectorXd& energies() const { return energies_; }

    StateVector evolve(const StateVector& s0, double t) const
    {
        if (s0.n_central() != n_central_ || s0.n_bath() != n_bath_)
            throw std::invalid_argument("dense oracle: state and model dimensions differ");
        const auto d = static_cast<Eigen::Index>(s0.dim());
        const Eigen::Map<const Eigen::VectorXcd> in(s0.amplitudes().data(), d);
        Eigen::VectorXcd c = vectors_.adjoint() * in;
        for (Eigen::Index k = 0; k < d; ++k) c[k] *= std::polar(1.0, -energies_[k] * t);
        const Eigen::VectorXcd res = vectors_ * c;
        return StateVector(n_central_, n_bath_, std::vector<Complex>(res.data(), res.data() + d));
    }

private:
    int n_central_;
    int n_bath_;
    Eigen::VectorXd energies_;
    Eigen::MatrixXcd vectors_;
};

inline StateVector dense_oracle(const CompiledModel& model, const StateVector& s0, double t)
{
    return DenseEvolver(model).evolve(s0, t);
}

}  // namespace spinbath
