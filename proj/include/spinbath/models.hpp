#pragma once

// Catalog of central-spin/bath Hamiltonians compiled to Pauli strings.
//
// Bath operators are Pauli matrices (eigenvalues +-1) throughout, so the bath
// field B = sum_k J_k sigma_k^z has variance sum_k J_k^2 over a random bath
// state. Using spin-1/2 bath operators instead halves every J_k and h_x.

#include <spinbath/hilbert.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinbath {

enum class Family { StaticIsing, TransverseBath, BathExchange, TwoSpinHeisenberg };

inline std::string_view to_string(Family f)
{
    switch (f) {
    case Family::StaticIsing: return "static_ising";
    case Family::TransverseBath: return "transverse_bath";
    case Family::BathExchange: return "bath_exchange";
    case Family::TwoSpinHeisenberg: return "two_spin_heisenberg";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name)
{
    for (auto f : {Family::StaticIsing, Family::TransverseBath, Family::BathExchange,
                   Family::TwoSpinHeisenberg})
        if (to_string(f) == name) return f;
    throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

inline int central_spins(Family f) { return f == Family::TwoSpinHeisenberg ? 2 : 1; }

struct ModelSpec {
    Family family = Family::StaticIsing;
    double delta = 0.0;              // central field, H_S = delta * sigma_x
    std::vector<double> couplings;   // J_k, one per bath spin
    double hx = 0.0;                 // TransverseBath: h_x sum_k sigma_k^x
    std::vector<double> exchange;    // BathExchange: symmetric n_bath x n_bath, row-major, A_kl
    double j_central = 0.0;          // TwoSpinHeisenberg: 2J s1.s2 + J/2
    int n_bath = 0;

    int n_central() const { return central_spins(family); }

    void validate() const
    {
        if (n_bath < 0) throw std::invalid_argument("ModelSpec: n_bath must be >= 0");
        if (static_cast<int>(couplings.size()) != n_bath)
            throw std::invalid_argument("ModelSpec: couplings length must equal n_bath");
        if (n_central() + n_bath > kMaxSpins) throw std::invalid_argument("ModelSpec: too many spins");
        const auto must_be_zero = [](bool bad, const char* what) {
            if (bad) throw std::invalid_argument(std::string("ModelSpec: ") + what + " is not used by this family");
        };
        must_be_zero(family != Family::TransverseBath && hx != 0.0, "hx");
        must_be_zero(family != Family::BathExchange && !exchange.empty(), "exchange");
        must_be_zero(family != Family::TwoSpinHeisenberg && j_central != 0.0, "j_central");
        must_be_zero(family == Family::TwoSpinHeisenberg && delta != 0.0, "delta");
        if (family == Family::TransverseBath && hx < 0.0)
            throw std::invalid_argument("ModelSpec: hx must be >= 0");
        if (family == Family::BathExchange) {
            if (exchange.size() != static_cast<std::size_t>(n_bath) * static_cast<std::size_t>(n_bath))
                throw std::invalid_argument("ModelSpec: exchange must be an n_bath x n_bath matrix");
            for (int k = 0; k < n_bath; ++k)
                for (int l = 0; l < n_bath; ++l)
                    if (exchange[k * n_bath + l] != exchange[l * n_bath + k])
                        throw std::invalid_argument("ModelSpec: exchange matrix must be symmetric");
        }
    }
};

/// The 14 bath couplings of the reference static-bath experiment (max 0.123 <= 0.125).
inline std::vector<double> reference_couplings()
{
    return {0.123, 0.06425, 0.079, 0.009, 0.0585, 0.03525, 0.012,
            0.00525, 0.0945, 0.049, 0.1105, 0.02575, 0.07625, 0.11225};
}

inline std::vector<double> constant_exchange(int n_bath, double a)
{
    std::vector<double> m(static_cast<std::size_t>(n_bath) * n_bath, a);
    for (int k = 0; k < n_bath; ++k) m[k * n_bath + k] = 0.0;
    return m;
}

/// Symmetric A_kl drawn uniformly from [0, a_max]; zero diagonal.
inline std::vector<double> random_exchange(int n_bath, double a_max, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, a_max);
    std::vector<double> m(static_cast<std::size_t>(n_bath) * n_bath, 0.0);
    for (int k = 0; k < n_bath; ++k)
        for (int l = k + 1; l < n_bath; ++l) m[k * n_bath + l] = m[l * n_bath + k] = u(rng);
    return m;
}

/// Hamiltonian as a sum of Pauli strings, pre-grouped for fast matrix-free application.
///
/// Terms sharing a flip mask are applied in one pass; all pure-Z terms fold into
/// one real diagonal, and the identity folds into a scalar shift.
class CompiledModel {
public:
    CompiledModel(int n_central, int n_bath, std::vector<PauliString> terms)
        : n_central_(n_central), n_bath_(n_bath), terms_(std::move(terms))
    {
        const int n = n_central + n_bath;
        for (const auto& t : terms_)
            if (t.n_sites() != n) throw std::invalid_argument("CompiledModel: term spans wrong number of sites");
        build();
    }

    int n_central() const { return n_central_; }
    int n_bath() const { return n_bath_; }
    int n_sites() const { return n_central_ + n_bath_; }
    Index dim() const { return Index{1} << n_sites(); }
    const std::vector<PauliString>& terms() const { return terms_; }

    double constant() const { return shift_; }

    /// Half-width of an interval around constant() containing the spectrum.
    double spectral_radius() const
    {
        double r = 0.0;
        for (const auto& t : terms_)
            if (!t.is_identity()) r += std::abs(t.coefficient());
        return r;
    }

    /// out = H in. `in` and `out` must not alias.
    void apply(std::span<const Complex> in, std::span<Complex> out) const
    {
        const Index d = dim();
        if (in.size() != d || out.size() != d) throw std::invalid_argument("apply: dimension mismatch");
        if (diagonal_.empty()) {
            for (Index y = 0; y < d; ++y) out[y] = shift_ * in[y];
        } else {
            for (Index y = 0; y < d; ++y) out[y] = (shift_ + diagonal_[y]) * in[y];
        }
        for (const auto& g : groups_) {
            if (g.kernels.size() == 1 && g.kernels.front().phase == 0) {
                const Complex c = g.kernels.front().scale;
                for (Index y = 0; y < d; ++y) out[y] += detail::mul(c, in[y ^ g.flip]);
                continue;
            }
            for (Index y = 0; y < d; ++y) {
                const Index x = y ^ g.flip;
                Complex c{};
                for (const auto& k : g.kernels) c += k.sign(x);
                out[y] += detail::mul(c, in[x]);
            }
        }
    }

private:
    struct FlipGroup {
        Index flip = 0;
        std::vector<PauliKernel> kernels;
    };

    void build()
    {
        std::map<Index, FlipGroup> by_flip;
        std::vector<PauliKernel> diag_terms;
        for (const auto& t : terms_) {
            if (t.is_identity()) {
                shift_ += t.coefficient();
                continue;
            }
            PauliKernel k(t);
            if (k.flip == 0) {
                diag_terms.push_back(k);
            } else {
                auto& g = by_flip[k.flip];
                g.flip = k.flip;
                g.kernels.push_back(k);
            }
        }
        if (!diag_terms.empty()) {
            diagonal_.assign(dim(), 0.0);
            for (Index x = 0; x < dim(); ++x) {
                double v = 0.0;
                for (const auto& k : diag_terms) v += k.sign(x).real();
                diagonal_[x] = v;
            }
        }
        for (auto& [flip, g] : by_flip) groups_.push_back(std::move(g));
    }

    int n_central_ = 0;
    int n_bath_ = 0;
    std::vector<PauliString> terms_;
    double shift_ = 0.0;
    std::vector<double> diagonal_;
    std::vector<FlipGroup> groups_;
};

inline CompiledModel compile(const ModelSpec& spec)
{
    spec.validate();
    const int m = spec.n_central();
    const int n = m + spec.n_bath;
    std::vector<PauliString> terms;

    const auto bath_site = [m](int k) { return m + k; };

    switch (spec.family) {
    case Family::StaticIsing:
    case Family::TransverseBath:
    case Family::BathExchange:
        terms.push_back(PauliString::sparse(n, {{0, Pauli::X}}, spec.delta));
        for (int k = 0; k < spec.n_bath; ++k)
            terms.push_back(PauliString::sparse(n, {{0, Pauli::Z}, {bath_site(k), Pauli::Z}}, spec.couplings[k]));
        if (spec.family == Family::TransverseBath && spec.hx != 0.0)
            for (int k = 0; k < spec.n_bath; ++k)
                terms.push_back(PauliString::sparse(n, {{bath_site(k), Pauli::X}}, spec.hx));
        if (spec.family == Family::BathExchange)
            for (int k = 0; k < spec.n_bath; ++k)
                for (int l = k + 1; l < spec.n_bath; ++l) {
                    const double a = spec.exchange[k * spec.n_bath + l];
                    if (a != 0.0)
                        terms.push_back(PauliString::sparse(
                            n, {{bath_site(k), Pauli::X}, {bath_site(l), Pauli::X}}, a));
                }
        break;
    case Family::TwoSpinHeisenberg: {
        // 2J s1.s2 + J/2 with s = sigma/2.
        const double j = spec.j_central;
        for (auto p : {Pauli::X, Pauli::Y, Pauli::Z})
            terms.push_back(PauliString::sparse(n, {{0, p}, {1, p}}, j / 2));
        terms.push_back(PauliString(std::vector<Pauli>(n, Pauli::I), j / 2));
        // sum_k J_k (s1 + s2).sigma_k
        for (int k = 0; k < spec.n_bath; ++k)
            for (int c = 0; c < 2; ++c)
                for (auto p : {Pauli::X, Pauli::Y, Pauli::Z})
                    terms.push_back(PauliString::sparse(n, {{c, p}, {bath_site(k), p}}, spec.couplings[k] / 2));
        break;
    }
    }
    return CompiledModel(m, spec.n_bath, std::move(terms));
}

inline StateVector apply_hamiltonian(const CompiledModel& model, const StateVector& s)
{
    if (s.n_central() != model.n_central() || s.n_bath() != model.n_bath())
        throw std::invalid_argument("apply_hamiltonian: state and model dimensions differ");
    StateVector out(s.n_central(), s.n_bath());
    model.apply(s.amplitudes(), out.amplitudes());
    return out;
}

inline double energy(const CompiledModel& model, const StateVector& s)
{
    return inner(s, apply_hamiltonian(model, s)).real();
}

}  // namespace spinbath
