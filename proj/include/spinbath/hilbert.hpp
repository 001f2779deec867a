#pragma once

// Joint central-spin + bath pure states and matrix-free Pauli-string kernels.
//
// Basis convention: bits 0..M-1 index the central spins, bits M..M+N-1 the
// bath spins. A set bit is the spin-up eigenstate of sigma_z, so
// Z|1> = +|1>, Z|0> = -|0>, Y|1> = i|0>, Y|0> = -i|1>.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spinbath {

using Complex = std::complex<double>;
using Index = std::uint64_t;

inline constexpr int kMaxSpins = 26;

class StateVector {
public:
    StateVector() = default;

    StateVector(int n_central, int n_bath)
        : n_central_(n_central), n_bath_(n_bath)
    {
        if (n_central < 0 || n_bath < 0 || n_central + n_bath > kMaxSpins)
            throw std::invalid_argument("StateVector: spin counts out of range");
        amps_.assign(Index{1} << (n_central + n_bath), Complex{});
    }

    StateVector(int n_central, int n_bath, std::vector<Complex> amps)
        : StateVector(n_central, n_bath)
    {
        if (amps.size() != amps_.size())
            throw std::invalid_argument("StateVector: amplitude count does not match 2^(M+N)");
        amps_ = std::move(amps);
    }

    int n_central() const { return n_central_; }
    int n_bath() const { return n_bath_; }
    int n_sites() const { return n_central_ + n_bath_; }
    Index dim() const { return amps_.size(); }

    std::span<const Complex> amplitudes() const { return amps_; }
    std::span<Complex> amplitudes() { return amps_; }
    const Complex& operator[](Index i) const { return amps_[i]; }
    Complex& operator[](Index i) { return amps_[i]; }

    double norm_squared() const
    {
        double s = 0.0;
        for (const auto& a : amps_) s += std::norm(a);
        return s;
    }
    double norm() const { return std::sqrt(norm_squared()); }

    void normalize()
    {
        const double n = norm();
        if (n == 0.0) throw std::domain_error("StateVector: cannot normalize the zero vector");
        for (auto& a : amps_) a /= n;
    }

    bool same_shape(const StateVector& o) const
    {
        return n_central_ == o.n_central_ && n_bath_ == o.n_bath_;
    }

private:
    int n_central_ = 0;
    int n_bath_ = 0;
    std::vector<Complex> amps_;
};

inline Complex inner(const StateVector& a, const StateVector& b)
{
    if (!a.same_shape(b)) throw std::invalid_argument("inner: shape mismatch");
    Complex s{};
    for (Index i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double distance(const StateVector& a, const StateVector& b)
{
    if (!a.same_shape(b)) throw std::invalid_argument("distance: shape mismatch");
    double s = 0.0;
    for (Index i = 0; i < a.dim(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

enum class Pauli : std::uint8_t { I, X, Y, Z };

/// A real coefficient times a tensor product of single-site Pauli operators.
class PauliString {
public:
    PauliString() = default;

    PauliString(std::vector<Pauli> letters, double coefficient = 1.0)
        : letters_(std::move(letters)), coeff_(coefficient)
    {
        if (letters_.size() > kMaxSpins) throw std::invalid_argument("PauliString: too many sites");
    }

    /// Parses "XIZY" style text; character k is site k.
    static PauliString parse(std::string_view text, double coefficient = 1.0)
    {
        std::vector<Pauli> letters;
        letters.reserve(text.size());
        for (char c : text) {
            switch (c) {
            case 'I': letters.push_back(Pauli::I); break;
            case 'X': letters.push_back(Pauli::X); break;
            case 'Y': letters.push_back(Pauli::Y); break;
            case 'Z': letters.push_back(Pauli::Z); break;
            default: throw std::invalid_argument(std::string("PauliString: bad letter '") + c + "'");
            }
        }
        return PauliString(std::move(letters), coefficient);
    }

    /// Identity everywhere except the listed (site, letter) pairs.
    static PauliString sparse(int n_sites, std::initializer_list<std::pair<int, Pauli>> ops,
                              double coefficient = 1.0)
    {
        std::vector<Pauli> letters(static_cast<std::size_t>(n_sites), Pauli::I);
        for (auto [site, p] : ops) {
            if (site < 0 || site >= n_sites) throw std::invalid_argument("PauliString: site out of range");
            letters[static_cast<std::size_t>(site)] = p;
        }
        return PauliString(std::move(letters), coefficient);
    }

    int n_sites() const { return static_cast<int>(letters_.size()); }
    double coefficient() const { return coeff_; }
    Pauli operator[](int site) const { return letters_[static_cast<std::size_t>(site)]; }
    const std::vector<Pauli>& letters() const { return letters_; }

    /// Sites carrying X or Y.
    Index flip_mask() const
    {
        Index m = 0;
        for (int k = 0; k < n_sites(); ++k)
            if (letters_[k] == Pauli::X || letters_[k] == Pauli::Y) m |= Index{1} << k;
        return m;
    }

    /// Sites carrying Z or Y.
    Index phase_mask() const
    {
        Index m = 0;
        for (int k = 0; k < n_sites(); ++k)
            if (letters_[k] == Pauli::Z || letters_[k] == Pauli::Y) m |= Index{1} << k;
        return m;
    }

    int y_count() const
    {
        int n = 0;
        for (auto p : letters_) n += p == Pauli::Y;
        return n;
    }

    bool is_identity() const { return flip_mask() == 0 && phase_mask() == 0; }

    std::string to_string() const
    {
        std::string s;
        for (auto p : letters_) s += "IXYZ"[static_cast<int>(p)];
        return s;
    }

private:
    std::vector<Pauli> letters_;
    double coeff_ = 1.0;
};

namespace detail {

/// Complex product without the C99 Annex G inf/nan recovery path, which
/// otherwise dominates the inner loops.
inline Complex mul(Complex a, Complex b)
{
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline Complex i_power(int n)
{
    switch (n & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

}  // namespace detail

/// Pauli string reduced to bit masks: P|x> = scale * (-1)^popcount(x & phase) |x ^ flip>.
struct PauliKernel {
    Index flip = 0;
    Index phase = 0;
    Complex scale{1.0, 0.0};

    explicit PauliKernel(const PauliString& p)
        : flip(p.flip_mask()), phase(p.phase_mask())
    {
        // (-1)^popcount(~x & phase) = (-1)^popcount(phase) * (-1)^popcount(x & phase)
        const double parity = (std::popcount(phase) & 1) ? -1.0 : 1.0;
        scale = p.coefficient() * detail::i_power(p.y_count()) * parity;
    }

    Complex sign(Index x) const
    {
        return (std::popcount(x & phase) & 1) ? -scale : scale;
    }

    /// out[y] += (P in)[y], gather form over output indices.
    void accumulate(std::span<const Complex> in, std::span<Complex> out) const
    {
        const Index dim = in.size();
        for (Index y = 0; y < dim; ++y) {
            const Index x = y ^ flip;
            out[y] += detail::mul(sign(x), in[x]);
        }
    }
};

inline StateVector basis_state(int n_central, int n_bath, std::string_view bits)
{
    if (static_cast<int>(bits.size()) != n_central + n_bath)
        throw std::invalid_argument("basis_state: bitstring length must equal M+N");
    StateVector s(n_central, n_bath);
    Index idx = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        const char c = bits[k];
        if (c == '1' || c == 'u' || c == 'U')
            idx |= Index{1} << k;
        else if (c != '0' && c != 'd' && c != 'D')
            throw std::invalid_argument("basis_state: bits must be 0/1 (or u/d)");
    }
    s[idx] = 1.0;
    return s;
}

/// Single-spin pure state whose Bloch vector points along (x, y, z); the vector is normalized first.
inline StateVector bloch_state(double x, double y, double z)
{
    const double r = std::sqrt(x * x + y * y + z * z);
    if (r == 0.0) throw std::invalid_argument("bloch_state: zero Bloch vector");
    const double theta = std::acos(std::clamp(z / r, -1.0, 1.0));
    const double phi = std::atan2(y, x);
    StateVector s(1, 0);
    s[1] = std::cos(theta / 2);                                  // up
    s[0] = std::polar(std::sin(theta / 2), phi);                 // down
    return s;
}

/// central (x) |b>, where |b> has i.i.d. standard complex Gaussian coefficients, normalized.
inline StateVector random_bath_product(const StateVector& central, int n_bath, std::uint64_t seed)
{
    if (central.n_bath() != 0) throw std::invalid_argument("random_bath_product: central state must have no bath");
    if (n_bath < 1) throw std::invalid_argument("random_bath_product: n_bath must be >= 1");
    if (std::abs(central.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("random_bath_product: central state must be normalized");

    const Index bath_dim = Index{1} << n_bath;
    std::vector<Complex> bath(bath_dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double nrm = 0.0;
    for (auto& c : bath) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        c = {re, im};
        nrm += re * re + im * im;
    }
    nrm = std::sqrt(nrm);

    StateVector s(central.n_central(), n_bath);
    const int m = central.n_central();
    const Index cdim = central.dim();
    for (Index b = 0; b < bath_dim; ++b)
        for (Index c = 0; c < cdim; ++c) s[c | (b << m)] = central[c] * (bath[b] / nrm);
    return s;
}

inline StateVector apply_pauli_string(const PauliString& p, const StateVector& s)
{
    if (p.n_sites() != s.n_sites()) throw std::invalid_argument("apply_pauli_string: site-count mismatch");
    StateVector out(s.n_central(), s.n_bath());
    PauliKernel(p).accumulate(s.amplitudes(), out.amplitudes());
    return out;
}

}  // namespace spinbath
