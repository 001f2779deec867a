#pragma once

// Measured quantities: Pauli expectations, reduced density matrices of the
// central system, quadratic entropy, two-spin correlations and the
// singlet/triplet representation of a two-spin density matrix.

#include <spinbath/hilbert.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinbath {

enum class Axis { X, Y, Z };

inline Pauli to_pauli(Axis a)
{
    switch (a) {
    case Axis::X: return Pauli::X;
    case Axis::Y: return Pauli::Y;
    case Axis::Z: return Pauli::Z;
    }
    return Pauli::I;
}

inline double expect_pauli(const StateVector& s, const PauliString& p)
{
    if (p.n_sites() != s.n_sites()) throw std::invalid_argument("expect_pauli: site-count mismatch");
    const PauliKernel k(p);
    Complex acc{};
    for (Index y = 0; y < s.dim(); ++y) {
        const Index x = y ^ k.flip;
        acc += std::conj(s[y]) * k.sign(x) * s[x];
    }
    const double scale = std::max(1.0, std::abs(p.coefficient()) * s.norm_squared());
    if (std::abs(acc.imag()) > 1e-12 * scale)
        throw std::logic_error("expect_pauli: expectation has imaginary part " + std::to_string(acc.imag()));
    return acc.real();
}

/// <sigma_site^z> over the full state.
inline double site_magnetization_z(const StateVector& s, int site)
{
    if (site < 0 || site >= s.n_sites()) throw std::invalid_argument("site_magnetization_z: bad site");
    double m = 0.0;
    for (Index x = 0; x < s.dim(); ++x) m += ((x >> site) & 1 ? 1.0 : -1.0) * std::norm(s[x]);
    return m;
}

/// sum over all sites of <sigma^z>.
inline double total_magnetization_z(const StateVector& s)
{
    const int n = s.n_sites();
    double m = 0.0;
    for (Index x = 0; x < s.dim(); ++x) m += (2 * std::popcount(x) - n) * std::norm(s[x]);
    return m;
}

enum class Basis { Computational, Coupled };

struct DensityMatrix {
    Eigen::MatrixXcd entries;
    Basis basis = Basis::Computational;

    int dim() const { return static_cast<int>(entries.rows()); }

    void validate(double tol = 1e-12) const
    {
        const auto d = entries.rows();
        if (d != entries.cols() || (d != 2 && d != 4))
            throw std::invalid_argument("DensityMatrix: must be 2x2 or 4x4");
        if ((entries - entries.adjoint()).cwiseAbs().maxCoeff() > tol)
            throw std::logic_error("DensityMatrix: not Hermitian");
        if (std::abs(entries.trace() - Complex(1.0)) > tol)
            throw std::logic_error("DensityMatrix: trace differs from 1");
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::logic_error("DensityMatrix: negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
    }
};

/// Partial trace over the bath. Entry (a, a') uses the central bit pattern as index.
inline DensityMatrix reduced_density_matrix(const StateVector& s, int n_central)
{
    if (n_central != s.n_central()) throw std::invalid_argument("reduced_density_matrix: wrong central count");
    const Index d = Index{1} << n_central;
    const Index bath_dim = s.dim() >> n_central;
    DensityMatrix rho{Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)),
                      Basis::Computational};
    for (Index b = 0; b < bath_dim; ++b) {
        const Index base = b << n_central;
        for (Index i = 0; i < d; ++i) {
            const Complex ai = s[base | i];
            for (Index j = 0; j <= i; ++j) rho.entries(i, j) += ai * std::conj(s[base | j]);
        }
    }
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j) rho.entries(i, j) = std::conj(rho.entries(j, i));
    return rho;
}

/// Tr(rho P) for a Pauli string over the central sites ("Z", "XX", "IZ", ...).
inline double expect_local(const DensityMatrix& rho, std::string_view letters)
{
    if (rho.basis != Basis::Computational) throw std::invalid_argument("expect_local: needs computational basis");
    const PauliString p = PauliString::parse(letters);
    if ((Index{1} << p.n_sites()) != static_cast<Index>(rho.dim()))
        throw std::invalid_argument("expect_local: string length does not match density matrix");
    const PauliKernel k(p);
    Complex acc{};
    // Tr(rho P) = sum_x rho(x, y) <y|P|x>, y = x ^ flip
    for (Index x = 0; x < static_cast<Index>(rho.dim()); ++x) {
        const Index y = x ^ k.flip;
        acc += rho.entries(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) * k.sign(x);
    }
    return acc.real();
}

inline double quadratic_entropy(const DensityMatrix& rho)
{
    // Tr rho^2 = sum |rho_ij|^2 for Hermitian rho.
    return 1.0 - rho.entries.cwiseAbs2().sum();
}

inline double von_neumann_entropy(const DensityMatrix& rho)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.entries, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (double p : es.eigenvalues())
        if (p > 1e-300) s -= p * std::log(p);
    return s;
}

/// <sigma_1^alpha sigma_2^beta> for a state with two central spins.
inline double correlation(const StateVector& s, Axis alpha, Axis beta)
{
    if (s.n_central() != 2) throw std::invalid_argument("correlation: state must have two central spins");
    std::string letters(static_cast<std::size_t>(s.n_sites()), 'I');
    letters[0] = "XYZ"[static_cast<int>(alpha)];
    letters[1] = "XYZ"[static_cast<int>(beta)];
    return expect_pauli(s, PauliString::parse(letters));
}

/// Columns: |s=0>, |1,-1>, |1,0>, |1,+1> expressed in the computational basis
/// (bit 0 = spin 1, bit 1 = spin 2, set bit = up).
inline Eigen::Matrix4cd coupled_basis()
{
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
    u(1, 0) = r;    // singlet: (|ud> - |du>)/sqrt2
    u(2, 0) = -r;
    u(0, 1) = 1.0;  // |dd>
    u(1, 2) = r;    // (|ud> + |du>)/sqrt2
    u(2, 2) = r;
    u(3, 3) = 1.0;  // |uu>
    return u;
}

namespace coupled {
inline constexpr int kSinglet = 0;
inline constexpr int kTripletMinus = 1;
inline constexpr int kTripletZero = 2;
inline constexpr int kTripletPlus = 3;
}  // namespace coupled

inline DensityMatrix to_coupled_basis(const DensityMatrix& rho)
{
    if (rho.dim() != 4) throw std::invalid_argument("to_coupled_basis: needs a 4x4 density matrix");
    if (rho.basis != Basis::Computational) throw std::invalid_argument("to_coupled_basis: already in coupled basis");
    const Eigen::Matrix4cd u = coupled_basis();
    return {u.adjoint() * rho.entries * u, Basis::Coupled};
}

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::string label;

    std::size_t size() const { return times.size(); }

    void validate() const
    {
        if (times.size() != values.size()) throw std::invalid_argument("TimeSeries: length mismatch");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1])) throw std::invalid_argument("TimeSeries: times must be strictly increasing");
    }
};

}  // namespace spinbath
