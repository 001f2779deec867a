#pragma once

// Test-side dense reference: every Pauli string as an explicit Kronecker product.

#include <spinbath/hilbert.hpp>
#include <spinbath/models.hpp>

#include <Eigen/Dense>

#include <random>

namespace spinbath::testing {

inline Eigen::Matrix2cd pauli_matrix(Pauli p)
{
    using C = std::complex<double>;
    Eigen::Matrix2cd m;
    // rows/cols: 0 = down, 1 = up
    switch (p) {
    case Pauli::I: m << 1, 0, 0, 1; break;
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, C(0, 1), C(0, -1), 0; break;
    case Pauli::Z: m << -1, 0, 0, 1; break;
    }
    return m;
}

inline Eigen::MatrixXcd kron_matrix(const PauliString& p)
{
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    // site 0 is the least significant bit, so it is the rightmost factor
    for (int site = 0; site < p.n_sites(); ++site) {
        const Eigen::Matrix2cd f = pauli_matrix(p[site]);
        Eigen::MatrixXcd next(m.rows() * 2, m.cols() * 2);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) next.block(a * m.rows(), b * m.cols(), m.rows(), m.cols()) = f(a, b) * m;
        m = std::move(next);
    }
    return p.coefficient() * m;
}

inline Eigen::MatrixXcd kron_hamiltonian(const CompiledModel& model)
{
    const auto d = static_cast<Eigen::Index>(model.dim());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& t : model.terms()) h += kron_matrix(t);
    return h;
}

inline Eigen::VectorXcd to_eigen(const StateVector& s)
{
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s.dim()));
    for (Index i = 0; i < s.dim(); ++i) v(static_cast<Eigen::Index>(i)) = s[i];
    return v;
}

inline StateVector from_eigen(int m, int n, const Eigen::VectorXcd& v)
{
    StateVector s(m, n);
    for (Index i = 0; i < s.dim(); ++i) s[i] = v(static_cast<Eigen::Index>(i));
    return s;
}

inline StateVector random_state(int m, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    StateVector s(m, n);
    for (Index i = 0; i < s.dim(); ++i) s[i] = Complex(g(rng), g(rng));
    s.normalize();
    return s;
}

inline std::vector<double> random_couplings(int n, std::uint64_t seed, double scale = 0.125)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> j(n);
    for (auto& v : j) v = u(rng);
    return j;
}

/// Reference propagation exp(-iHt) psi by eigendecomposition of the Kronecker H.
inline StateVector kron_evolve(const CompiledModel& model, const StateVector& s0, double t)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(kron_hamiltonian(model));
    const Eigen::VectorXcd phases = (es.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp();
    const Eigen::VectorXcd v = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * to_eigen(s0)));
    return from_eigen(s0.n_central(), s0.n_bath(), v);
}

}  // namespace spinbath::testing
