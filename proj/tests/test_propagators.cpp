#include "support.hpp"

#include <spinbath/propagators.hpp>

#include <gtest/gtest.h>

using namespace spinbath;
using namespace spinbath::testing;

namespace {

ModelSpec ising(int n, std::uint64_t seed, double delta = 4.0)
{
    ModelSpec s;
    s.family = Family::StaticIsing;
    s.delta = delta;
    s.n_bath = n;
    s.couplings = random_couplings(n, seed);
    return s;
}

}  // namespace

TEST(StaticIsing, MatchesKroneckerReference)
{
    const auto spec = ising(4, 1);
    const auto model = compile(spec);
    const auto s0 = random_state(1, 4, 2);
    for (double t : {0.0, 0.1, 1.0, 10.0, 100.0})
        EXPECT_LT(distance(evolve_static_ising(spec, s0, t), kron_evolve(model, s0, t)), 1e-11) << t;
}

TEST(StaticIsing, ZeroCouplingsGivePureRotation)
{
    ModelSpec spec = ising(2, 1, 1.5);
    spec.couplings = {0.0, 0.0};
    const auto s0 = random_bath_product(basis_state(1, 0, "1"), 2, 3);
    for (double t : {0.3, 2.0, 7.5}) {
        const auto s = evolve_static_ising(spec, s0, t);
        double z = 0.0;
        for (Index x = 0; x < s.dim(); ++x) z += ((x & 1) ? 1.0 : -1.0) * std::norm(s[x]);
        EXPECT_NEAR(z, std::cos(2.0 * 1.5 * t), 1e-14);
    }
}

TEST(StaticIsing, ZeroFieldConfigurationUsesLimit)
{
    // delta = 0 and couplings that cancel on some configurations: omega = 0 there.
    ModelSpec spec = ising(2, 1, 0.0);
    spec.couplings = {0.25, 0.25};
    const auto model = compile(spec);
    const auto s0 = random_state(1, 2, 4);
    EXPECT_LT(distance(evolve_static_ising(spec, s0, 3.0), kron_evolve(model, s0, 3.0)), 1e-13);
}

TEST(StaticIsing, SamplerMatchesDirectEvaluation)
{
    const auto spec = ising(5, 7);
    const StaticIsingEvolver ev(spec);
    const auto s0 = random_state(1, 5, 8);
    double worst = 0.0;
    std::size_t count = 0;
    ev.sample(s0, 0.037, 700, [&](double t, const StateVector& psi) {
        worst = std::max(worst, distance(psi, ev.evolve(s0, t)));
        ++count;
    });
    EXPECT_EQ(count, 700u);
    EXPECT_LT(worst, 1e-12);
}

TEST(StaticIsing, RejectsOtherFamiliesAndShapes)
{
    ModelSpec b = ising(2, 1);
    b.family = Family::TransverseBath;
    EXPECT_THROW(StaticIsingEvolver{b}, std::invalid_argument);
    EXPECT_THROW(evolve_static_ising(ising(2, 1), StateVector(1, 3), 1.0), std::invalid_argument);
}

TEST(ChebyshevCoefficients, ConvergeAndThrowPastCap)
{
    const auto a = detail::chebyshev_coefficients(2.0, 3.0, 1e-12, 10000);
    EXPECT_GT(a.size(), 6u);
    EXPECT_LT(std::abs(a.back()), 1e-13);
    EXPECT_THROW(detail::chebyshev_coefficients(2.0, 3.0, 1e-12, 5), ConvergenceError);
}

TEST(Chebyshev, MatchesKroneckerForEveryFamily)
{
    for (auto f : {Family::StaticIsing, Family::TransverseBath, Family::BathExchange, Family::TwoSpinHeisenberg}) {
        ModelSpec spec;
        spec.family = f;
        spec.n_bath = 4;
        spec.couplings = random_couplings(4, 12);
        if (f == Family::TwoSpinHeisenberg)
            spec.j_central = 8.0;
        else
            spec.delta = 4.0;
        if (f == Family::TransverseBath) spec.hx = 0.7;
        if (f == Family::BathExchange) spec.exchange = random_exchange(4, 0.05, 1);
        const auto model = compile(spec);
        const auto s0 = random_state(spec.n_central(), 4, 13);
        for (double t : {0.5, 25.0, 400.0})
            EXPECT_LT(distance(evolve_polynomial(model, s0, t), kron_evolve(model, s0, t)), 1e-10)
                << to_string(f) << " t=" << t;
    }
}

TEST(Chebyshev, PreservesNorm)
{
    const auto model = compile(ising(6, 2));
    const auto s0 = random_state(1, 6, 3);
    for (double t : {1.0, 50.0, 3000.0}) EXPECT_LT(std::abs(evolve_polynomial(model, s0, t).norm() - 1.0), 1e-12);
}

TEST(Chebyshev, LongTimesUseSeveralSegments)
{
    const auto model = compile(ising(3, 5));
    const ChebyshevPropagator prop(model);
    const double t = 3.5 * prop.max_segment();
    const auto s0 = random_state(1, 3, 1);
    EXPECT_LT(distance(prop.evolve(s0, t), kron_evolve(model, s0, t)), 1e-9);
}

TEST(Chebyshev, SampleMatchesEvolve)
{
    ModelSpec spec = ising(4, 9);
    spec.family = Family::TransverseBath;
    spec.hx = 0.3;
    const auto model = compile(spec);
    const ChebyshevPropagator prop(model);
    const auto s0 = random_state(1, 4, 10);
    std::vector<double> times;
    double worst = 0.0;
    prop.sample(s0, 0.05, 500, [&](double t, const StateVector& psi) {
        times.push_back(t);
        worst = std::max(worst, distance(psi, kron_evolve(model, s0, t)));
    });
    ASSERT_EQ(times.size(), 500u);
    EXPECT_EQ(times.front(), 0.0);
    EXPECT_DOUBLE_EQ(times.back(), 499 * 0.05);
    EXPECT_LT(worst, 1e-10);
}

TEST(Chebyshev, SampleWithWideSpacingSteps)
{
    const auto model = compile(ising(3, 2));
    const ChebyshevPropagator prop(model);
    const auto s0 = random_state(1, 3, 6);
    double worst = 0.0;
    prop.sample(s0, 100.0 / prop.radius(), 5, [&](double t, const StateVector& psi) {
        worst = std::max(worst, distance(psi, kron_evolve(model, s0, t)));
    });
    EXPECT_LT(worst, 1e-10);
}

TEST(Chebyshev, ZeroRadiusIsAPhase)
{
    ModelSpec spec = ising(2, 1, 0.0);
    spec.couplings = {0.0, 0.0};
    const auto model = compile(spec);
    const auto s0 = random_state(1, 2, 1);
    EXPECT_LT(distance(evolve_polynomial(model, s0, 5.0), s0), 1e-15);
    std::size_t n = 0;
    ChebyshevPropagator(model).sample(s0, 0.1, 4, [&](double, const StateVector& psi) {
        EXPECT_LT(distance(psi, s0), 1e-15);
        ++n;
    });
    EXPECT_EQ(n, 4u);
}

TEST(Chebyshev, RejectsBadArguments)
{
    const auto model = compile(ising(2, 1));
    EXPECT_THROW(ChebyshevPropagator(model, 0.0), std::invalid_argument);
    EXPECT_THROW(evolve_polynomial(model, StateVector(1, 2), -1.0), std::invalid_argument);
    EXPECT_THROW(evolve_polynomial(model, StateVector(1, 3), 1.0), std::invalid_argument);
    PropagatorConfig bad;
    bad.tolerance = -1.0;
    EXPECT_THROW(evolve_polynomial(model, StateVector(1, 2), 1.0, bad), std::invalid_argument);
}

TEST(DenseOracle, RefusesLargeSystems)
{
    const auto model = compile(ising(kDenseOracleMaxSpins, 1));
    EXPECT_THROW(dense_hamiltonian(model), std::length_error);
}

TEST(DenseOracle, UnitaryAndConsistent)
{
    const auto model = compile(ising(3, 4));
    const DenseEvolver ev(model);
    const auto s0 = random_state(1, 3, 2);
    const auto a = ev.evolve(s0, 2.0);
    EXPECT_NEAR(a.norm(), 1.0, 1e-13);
    EXPECT_LT(distance(ev.evolve(a, 3.0), ev.evolve(s0, 5.0)), 1e-12);
    EXPECT_LT(distance(dense_oracle(model, s0, 2.0), a), 1e-13);
}

TEST(Methods, Names)
{
    EXPECT_EQ(to_string(Method::ExactStaticIsing), "exact_static_ising");
    EXPECT_EQ(to_string(Method::Polynomial), "polynomial");
    EXPECT_EQ(to_string(Method::DenseOracle), "dense_oracle");
}
