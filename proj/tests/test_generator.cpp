#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mfg/generator.hpp"
#include "mfg/tridiagonal.hpp"

using namespace mfg;

namespace {

ModelSpec lq_spec(double delta, double sigma) {
    ModelSpec s;
    s.kind = ModelKind::LqMeanRev;
    s.aggregator = Aggregator::Arithmetic;
    s.params.delta = delta;
    s.params.sigma = sigma;
    return s;
}

SpaceGrid jittered_grid(std::mt19937_64& rng, double lo, double hi, std::size_t n) {
    std::uniform_real_distribution<double> u(0.2, 1.0);
    std::vector<double> nodes(n);
    double x = lo;
    std::vector<double> gaps(n - 1);
    double total = 0.0;
    for (auto& g : gaps) total += g = u(rng);
    nodes[0] = lo;
    for (std::size_t i = 1; i < n; ++i) nodes[i] = x += gaps[i - 1] * (hi - lo) / total;
    nodes.back() = hi;
    return SpaceGrid(nodes, Spacing::Linear);
}

}  // namespace

TEST(Tridiagonal, ThomasSolvesAgainstDenseProduct) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tridiagonal m(50);
    for (std::size_t i = 0; i < 50; ++i) {
        m.lower[i] = i ? u(rng) : 0.0;
        m.upper[i] = i + 1 < 50 ? u(rng) : 0.0;
        m.diag[i] = 3.0 + std::abs(u(rng));
    }
    std::vector<double> x(50);
    for (auto& v : x) v = u(rng);
    const auto b = m * x;
    const auto y = solve_tridiagonal(m, b);
    for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(y[i], x[i], 1e-13);
    Tridiagonal singular(3);
    EXPECT_THROW(solve_tridiagonal(singular, std::vector<double>(3, 1.0)), NumericalError);
}

TEST(Tridiagonal, TransposeAndShift) {
    Tridiagonal m(3);
    m.lower = {0, 1, 2};
    m.diag = {3, 4, 5};
    m.upper = {6, 7, 0};
    const auto t = m.transposed();
    EXPECT_EQ(t.upper[0], 1);
    EXPECT_EQ(t.upper[1], 2);
    EXPECT_EQ(t.lower[1], 6);
    EXPECT_EQ(t.lower[2], 7);
    const auto s = m.shifted(10.0, -2.0);
    EXPECT_EQ(s.diag[1], 2.0);
    EXPECT_EQ(s.lower[2], -4.0);
}

TEST(Generator, RowsSumToZeroWithNonnegativeOffDiagonals) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> a(0.0, 12.0);
    ModelSpec rev;
    const auto lg = build_log_grid(std::exp(-15.0), std::exp(15.0), 501);
    for (const auto& [spec, grid] : {std::pair{rev, lg}, std::pair{lq_spec(3.0, 1.0), build_linear_grid(-4, 6, 201)}}) {
        const Dynamics dyn(spec, grid);
        std::vector<double> policy(grid.size());
        for (int trial = 0; trial < 20; ++trial) {
            for (auto& p : policy) p = a(rng);
            const auto L = dyn.assemble(policy);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                ASSERT_GE(L.lower[i], 0.0);
                ASSERT_GE(L.upper[i], 0.0);
                const double scale = L.lower[i] + L.upper[i];
                ASSERT_NEAR(L.lower[i] + L.diag[i] + L.upper[i], 0.0, 1e-15 * scale);
            }
            EXPECT_EQ(L.lower[0], 0.0);
            EXPECT_EQ(L.upper[grid.size() - 1], 0.0);
        }
    }
}

TEST(Generator, ExactOnAffineFunctionsInTheInterior) {
    std::mt19937_64 rng(3);
    const auto grid = jittered_grid(rng, -4.0, 6.0, 60);
    const auto spec = lq_spec(3.0, 1.5);
    const Dynamics dyn(spec, grid);
    std::vector<double> policy(grid.size()), f(grid.size());
    std::uniform_real_distribution<double> a(0.0, 12.0);
    for (auto& p : policy) p = a(rng);
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = 2.0 * grid[i] - 1.0;
    const auto Lf = dyn.assemble(policy) * f;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
        EXPECT_NEAR(Lf[i], 2.0 * drift(spec, grid[i], policy[i]), 1e-10);
}

TEST(Generator, DiffusionStencilExactOnQuadraticsOnNonuniformGrid) {
    std::mt19937_64 rng(4);
    const auto grid = jittered_grid(rng, -4.0, 6.0, 40);
    const Dynamics dyn(lq_spec(0.0, 1.3), grid);
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = grid[i] * grid[i];
    const auto Lf = dyn.assemble_constant(0.0) * f;
    // ½σ² f'' = σ²
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) EXPECT_NEAR(Lf[i], 1.3 * 1.3, 1e-10);
}

TEST(Generator, NoDriftLeavesTheDomain) {
    const auto grid = build_linear_grid(-1.0, 1.0, 11);
    const Dynamics dyn(lq_spec(0.0, 0.0), grid);
    // a = 5 pushes up everywhere: the top row has no neighbour to move to
    const auto L = dyn.assemble_constant(5.0);
    EXPECT_EQ(L.diag[10], 0.0);
    EXPECT_EQ(L.lower[10], 0.0);
    EXPECT_NEAR(L.upper[0], 5.0 / 0.2, 1e-12);
}

TEST(Generator, AdjointPairingExact) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0), a(0.0, 12.0);
    ModelSpec rev;
    const auto grid = build_log_grid(std::exp(-15.0), std::exp(15.0), 501);
    const Dynamics dyn(rev, grid);
    std::vector<double> policy(grid.size()), x(grid.size()), y(grid.size());
    for (int trial = 0; trial < 20; ++trial) {
        for (auto& p : policy) p = a(rng);
        for (auto& v : x) v = u(rng);
        for (auto& v : y) v = u(rng);
        const auto A = dyn.assemble(policy);
        const auto At = A.transposed();
        const auto Ax = A * x;
        const auto Aty = At * y;
        double lhs = 0.0, rhs = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            lhs += Ax[i] * y[i];
            rhs += x[i] * Aty[i];
            scale += (std::abs(A.lower[i]) + std::abs(A.diag[i]) + std::abs(A.upper[i])) * std::abs(y[i]);
        }
        EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
    }
}
