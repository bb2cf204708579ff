#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mfg/model.hpp"

using namespace mfg;

namespace {

ModelSpec make(ModelKind kind) {
    ModelSpec s;
    s.kind = kind;
    s.aggregator = kind == ModelKind::LqMeanRev ? Aggregator::Arithmetic : Aggregator::Geometric;
    return s;
}

const ModelSpec lq = make(ModelKind::LqMeanRev);
const ModelSpec rev = make(ModelKind::LogMeanRevIsoelastic);
const ModelSpec geo = make(ModelKind::GeometricIsoelastic);

}  // namespace

TEST(Drift, Examples) {
    EXPECT_EQ(drift(rev, 1.0, 0.0), 0.0);
    EXPECT_EQ(drift(geo, 2.0, 12.0), 6.0);
    EXPECT_EQ(drift(lq, 0.0, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(drift(rev, std::exp(1.0), 1.0), 1.0 - 3.0 * std::exp(1.0));
    EXPECT_THROW(drift(rev, 0.0, 0.0), DomainError);
    EXPECT_THROW(drift(geo, NAN, 0.0), DomainError);
    EXPECT_THROW(drift(lq, 1.0, INFINITY), DomainError);
}

TEST(Diffusion, Examples) {
    EXPECT_EQ(diffusion(geo, 1e-300), 1e-300);
    EXPECT_EQ(diffusion(lq, -5.0), 1.0);
    EXPECT_EQ(diffusion(rev, std::exp(1.0)), std::exp(1.0));
    EXPECT_THROW(diffusion(lq, NAN), DomainError);
}

TEST(Price, Examples) {
    EXPECT_DOUBLE_EQ(price(geo, 1.0, 1.0 / 1.2), 1.0);
    EXPECT_EQ(price(lq, 1.0, 0.0), 0.0);
    // 1.2^3.8 to 30 digits: 1.99934957629984776381484792231
    EXPECT_NEAR(price(geo, 1.0, 1.0), 1.99934957629984776, 2e-15);
    EXPECT_THROW(price(geo, 0.0, 1.0), DomainError);
    EXPECT_THROW(price(rev, 1.0, -1.0), DomainError);
    // polynomial price is defined for negative production
    EXPECT_EQ(price(lq, -2.0, 1.0), 1.0 + 3.8 + 2.0);
}

TEST(Revenue, MatchesXTimesPrice) {
    for (double x : {1e-6, 0.3, 1.0, 7.0})
        for (double m : {0.1, 1.0, 3.0}) {
            EXPECT_NEAR(revenue(geo, x, m), x * price(geo, x, m), 1e-13 * std::abs(revenue(geo, x, m)));
            EXPECT_DOUBLE_EQ(revenue(lq, x, m), x * price(lq, x, m));
        }
}

TEST(Cost, Examples) {
    EXPECT_EQ(cost(geo, 0.0), 0.0);
    EXPECT_EQ(cost(geo, 12.0), 72.0);
    EXPECT_THROW(cost(geo, -1.0), DomainError);
    EXPECT_THROW(cost(geo, 12.5), DomainError);
}

TEST(Validate, RejectsOutOfDomainParameters) {
    EXPECT_NO_THROW(validate(rev));
    EXPECT_NO_THROW(validate(lq));
    auto bad = [](ModelSpec s, auto mutate) {
        mutate(s);
        return s;
    };
    EXPECT_THROW(validate(bad(geo, [](ModelSpec& s) { s.params.zeta = 1.5; })), DomainError);
    EXPECT_THROW(validate(bad(geo, [](ModelSpec& s) { s.params.zeta = 0.0; })), DomainError);
    EXPECT_THROW(validate(bad(geo, [](ModelSpec& s) { s.params.gamma = 0.0; })), DomainError);
    EXPECT_THROW(validate(bad(geo, [](ModelSpec& s) { s.params.rho = 0.0; })), DomainError);
    EXPECT_THROW(validate(bad(geo, [](ModelSpec& s) { s.params.xi = -0.1; })), DomainError);
    EXPECT_THROW(validate(bad(geo, [](ModelSpec& s) { s.params.sigma = -1.0; })), DomainError);
    EXPECT_THROW(validate(bad(geo, [](ModelSpec& s) { s.params.x0 = 0.0; })), DomainError);
    EXPECT_THROW(validate(bad(lq, [](ModelSpec& s) { s.aggregator = Aggregator::Geometric; })), DomainError);
    // the isoelastic kinds accept either aggregator; LQ allows any x0
    EXPECT_NO_THROW(validate(bad(geo, [](ModelSpec& s) { s.aggregator = Aggregator::Arithmetic; })));
    EXPECT_NO_THROW(validate(bad(lq, [](ModelSpec& s) { s.params.x0 = -3.0; })));
}

TEST(Aggregate, Examples) {
    const SpaceGrid g3({1.0, 2.0, 3.0}, Spacing::Linear);
    const std::vector<double> third{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    EXPECT_NEAR(aggregate(lq, third, g3), 2.0, 1e-15);

    const double e = std::exp(1.0);
    const SpaceGrid g({1.0, e, e * e}, Spacing::Log);
    EXPECT_NEAR(aggregate(geo, std::vector<double>{0.5, 0.0, 0.5}, g), e, 1e-15);
    EXPECT_EQ(aggregate(geo, std::vector<double>{1.0, 0.0, 0.0}, g), 1.0);

    EXPECT_THROW(aggregate(lq, std::vector<double>{0.5, 0.5, 0.5}, g3), DomainError);
    EXPECT_THROW(aggregate(lq, std::vector<double>{1.5, -0.5, 0.0}, g3), DomainError);
    EXPECT_THROW(aggregate(lq, std::vector<double>{1.0, 0.0}, g3), DomainError);
    // within the 1e-10 normalisation tolerance
    EXPECT_NO_THROW(aggregate(lq, std::vector<double>{0.5 + 5e-11, 0.5, 0.0}, g3));
}

TEST(MeanLogPrice, IdentityUnderGeometricAggregate) {
    const auto g = build_log_grid(0.01, 100.0, 41);
    std::vector<double> mass(g.size());
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += mass[i] = 1.0 + std::sin(static_cast<double>(i));
    for (double& w : mass) w /= s;
    const double m = aggregate(rev, mass, g);
    const auto& p = rev.params;
    EXPECT_NEAR(mean_log_price(rev, mass, g, m),
                std::log(p.D) + p.xi * std::log(p.gamma) + (p.xi - p.zeta) * std::log(m), 1e-12);
    EXPECT_THROW(mean_log_price(lq, mass, g, 1.0), DomainError);
}

TEST(VerifyAssumptions, GeometricBaselineOnModerateRange) {
    const auto g = build_log_grid(0.1, 10.0, 51);
    const auto rep = verify_assumptions(geo, g, {0.1, 10.0}, {0.0, 3.8});
    EXPECT_TRUE(rep.concavity.holds());
    EXPECT_TRUE(rep.supermod_m.holds());
    EXPECT_TRUE(rep.standing_ok());
    EXPECT_GE(rep.concavity.min_value, 0.0);
    // ∂x∂m vanishes at ξ = 0
    EXPECT_EQ(rep.supermod_m.min_value, 0.0);
    EXPECT_GT(rep.supermod_m.max_value, 0.0);
}

TEST(VerifyAssumptions, XiSupermodularityFailsBelowOneOverGamma) {
    // ∂x∂ξ (xP) = (1−ζ) x^{−ζ} D (γm)^ξ log(γm) < 0 when γm < 1
    const auto g = build_log_grid(0.1, 10.0, 51);
    const auto low = verify_assumptions(geo, g, {0.1, 0.5}, {0.0, 3.8});
    EXPECT_FALSE(low.supermod_xi.holds());
    ASSERT_TRUE(low.supermod_xi.first_violation.has_value());
    EXPECT_LT(1.2 * low.supermod_xi.first_violation->m, 1.0);
    const auto high = verify_assumptions(geo, g, {1.0, 10.0}, {0.0, 3.8});
    EXPECT_TRUE(high.all_ok());
}

TEST(VerifyAssumptions, LqClosedFormSecondDerivatives) {
    ModelSpec s = lq;
    s.params.xi = 1.0;
    const auto g = build_linear_grid(-4.0, 6.0, 11);
    const auto rep = verify_assumptions(s, g, {0.0, 3.0}, {1.0, 1.0});
    // ∂x∂m = ξ = 1 and −∂xx = 2 at every sample
    EXPECT_NEAR(rep.supermod_m.min_value, 1.0, 1e-4);
    EXPECT_NEAR(rep.supermod_m.max_value, 1.0, 1e-4);
    EXPECT_NEAR(rep.concavity.min_value, 2.0, 1e-3);
    EXPECT_NEAR(rep.concavity.max_value, 2.0, 1e-3);
    EXPECT_TRUE(rep.all_ok());
}

TEST(VerifyAssumptions, RejectsEmptyRanges) {
    const auto g = build_log_grid(0.1, 10.0, 11);
    EXPECT_THROW(verify_assumptions(geo, g, {2.0, 1.0}, {0.0, 1.0}), DomainError);
    EXPECT_THROW(verify_assumptions(geo, g, {0.0, 1.0}, {0.0, 1.0}), DomainError);
    EXPECT_THROW(verify_assumptions(geo, g, {1.0, 2.0}, {-1.0, 1.0}), DomainError);
}

// Property tests over random samples.

TEST(ModelProperty, RevenueNondecreasingInM) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lx(-10.0, 10.0), lm(-5.0, 5.0);
    for (const auto& s : {rev, geo})
        for (int i = 0; i < 2000; ++i) {
            const double x = std::exp(lx(rng)), m = std::exp(lm(rng)), mb = m * std::exp(std::abs(lm(rng)));
            ASSERT_LE(revenue(s, x, m), revenue(s, x, mb)) << "x=" << x << " m=" << m << " mbar=" << mb;
        }
}

TEST(ModelProperty, IncreasingDifferencesInXAndM) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> lx(-8.0, 8.0), lm(-4.0, 4.0), step(0.0, 3.0);
    for (const auto& s : {rev, geo}) {
        for (int i = 0; i < 2000; ++i) {
            const double x = std::exp(lx(rng)), xb = x * std::exp(step(rng));
            const double m = std::exp(lm(rng)), mb = m * std::exp(step(rng));
            const double hi = revenue(s, xb, mb) - revenue(s, xb, m);
            const double lo = revenue(s, x, mb) - revenue(s, x, m);
            ASSERT_GE(hi, lo - 1e-12 * std::max(std::abs(hi), std::abs(lo)));
        }
    }
    ModelSpec s = lq;
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng), xb = x + step(rng), m = u(rng), mb = m + step(rng);
        ASSERT_GE(revenue(s, xb, mb) - revenue(s, xb, m), revenue(s, x, mb) - revenue(s, x, m) - 1e-10);
    }
}

TEST(ModelProperty, CostIsConvex) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 12.0);
    for (int i = 0; i < 5000; ++i) {
        const double a = u(rng), b = u(rng);
        ASSERT_LE(cost(geo, 0.5 * (a + b)), 0.5 * (cost(geo, a) + cost(geo, b)) + 1e-12);
    }
}

TEST(RevenueTable, MatchesPointwiseRevenue) {
    const auto g = build_log_grid(std::exp(-15.0), std::exp(15.0), 101);
    for (const auto& s : {rev, geo}) {
        const RevenueTable t(s, g);
        std::vector<double> out(g.size());
        for (double m : {1e-3, 0.7, 2.5}) {
            t.fill(m, out);
            for (std::size_t i = 0; i < g.size(); ++i)
                ASSERT_NEAR(out[i], revenue(s, g[i], m), 1e-12 * std::abs(revenue(s, g[i], m)));
        }
        EXPECT_THROW(t.fill(0.0, out), DomainError);
    }
    const auto lg = build_linear_grid(-4.0, 6.0, 21);
    const RevenueTable t(lq, lg);
    std::vector<double> out(lg.size());
    t.fill(-0.5, out);
    for (std::size_t i = 0; i < lg.size(); ++i) ASSERT_DOUBLE_EQ(out[i], revenue(lq, lg[i], -0.5));
}
