#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfg/error.hpp"
#include "mfg/grid.hpp"

namespace mfg {

/// Benchmark model families.
///  - LqMeanRev:            dX = (a - δX)dt + σ dW,            P = D + ξm - x
///  - LogMeanRevIsoelastic: dX = (a - δ X log X)dt + σX dW,     P = D (γm)^ξ x^{-ζ}
///  - GeometricIsoelastic:  dX = (a - δX)dt + σX dW,            P = D (γm)^ξ x^{-ζ}
enum class ModelKind { LqMeanRev, LogMeanRevIsoelastic, GeometricIsoelastic };

/// How the population law is summarised into the scalar m_t.
enum class Aggregator { Arithmetic, Geometric };

struct ModelParams {
    double rho = 0.02;
    double D = 1.0;
    double gamma = 1.2;
    double zeta = 0.5;
    double delta = 3.0;
    double sigma = 1.0;
    double xi = 3.8;
    double a_max = 12.0;
    double x0 = 1.0;
};

struct ModelSpec {
    ModelKind kind = ModelKind::LogMeanRevIsoelastic;
    ModelParams params{};
    Aggregator aggregator = Aggregator::Geometric;

    bool isoelastic() const noexcept { return kind != ModelKind::LqMeanRev; }
    /// State space is (0, inf) for the isoelastic kinds and all of R for the LQ kind.
    bool positive_state() const noexcept { return isoelastic(); }
};

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::LqMeanRev: return "lq_meanrev";
        case ModelKind::LogMeanRevIsoelastic: return "log_meanrev_isoelastic";
        case ModelKind::GeometricIsoelastic: return "geometric_isoelastic";
    }
    return "?";
}

inline std::string_view to_string(Aggregator a) {
    return a == Aggregator::Arithmetic ? "arithmetic" : "geometric";
}

/// Throws DomainError describing the first violated parameter constraint.
inline void validate(const ModelSpec& spec) {
    const auto& p = spec.params;
    const auto finite = [](double v) { return std::isfinite(v); };
    detail::require(finite(p.rho) && p.rho > 0.0, "model: rho must be > 0");
    detail::require(finite(p.sigma) && p.sigma >= 0.0, "model: sigma must be >= 0");
    detail::require(finite(p.a_max) && p.a_max >= 0.0, "model: a_max must be >= 0");
    detail::require(finite(p.D) && p.D >= 0.0, "model: D must be >= 0");
    detail::require(finite(p.delta), "model: delta must be finite");
    detail::require(finite(p.xi) && p.xi >= 0.0, "model: xi must be >= 0");
    detail::require(finite(p.x0), "model: x0 must be finite");
    if (spec.isoelastic()) {
        detail::require(finite(p.gamma) && p.gamma > 0.0, "model: gamma must be > 0");
        detail::require(finite(p.zeta) && p.zeta > 0.0 && p.zeta < 1.0, "model: zeta must lie in (0,1)");
        detail::require(p.x0 > 0.0, "model: x0 must be > 0 for isoelastic kinds");
    } else {
        detail::require(spec.aggregator == Aggregator::Arithmetic,
                        "model: lq_meanrev requires the arithmetic aggregator");
    }
}

namespace detail {
inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite input");
}
}  // namespace detail

inline double drift(const ModelSpec& spec, double x, double a) {
    detail::require_finite(x, "drift");
    detail::require_finite(a, "drift");
    const double d = spec.params.delta;
    switch (spec.kind) {
        case ModelKind::LogMeanRevIsoelastic:
            detail::require(x > 0.0, "drift: log mean reversion needs x > 0");
            return a - d * x * std::log(x);
        case ModelKind::LqMeanRev:
        case ModelKind::GeometricIsoelastic:
            return a - d * x;
    }
    return 0.0;
}

inline double diffusion(const ModelSpec& spec, double x) {
    detail::require_finite(x, "diffusion");
    return spec.isoelastic() ? spec.params.sigma * x : spec.params.sigma;
}

inline double price(const ModelSpec& spec, double x, double m) {
    detail::require_finite(x, "price");
    detail::require_finite(m, "price");
    const auto& p = spec.params;
    if (!spec.isoelastic()) return p.D + p.xi * m - x;
    if (!(x > 0.0) || !(m > 0.0)) throw DomainError("price: isoelastic demand needs x > 0 and m > 0");
    return p.D * std::pow(p.gamma * m, p.xi) * std::pow(x, -p.zeta);
}

/// x P(x, m): the running and terminal revenue.
inline double revenue(const ModelSpec& spec, double x, double m) {
    if (!spec.isoelastic()) return x * price(spec, x, m);
    if (!(x > 0.0) || !(m > 0.0)) throw DomainError("revenue: isoelastic demand needs x > 0 and m > 0");
    const auto& p = spec.params;
    return p.D * std::pow(p.gamma * m, p.xi) * std::pow(x, 1.0 - p.zeta);
}

inline double cost(const ModelSpec& spec, double a) {
    detail::require_finite(a, "cost");
    detail::require(a >= 0.0 && a <= spec.params.a_max, "cost: control outside [0, a_max]");
    return 0.5 * a * a;
}

/**
 * Revenue x P(x, m) tabulated over a grid. For the isoelastic kinds the
 * x-dependence x^{1-ζ} is factored out once, so refilling for a new m costs
 * one pow call.
 */
class RevenueTable {
public:
    RevenueTable(const ModelSpec& spec, const SpaceGrid& grid) : spec_(spec), x_(grid.nodes().begin(), grid.nodes().end()) {
        if (spec_.isoelastic()) {
            detail::require(grid.front() > 0.0, "RevenueTable: isoelastic kinds need a positive grid");
            shape_.resize(x_.size());
            for (std::size_t i = 0; i < x_.size(); ++i) shape_[i] = std::pow(x_[i], 1.0 - spec_.params.zeta);
        }
    }

    void fill(double m, std::span<double> out) const {
        const auto& p = spec_.params;
        if (spec_.isoelastic()) {
            if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("revenue: isoelastic demand needs m > 0");
            const double level = p.D * std::pow(p.gamma * m, p.xi);
            for (std::size_t i = 0; i < x_.size(); ++i) out[i] = level * shape_[i];
        } else {
            detail::require_finite(m, "revenue");
            for (std::size_t i = 0; i < x_.size(); ++i) out[i] = x_[i] * (p.D + p.xi * m - x_[i]);
        }
    }

private:
    ModelSpec spec_;
    std::vector<double> x_;
    std::vector<double> shape_;
};

inline constexpr double kMassTolerance = 1e-10;

/// m = E[X] (arithmetic) or exp(E[log X]) (geometric) under a probability mass vector on the grid.
inline double aggregate(const ModelSpec& spec, std::span<const double> mass, const SpaceGrid& grid) {
    detail::require(mass.size() == grid.size(), "aggregate: mass/grid size mismatch");
    double total = 0.0;
    for (double w : mass) {
        detail::require(w >= 0.0, "aggregate: negative mass");
        total += w;
    }
    detail::require(std::abs(total - 1.0) <= kMassTolerance, "aggregate: mass does not sum to 1");
    double acc = 0.0;
    if (spec.aggregator == Aggregator::Arithmetic) {
        for (std::size_t i = 0; i < mass.size(); ++i) acc += grid[i] * mass[i];
        return acc;
    }
    detail::require(grid.front() > 0.0, "aggregate: geometric mean needs a positive grid");
    for (std::size_t i = 0; i < mass.size(); ++i) acc += std::log(grid[i]) * mass[i];
    return std::exp(acc);
}

/// Σ_i mass_i P(x_i, m).
inline double mean_price(const ModelSpec& spec, std::span<const double> mass, const SpaceGrid& grid, double m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i)
        if (mass[i] != 0.0) acc += mass[i] * price(spec, grid[i], m);
    return acc;
}

/// Σ_i mass_i log P(x_i, m); isoelastic kinds only.
inline double mean_log_price(const ModelSpec& spec, std::span<const double> mass, const SpaceGrid& grid, double m) {
    detail::require(spec.isoelastic(), "mean_log_price: isoelastic kinds only");
    const auto& p = spec.params;
    const double level = std::log(p.D) + p.xi * std::log(p.gamma * m);
    double acc = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i)
        if (mass[i] != 0.0) acc += mass[i] * (level - p.zeta * std::log(grid[i]));
    return acc;
}

// --- structural assumption checks -------------------------------------------

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct SamplePoint {
    double x = 0.0;
    double m = 0.0;
    double xi = 0.0;
    double value = 0.0;
};

struct ConditionCheck {
    std::string name;
    double min_value = std::numeric_limits<double>::infinity();
    double max_value = -std::numeric_limits<double>::infinity();
    std::optional<SamplePoint> first_violation;
    bool holds() const noexcept { return !first_violation.has_value(); }
};

/// Sign conditions on the revenue x P(x, m; ξ) evaluated on a sample lattice.
struct AssumptionReport {
    ConditionCheck concavity;        // ∂xx (xP) <= 0
    ConditionCheck supermod_m;       // ∂x∂m (xP) >= 0
    ConditionCheck supermod_xi;      // ∂x∂ξ (xP) >= 0
    /// Conditions needed for existence and convergence of the iterations.
    bool standing_ok() const noexcept { return concavity.holds() && supermod_m.holds(); }
    bool all_ok() const noexcept { return standing_ok() && supermod_xi.holds(); }
};

struct AssumptionSampling {
    std::size_t n_x = 21;
    std::size_t n_m = 21;
    std::size_t n_xi = 7;
    double rel_step = 1e-5;
    double tolerance = 1e-8;
};

namespace detail {

inline std::vector<double> sample_interval(Interval r, std::size_t n, bool log_scale) {
    if (r.hi == r.lo || n <= 1) return {r.lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = log_scale ? std::exp(std::log(r.lo) + (std::log(r.hi) - std::log(r.lo)) * s)
                           : r.lo + (r.hi - r.lo) * s;
    }
    out.back() = r.hi;
    return out;
}

inline void record(ConditionCheck& c, double sign, double value, double tol, SamplePoint at) {
    const double v = sign * value;
    c.min_value = std::min(c.min_value, v);
    c.max_value = std::max(c.max_value, v);
    if (v < -tol && !c.first_violation) {
        at.value = v;
        c.first_violation = at;
    }
}

}  // namespace detail

/**
 * Central finite differences of f(x, m, ξ) = x P(x, m; ξ) on an x × m × ξ lattice.
 *
 * The concavity entry is reported with flipped sign (−∂xx f), so all three
 * checks read "value >= 0". A point violates a condition if its value is below
 * −(tolerance + roundoff), where roundoff = 1e3·eps·max|f on the stencil| / (h1·h2)
 * bounds the cancellation error of the difference quotient.
 */
inline AssumptionReport verify_assumptions(const ModelSpec& spec, const SpaceGrid& grid, Interval m_range,
                                           Interval xi_range, AssumptionSampling sampling = {}) {
    detail::require(m_range.lo <= m_range.hi && xi_range.lo <= xi_range.hi, "verify_assumptions: empty range");
    if (spec.isoelastic()) detail::require(m_range.lo > 0.0, "verify_assumptions: isoelastic kinds need m > 0");
    detail::require(xi_range.lo >= 0.0, "verify_assumptions: xi must be >= 0");

    const bool pos = spec.positive_state();
    const auto xs = detail::sample_interval({grid.front(), grid.back()}, sampling.n_x, pos && grid.front() > 0.0);
    const auto ms = detail::sample_interval(m_range, sampling.n_m, m_range.lo > 0.0);
    const auto xis = detail::sample_interval(xi_range, sampling.n_xi, false);

    AssumptionReport rep;
    rep.concavity.name = "concavity_in_x";
    rep.supermod_m.name = "supermodularity_x_m";
    rep.supermod_xi.name = "supermodularity_x_xi";

    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (double xi : xis) {
        ModelSpec s = spec;
        const auto f = [&](double x, double m, double xi_v) {
            s.params.xi = xi_v;
            return revenue(s, x, m);
        };
        for (double x : xs) {
            const double hx = sampling.rel_step * (pos ? x : std::max(1.0, std::abs(x)));
            for (double m : ms) {
                const double hm = sampling.rel_step * (m_range.lo > 0.0 ? m : std::max(1.0, std::abs(m)));
                const double hxi = sampling.rel_step * std::max(1.0, xi);
                const SamplePoint at{x, m, xi, 0.0};

                const double f0 = f(x, m, xi), fp = f(x + hx, m, xi), fm = f(x - hx, m, xi);
                const double dxx = (fp - 2.0 * f0 + fm) / (hx * hx);
                const double scale_xx = std::max({std::abs(f0), std::abs(fp), std::abs(fm)});
                detail::record(rep.concavity, -1.0, dxx, sampling.tolerance + 1e3 * eps * scale_xx / (hx * hx), at);

                const double a = f(x + hx, m + hm, xi), b = f(x + hx, m - hm, xi);
                const double c = f(x - hx, m + hm, xi), d = f(x - hx, m - hm, xi);
                const double dxm = (a - b - c + d) / (4.0 * hx * hm);
                const double scale_xm = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
                detail::record(rep.supermod_m, 1.0, dxm, sampling.tolerance + 1e3 * eps * scale_xm / (hx * hm), at);

                const double lo_xi = std::max(0.0, xi - hxi);
                const double hi_xi = xi + hxi;
                const double e = f(x + hx, m, hi_xi), g = f(x + hx, m, lo_xi);
                const double k = f(x - hx, m, hi_xi), l = f(x - hx, m, lo_xi);
                const double dxxi = (e - g - k + l) / (2.0 * hx * (hi_xi - lo_xi));
                const double scale_xxi = std::max({std::abs(e), std::abs(g), std::abs(k), std::abs(l)});
                detail::record(rep.supermod_xi, 1.0, dxxi,
                               sampling.tolerance + 1e3 * eps * scale_xxi / (hx * (hi_xi - lo_xi)), at);
            }
        }
    }
    return rep;
}

}  // namespace mfg
