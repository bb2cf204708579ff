#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mfg/field.hpp"
#include "mfg/problem.hpp"
#include "mfg/tridiagonal.hpp"

namespace mfg {

/// Point mass at x0, split linearly between the two bracketing nodes.
inline std::vector<double> dirac_init(const SpaceGrid& grid, double x0) {
    detail::require(std::isfinite(x0) && x0 >= grid.front() && x0 <= grid.back(), "dirac_init: x0 outside the grid");
    std::vector<double> mass(grid.size(), 0.0);
    const std::size_t j = grid.bracket(x0);
    const double lo = grid[j], hi = grid[j + 1];
    const double tol = 1e-12 * std::max(1.0, std::abs(x0));
    if (std::abs(x0 - lo) <= tol) {
        mass[j] = 1.0;
    } else if (std::abs(hi - x0) <= tol) {
        mass[j + 1] = 1.0;
    } else {
        const double w = (x0 - lo) / (hi - lo);
        mass[j] = 1.0 - w;
        mass[j + 1] = w;
    }
    return mass;
}

struct TransportDiagnostics {
    /// Per step: |Σ g − 1| right after the linear solve.
    std::vector<double> mass_error;
    /// Per step: most negative entry right after the linear solve (0 if none).
    std::vector<double> min_entry;
    std::size_t renormalizations = 0;
};

struct TransportResult {
    DistributionPath mass;
    TransportDiagnostics diagnostics;
};

inline constexpr double kNegativityTolerance = 1e-12;

/**
 * Implicit Kolmogorov forward steps g_{n+1} = (I − dt L_nᵀ)^{-1} g_n, where L_n
 * is the generator assembled from policy slice n, the same matrix the HJB
 * step at t_n used. Entries in (−1e-12, 0) are clipped; a slice is
 * renormalized only when its mass drifts by more than 1e-10.
 */
inline TransportResult transport(const Problem& pb, const PolicyField& policy, std::span<const double> g0) {
    const auto& grid = pb.grid();
    const auto& time = pb.time();
    const std::size_t n_x = grid.size();
    const std::size_t K = time.intervals();
    detail::require(policy.n_time() == time.size() && policy.n_space() == n_x, "transport: policy shape mismatch");
    detail::require(g0.size() == n_x, "transport: initial mass size mismatch");
    {
        double total = 0.0;
        for (double w : g0) {
            detail::require(w >= 0.0, "transport: negative initial mass");
            total += w;
        }
        detail::require(std::abs(total - 1.0) <= kMassTolerance, "transport: initial mass does not sum to 1");
    }

    TransportResult out{DistributionPath(time.size(), n_x), {}};
    std::copy(g0.begin(), g0.end(), out.mass.slice(0).begin());
    out.diagnostics.mass_error.assign(K, 0.0);
    out.diagnostics.min_entry.assign(K, 0.0);

    const double dt = time.dt();
    for (std::size_t n = 0; n < K; ++n) {
        const Tridiagonal step = pb.dynamics().assemble(policy.slice(n)).transposed().shifted(1.0, -dt);
        auto next = out.mass.slice(n + 1);
        solve_tridiagonal(step, out.mass.slice(n), next);

        double total = 0.0;
        double lowest = 0.0;
        for (double w : next) {
            total += w;
            lowest = std::min(lowest, w);
        }
        out.diagnostics.mass_error[n] = std::abs(total - 1.0);
        out.diagnostics.min_entry[n] = lowest;
        if (lowest < -kNegativityTolerance)
            throw NumericalError("transport: negative mass " + std::to_string(lowest) + " at step " + std::to_string(n));
        bool renormalize = std::abs(total - 1.0) > kMassTolerance;
        if (lowest < 0.0) {
            for (double& w : next) w = std::max(w, 0.0);
            renormalize = true;
        }
        if (renormalize) {
            const double s = std::accumulate(next.begin(), next.end(), 0.0);
            for (double& w : next) w /= s;
            ++out.diagnostics.renormalizations;
        }
    }
    return out;
}

inline TransportResult transport(const Problem& pb, const PolicyField& policy) {
    return transport(pb, policy, dirac_init(pb.grid(), pb.params().x0));
}

/// Aggregate of every slice of a distribution path.
inline MeanPath aggregate_path(const Problem& pb, const DistributionPath& g) {
    MeanPath m;
    m.values.resize(g.n_time());
    for (std::size_t k = 0; k < g.n_time(); ++k) m[k] = aggregate(pb.spec(), g.slice(k), pb.grid());
    return m;
}

}  // namespace mfg
