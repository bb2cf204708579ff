#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mfg/field.hpp"
#include "mfg/problem.hpp"
#include "mfg/tridiagonal.hpp"

namespace mfg {

/// argmax over a ∈ [0, a_max] of a·p − a²/2.
inline double optimal_control(double dVdx, double a_max) noexcept {
    return std::clamp(dVdx, 0.0, a_max);
}

enum class Direction { Forward, Backward };

/// One-sided differences of a value slice. Falls back to the other side at the boundary node.
inline std::vector<double> gradient(std::span<const double> values, const SpaceGrid& grid, Direction dir) {
    const std::size_t n = grid.size();
    detail::require(values.size() == n, "gradient: slice/grid size mismatch");
    const auto fwd = grid.spacing_fwd();
    const auto bwd = grid.spacing_bwd();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool forward = dir == Direction::Forward ? i + 1 < n : i == 0;
        g[i] = forward ? (values[i + 1] - values[i]) / fwd[i] : (values[i] - values[i - 1]) / bwd[i];
    }
    return g;
}

/**
 * Maximizer over a ∈ [0, a_max] of the upwinded discrete Hamiltonian
 *   h(a) = −a²/2 + max(a − k, 0)·v_fwd + min(a − k, 0)·v_bwd,
 * i.e. drift b = a − k paired with the forward gradient when it points up and
 * the backward gradient when it points down. Where v_fwd <= v_bwd this is the
 * usual upwind choice (forward control if it moves the state up, else
 * backward control if it moves it down, else the control that holds the state
 * still); elsewhere the two one-sided candidates are compared by value, ties
 * going to the forward branch.
 */
inline double hamiltonian_argmax(double k, double v_fwd, double v_bwd, double a_max) noexcept {
    const double lo_f = std::max(k, 0.0);
    const double hi_b = std::min(k, a_max);
    double best = 0.0;
    double best_val = -std::numeric_limits<double>::infinity();
    if (lo_f <= a_max) {
        best = std::clamp(v_fwd, lo_f, a_max);
        best_val = -0.5 * best * best + (best - k) * v_fwd;
    }
    if (hi_b >= 0.0) {
        const double a = std::clamp(v_bwd, 0.0, hi_b);
        const double val = -0.5 * a * a + (a - k) * v_bwd;
        if (val > best_val) best = a;
    }
    return best;
}

/**
 * Upwind policy of a value slice. At the boundary nodes the one-sided
 * gradient pointing out of the grid is replaced by 0, matching the generator,
 * which drops drift that would leave the domain.
 */
inline void upwind_policy(const Dynamics& dyn, const SpaceGrid& grid, std::span<const double> v,
                          std::span<double> policy) {
    const std::size_t n = grid.size();
    const auto fwd = grid.spacing_fwd();
    const auto bwd = grid.spacing_bwd();
    for (std::size_t i = 0; i < n; ++i) {
        const double vf = i + 1 < n ? (v[i + 1] - v[i]) / fwd[i] : 0.0;
        const double vb = i > 0 ? (v[i] - v[i - 1]) / bwd[i] : 0.0;
        policy[i] = hamiltonian_argmax(dyn.pull(i), vf, vb, dyn.a_max());
    }
}

/// Relative sup-change of the value slice below which policy sweeps stop.
inline constexpr double kValueStagnation = 1e-13;

struct HjbDiagnostics {
    /// Per backward step: min over rows of diag − |lower| − |upper| of the implicit system.
    std::vector<double> row_margin;
    /// Per backward step: number of policy sweeps used.
    std::vector<std::size_t> sweeps;
    bool monotone = true;
};

struct HjbSolution {
    ValueField values;
    PolicyField policy;
    HjbDiagnostics diagnostics;
};

namespace detail {

/// Sign pattern of an implicit HJB matrix; returns the smallest row margin.
inline double monotone_margin(const Tridiagonal& m) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.lower[i] > 0.0 || m.upper[i] > 0.0 || !(m.diag[i] > 0.0)) return -1.0;
        margin = std::min(margin, m.diag[i] + m.lower[i] + m.upper[i]);
    }
    return margin;
}

}  // namespace detail

/**
 * Backward implicit-Euler solve of the current-value HJB equation
 *   ρV = max_a { xP(x, m_t) − a²/2 + b(x, a) V_x + ½σ²V_xx } + V_t
 * for a given aggregate path.
 *
 * Step n (from t_{n+1} to t_n) solves ((1/dt + ρ)I − L(α_n)) V_n = r_n − α_n²/2 + V_{n+1}/dt,
 * with α_n the upwind policy of V_{n+1} (one policy improvement per step) or,
 * with policy iteration enabled, of V_n itself. Policy slice n is the control
 * used in that step; slice K is the upwind policy of the terminal condition.
 */
inline HjbSolution solve_hjb(const Problem& pb, const MeanPath& m) {
    const auto& grid = pb.grid();
    const auto& time = pb.time();
    const auto& dyn = pb.dynamics();
    const auto& opt = pb.options();
    const std::size_t n_x = grid.size();
    const std::size_t n_t = time.size();
    const std::size_t K = time.intervals();
    detail::require(m.size() == n_t, "solve_hjb: mean path length must equal the number of time nodes");

    HjbSolution sol{ValueField(n_t, n_x), PolicyField(n_t, n_x), {}};
    sol.diagnostics.row_margin.assign(K, 0.0);
    sol.diagnostics.sweeps.assign(K, 0);

    const double rho = pb.params().rho;
    const double dt = time.dt();
    const double inv_dt = 1.0 / dt;
    const double shift = inv_dt + rho;

    std::vector<double> rev(n_x);
    pb.revenue().fill(m[K], rev);
    const double terminal_factor = opt.terminal_discounted ? std::exp(-rho * time.horizon()) : 1.0;
    auto v_last = sol.values.slice(K);
    for (std::size_t i = 0; i < n_x; ++i) v_last[i] = terminal_factor * rev[i];
    upwind_policy(dyn, grid, v_last, sol.policy.slice(K));

    std::vector<double> rhs(n_x);
    std::vector<double> trial(n_x);
    std::vector<double> previous(n_x);
    for (std::size_t n = K; n-- > 0;) {
        pb.revenue().fill(m[n], rev);
        const auto v_next = sol.values.slice(n + 1);
        auto v = sol.values.slice(n);
        auto policy = sol.policy.slice(n);
        upwind_policy(dyn, grid, v_next, policy);

        const std::size_t max_sweeps = opt.policy_iteration ? opt.max_policy_sweeps : 1;
        std::size_t sweep = 0;
        double margin = 0.0;
        while (true) {
            ++sweep;
            const Tridiagonal system = dyn.assemble(policy).shifted(shift, -1.0);
            margin = detail::monotone_margin(system);
            if (margin < rho * (1.0 - 1e-9)) {
                sol.diagnostics.monotone = false;
                throw NumericalError("solve_hjb: non-monotone system matrix at step " + std::to_string(n));
            }
            for (std::size_t i = 0; i < n_x; ++i) rhs[i] = rev[i] - 0.5 * policy[i] * policy[i] + inv_dt * v_next[i];
            if (sweep > 1) std::copy(v.begin(), v.end(), previous.begin());
            solve_tridiagonal(system, rhs, v);
            if (sweep >= max_sweeps) break;
            // Policy changes on fine cells can sit at the roundoff floor of the
            // one-sided differences; stop once the values no longer move.
            if (sweep > 1) {
                double dv = 0.0;
                for (std::size_t i = 0; i < n_x; ++i)
                    dv = std::max(dv, std::abs(v[i] - previous[i]) / std::max(1.0, std::abs(v[i])));
                if (dv <= kValueStagnation) break;
            }
            upwind_policy(dyn, grid, v, trial);
            double change = 0.0;
            for (std::size_t i = 0; i < n_x; ++i) change = std::max(change, std::abs(trial[i] - policy[i]));
            if (change < opt.policy_tolerance) break;
            std::copy(trial.begin(), trial.end(), policy.begin());
        }
        sol.diagnostics.row_margin[n] = margin;
        sol.diagnostics.sweeps[n] = sweep;
        for (std::size_t i = 0; i < n_x; ++i)
            if (!std::isfinite(v[i]))
                throw NumericalError("solve_hjb: non-finite value at step " + std::to_string(n));
    }
    return sol;
}

}  // namespace mfg
