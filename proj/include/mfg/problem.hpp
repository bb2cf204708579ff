#pragma once

#include <memory>

#include "mfg/generator.hpp"
#include "mfg/grid.hpp"
#include "mfg/model.hpp"

namespace mfg {

struct SolverOptions {
    /// Use V(T,x) = e^{-ρT} x P(x, m_T) instead of the current-value terminal x P(x, m_T).
    bool terminal_discounted = false;
    /// Iterate policy improvement inside each backward step until the policy (or the value) settles;
    /// off means a single improvement from the next time slice.
    bool policy_iteration = true;
    std::size_t max_policy_sweeps = 50;
    double policy_tolerance = 1e-9;
};

/**
 * A model on a fixed space-time discretization, with the grid-dependent
 * tables (generator weights, revenue shape) precomputed. Immutable and
 * cheap to share between concurrent solves.
 */
class Problem {
public:
    Problem(ModelSpec spec, SpaceGrid grid, TimeGrid time, SolverOptions options = {})
        : spec_(spec), grid_(std::move(grid)), time_(std::move(time)), options_(options) {
        validate(spec_);
        if (spec_.positive_state())
            detail::require(grid_.front() > 0.0, "Problem: isoelastic kinds need a positive grid");
        detail::require(spec_.params.x0 >= grid_.front() && spec_.params.x0 <= grid_.back(),
                        "Problem: x0 outside the grid");
        dynamics_ = std::make_shared<const Dynamics>(spec_, grid_);
        revenue_ = std::make_shared<const RevenueTable>(spec_, grid_);
    }

    const ModelSpec& spec() const noexcept { return spec_; }
    const ModelParams& params() const noexcept { return spec_.params; }
    const SpaceGrid& grid() const noexcept { return grid_; }
    const TimeGrid& time() const noexcept { return time_; }
    const SolverOptions& options() const noexcept { return options_; }
    const Dynamics& dynamics() const noexcept { return *dynamics_; }
    const RevenueTable& revenue() const noexcept { return *revenue_; }

    /// Same discretization, different strength parameter.
    Problem with_xi(double xi) const {
        ModelSpec s = spec_;
        s.params.xi = xi;
        return Problem(s, grid_, time_, options_);
    }

    Problem with_spec(const ModelSpec& s) const { return Problem(s, grid_, time_, options_); }

private:
    ModelSpec spec_;
    SpaceGrid grid_;
    TimeGrid time_;
    SolverOptions options_;
    std::shared_ptr<const Dynamics> dynamics_;
    std::shared_ptr<const RevenueTable> revenue_;
};

}  // namespace mfg
