#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/model.hpp"
#include "mfg/tridiagonal.hpp"

namespace mfg {

/**
 * Discrete generator L f = b(x, a) f_x + ½σ(x)² f_xx of the controlled state on a grid.
 *
 * Every drift in the benchmark models has the form b(x, a) = a − k(x), so the
 * uncontrolled part k(x) and the diffusion weights are tabulated once per grid.
 * The drift is upwinded by its own sign and truncated at the boundaries (no
 * flow out of the domain); diffusion uses the non-uniform three-point stencil
 * with a mirrored ghost node at either end. Each row sums to zero and all
 * off-diagonals are nonnegative, so the matrix is the generator of a
 * birth-death chain on the nodes, and its transpose conserves mass.
 */
class Dynamics {
public:
    Dynamics(const ModelSpec& spec, const SpaceGrid& grid) : a_max_(spec.params.a_max) {
        const std::size_t n = grid.size();
        pull_.resize(n);
        diff_up_.resize(n);
        diff_down_.resize(n);
        inv_fwd_.resize(n);
        inv_bwd_.resize(n);
        const auto fwd = grid.spacing_fwd();
        const auto bwd = grid.spacing_bwd();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid[i];
            pull_[i] = -drift(spec, x, 0.0);
            const double s = diffusion(spec, x);
            const double var = s * s;
            inv_fwd_[i] = 1.0 / fwd[i];
            inv_bwd_[i] = 1.0 / bwd[i];
            diff_up_[i] = var / (fwd[i] * (fwd[i] + bwd[i]));
            diff_down_[i] = var / (bwd[i] * (fwd[i] + bwd[i]));
        }
        // Ghost node folded back onto the single interior neighbour.
        diff_up_[0] += diff_down_[0];
        diff_down_[0] = 0.0;
        diff_down_[n - 1] += diff_up_[n - 1];
        diff_up_[n - 1] = 0.0;
    }

    std::size_t size() const noexcept { return pull_.size(); }
    double a_max() const noexcept { return a_max_; }
    /// k(x_i) with b(x_i, a) = a − k(x_i).
    double pull(std::size_t i) const { return pull_[i]; }
    double drift_at(std::size_t i, double a) const { return a - pull_[i]; }

    Tridiagonal assemble(std::span<const double> policy) const {
        const std::size_t n = size();
        detail::require(policy.size() == n, "Dynamics::assemble: policy/grid size mismatch");
        Tridiagonal g(n);
        for (std::size_t i = 0; i < n; ++i) {
            double up = diff_up_[i];
            double down = diff_down_[i];
            const double b = drift_at(i, policy[i]);
            if (b > 0.0 && i + 1 < n)
                up += b * inv_fwd_[i];
            else if (b < 0.0 && i > 0)
                down -= b * inv_bwd_[i];
            g.upper[i] = i + 1 < n ? up : 0.0;
            g.lower[i] = i > 0 ? down : 0.0;
            g.diag[i] = -(g.upper[i] + g.lower[i]);
        }
        return g;
    }

    Tridiagonal assemble_constant(double a) const { return assemble(std::vector<double>(size(), a)); }

private:
    double a_max_;
    std::vector<double> pull_;
    std::vector<double> diff_up_;
    std::vector<double> diff_down_;
    std::vector<double> inv_fwd_;
    std::vector<double> inv_bwd_;
};

}  // namespace mfg
