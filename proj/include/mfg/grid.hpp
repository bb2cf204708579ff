#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfg/error.hpp"

namespace mfg {

enum class Spacing { Log, Linear };

/**
 * Immutable spatial grid x_0 < x_1 < ... < x_{N-1}.
 *
 * Forward/backward gaps are stored per node. At the two boundary nodes the
 * missing gap mirrors the existing one (ghost node at equal distance), so
 * both arrays have N strictly positive entries.
 */
class SpaceGrid {
public:
    SpaceGrid(std::vector<double> nodes, Spacing kind) : nodes_(std::move(nodes)), kind_(kind) {
        detail::require(nodes_.size() >= 3, "SpaceGrid: need at least 3 nodes");
        const std::size_t n = nodes_.size();
        fwd_.resize(n);
        bwd_.resize(n);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = nodes_[i + 1] - nodes_[i];
            if (!(h > 0.0) || !std::isfinite(h))
                throw DomainError("SpaceGrid: nodes must be finite and strictly increasing");
            fwd_[i] = h;
            bwd_[i + 1] = h;
        }
        bwd_[0] = fwd_[0];
        fwd_[n - 1] = bwd_[n - 1];
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double front() const noexcept { return nodes_.front(); }
    double back() const noexcept { return nodes_.back(); }
    Spacing kind() const noexcept { return kind_; }

    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> spacing_fwd() const noexcept { return fwd_; }
    std::span<const double> spacing_bwd() const noexcept { return bwd_; }

    /// Largest gap measured relative to max(1, |x|); the log-grid analogue of Δx.
    double mesh_size() const {
        double h = 0.0;
        for (std::size_t i = 0; i + 1 < size(); ++i)
            h = std::max(h, fwd_[i] / std::max(1.0, std::abs(nodes_[i])));
        return h;
    }

    /// Index j with nodes[j] <= x < nodes[j+1], clamped to [0, N-2].
    std::size_t bracket(double x) const {
        if (x <= nodes_.front()) return 0;
        if (x >= nodes_.back()) return size() - 2;
        std::size_t lo = 0, hi = size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (nodes_[mid] <= x ? lo : hi) = mid;
        }
        return lo;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> fwd_;
    std::vector<double> bwd_;
    Spacing kind_;
};

/// Nodes uniformly spaced in log x; the endpoints are the arguments bit-for-bit.
inline SpaceGrid build_log_grid(double x_min, double x_max, std::size_t n) {
    detail::require(std::isfinite(x_min) && std::isfinite(x_max) && x_min > 0.0 && x_max > x_min,
                    "build_log_grid: need 0 < x_min < x_max");
    detail::require(n >= 3, "build_log_grid: need n >= 3");
    const double lo = std::log(x_min);
    const double span = std::log(x_max) - lo;
    std::vector<double> nodes(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        nodes[i] = std::exp(lo + span * (static_cast<double>(i) / denom));
    nodes.front() = x_min;
    nodes.back() = x_max;
    return SpaceGrid(std::move(nodes), Spacing::Log);
}

inline SpaceGrid build_linear_grid(double x_min, double x_max, std::size_t n) {
    detail::require(std::isfinite(x_min) && std::isfinite(x_max) && x_min < x_max,
                    "build_linear_grid: need x_min < x_max");
    detail::require(n >= 3, "build_linear_grid: need n >= 3");
    std::vector<double> nodes(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / denom;
        nodes[i] = x_min + (x_max - x_min) * s;
    }
    nodes.front() = x_min;
    nodes.back() = x_max;
    return SpaceGrid(std::move(nodes), Spacing::Linear);
}

/// Uniform time nodes t_k = k T / K, k = 0..K.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t intervals) : horizon_(horizon), intervals_(intervals) {
        detail::require(horizon > 0.0 && std::isfinite(horizon), "TimeGrid: horizon must be positive");
        detail::require(intervals >= 1, "TimeGrid: need at least one interval");
        dt_ = horizon_ / static_cast<double>(intervals_);
        nodes_.resize(intervals_ + 1);
        for (std::size_t k = 0; k <= intervals_; ++k)
            nodes_[k] = horizon_ * (static_cast<double>(k) / static_cast<double>(intervals_));
    }

    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return dt_; }
    std::size_t intervals() const noexcept { return intervals_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double operator[](std::size_t k) const { return nodes_[k]; }
    std::span<const double> nodes() const noexcept { return nodes_; }

private:
    double horizon_;
    std::size_t intervals_;
    double dt_;
    std::vector<double> nodes_;
};

inline TimeGrid build_time_grid(double horizon, double dt) {
    detail::require(std::isfinite(horizon) && horizon > 0.0, "build_time_grid: T must be positive");
    detail::require(std::isfinite(dt) && dt > 0.0 && dt <= horizon, "build_time_grid: need 0 < dt <= T");
    const double ratio = horizon / dt;
    const double k = std::round(ratio);
    if (std::abs(ratio - k) > 1e-9)
        throw DomainError("build_time_grid: T/dt = " + std::to_string(ratio) + " is not an integer");
    return TimeGrid(horizon, static_cast<std::size_t>(k));
}

}  // namespace mfg
