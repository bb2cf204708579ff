#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mfg/fixedpoint.hpp"
#include "mfg/parallel.hpp"
#include "mfg/problem.hpp"

namespace mfg {

struct SimConfig {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240601;
    /// Euler substeps per time step of the time grid.
    std::size_t substeps = 10;
    std::size_t threads = 0;
};

struct MeanEstimate {
    MeanPath mean;
    std::vector<double> se;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent stream for path `index`; depends only on (seed, index).
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

inline void validate(const SimConfig& cfg) {
    require(cfg.n_paths >= 1, "SimConfig: n_paths must be >= 1");
    require(cfg.substeps >= 1, "SimConfig: substeps must be >= 1");
}

/// Policy slice k interpolated linearly in x; constant outside the grid.
inline double interpolate(const SpaceGrid& grid, std::span<const double> slice, double x) {
    if (x <= grid.front()) return slice.front();
    if (x >= grid.back()) return slice.back();
    const std::size_t j = grid.bracket(x);
    const double w = (x - grid[j]) / (grid[j + 1] - grid[j]);
    return slice[j] + w * (slice[j + 1] - slice[j]);
}

/// One Euler-Maruyama substep under a stored feedback policy.
class PathStepper {
public:
    PathStepper(const Problem& pb, const PolicyField& policy, std::size_t substeps)
        : pb_(pb), policy_(policy), substeps_(substeps), h_(pb.time().dt() / static_cast<double>(substeps)),
          sqrt_h_(std::sqrt(h_)) {
        require(policy.n_time() == pb.time().size() && policy.n_space() == pb.grid().size(),
                "simulate: policy shape does not match the grids");
    }

    std::size_t substeps() const noexcept { return substeps_; }

    /// One substep of the state under policy slice k with standard normal increment z.
    double advance(double x, std::size_t k, double z) const {
        const auto& grid = pb_.grid();
        const auto& spec = pb_.spec();
        const double a = std::clamp(interpolate(grid, policy_.slice(k), x), 0.0, spec.params.a_max);
        double next = x + drift(spec, x, a) * h_ + diffusion(spec, x) * sqrt_h_ * z;
        if (!std::isfinite(next))
            throw NumericalError("simulate: non-finite state from x = " + std::to_string(x) + " at time slice " +
                                 std::to_string(k));
        return std::clamp(next, grid.front(), grid.back());
    }

private:
    const Problem& pb_;
    const PolicyField& policy_;
    std::size_t substeps_;
    double h_;
    double sqrt_h_;
};

/// Per-time-node running moments of a block of paths (Welford), merged in block order.
struct Moments {
    std::vector<double> count, mean, m2;

    explicit Moments(std::size_t n = 0) : count(n, 0.0), mean(n, 0.0), m2(n, 0.0) {}

    void add(std::size_t k, double v) {
        count[k] += 1.0;
        const double d = v - mean[k];
        mean[k] += d / count[k];
        m2[k] += d * (v - mean[k]);
    }

    void merge(const Moments& o) {
        for (std::size_t k = 0; k < count.size(); ++k) {
            if (o.count[k] == 0.0) continue;
            const double n = count[k] + o.count[k];
            const double d = o.mean[k] - mean[k];
            mean[k] += d * o.count[k] / n;
            m2[k] += o.m2[k] + d * d * count[k] * o.count[k] / n;
            count[k] = n;
        }
    }
};

inline constexpr std::size_t kPathBlock = 1024;

}  // namespace detail

/**
 * Monte-Carlo estimate of the aggregate path under a feedback policy: paths
 * start at x0, follow Euler-Maruyama with the control of slice k on [t_k, t_{k+1})
 * and are clamped to the grid range. Geometric aggregates average log X and
 * report SE by the delta method.
 */
inline MeanEstimate simulate_mean_path(const Problem& pb, const PolicyField& policy, const SimConfig& cfg) {
    detail::validate(cfg);
    const bool logs = pb.spec().aggregator == Aggregator::Geometric;
    if (logs) detail::require(pb.grid().front() > 0.0, "simulate: geometric statistics need positive paths");
    const detail::PathStepper stepper(pb, policy, cfg.substeps);
    const std::size_t n_t = pb.time().size();
    const std::size_t K = pb.time().intervals();
    const double x0 = std::clamp(pb.params().x0, pb.grid().front(), pb.grid().back());

    const std::size_t n_blocks = (cfg.n_paths + detail::kPathBlock - 1) / detail::kPathBlock;
    std::vector<detail::Moments> blocks(n_blocks);
    parallel_for(n_blocks, cfg.threads, [&](std::size_t b) {
        detail::Moments acc(n_t);
        const std::size_t first = b * detail::kPathBlock;
        const std::size_t last = std::min(cfg.n_paths, first + detail::kPathBlock);
        std::normal_distribution<double> normal;
        for (std::size_t p = first; p < last; ++p) {
            auto rng = detail::path_engine(cfg.seed, p);
            normal.reset();
            double x = x0;
            acc.add(0, logs ? std::log(x) : x);
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t s = 0; s < cfg.substeps; ++s) x = stepper.advance(x, k, normal(rng));
                acc.add(k + 1, logs ? std::log(x) : x);
            }
        }
        blocks[b] = std::move(acc);
    });

    detail::Moments total(n_t);
    for (const auto& b : blocks) total.merge(b);
    MeanEstimate est{MeanPath(std::vector<double>(n_t)), std::vector<double>(n_t)};
    const double n = static_cast<double>(cfg.n_paths);
    for (std::size_t k = 0; k < n_t; ++k) {
        const double var = n > 1.0 ? std::max(0.0, total.m2[k] / (n - 1.0)) : 0.0;
        const double se = std::sqrt(var / n);
        est.mean[k] = logs ? std::exp(total.mean[k]) : total.mean[k];
        est.se[k] = logs ? est.mean[k] * se : se;
    }
    return est;
}

struct CouplingResult {
    /// Paths with x_a <= x_b + slack at every substep.
    std::size_t ordered = 0;
    std::size_t n_paths = 0;
    double fraction() const noexcept { return n_paths ? static_cast<double>(ordered) / static_cast<double>(n_paths) : 0.0; }
};

/// Simulates both policies on common random numbers and counts pathwise ordered paths.
inline CouplingResult coupled_ordering(const Problem& pb, const PolicyField& lower, const PolicyField& upper,
                                       const SimConfig& cfg, double slack = 1e-12) {
    detail::validate(cfg);
    const detail::PathStepper lo(pb, lower, cfg.substeps), hi(pb, upper, cfg.substeps);
    const std::size_t K = pb.time().intervals();
    const double x0 = std::clamp(pb.params().x0, pb.grid().front(), pb.grid().back());
    const std::size_t n_blocks = (cfg.n_paths + detail::kPathBlock - 1) / detail::kPathBlock;
    std::vector<std::size_t> counts(n_blocks, 0);
    parallel_for(n_blocks, cfg.threads, [&](std::size_t b) {
        const std::size_t first = b * detail::kPathBlock;
        const std::size_t last = std::min(cfg.n_paths, first + detail::kPathBlock);
        std::normal_distribution<double> normal;
        for (std::size_t p = first; p < last; ++p) {
            auto rng = detail::path_engine(cfg.seed, p);
            normal.reset();
            double xa = x0, xb = x0;
            bool ok = true;
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t s = 0; s < cfg.substeps; ++s) {
                    const double z = normal(rng);
                    xa = lo.advance(xa, k, z);
                    xb = hi.advance(xb, k, z);
                    ok = ok && xa <= xb + slack * std::max(1.0, std::abs(xb));
                }
            counts[b] += ok ? 1 : 0;
        }
    });
    CouplingResult res;
    res.n_paths = cfg.n_paths;
    for (auto c : counts) res.ordered += c;
    return res;
}

/**
 * Bias allowance per unit of (dt + mesh size). In a refinement study of the
 * baseline equilibria (dt from 0.1 to 0.0125, N_x from 501 to 4001, see
 * README) the relative PDE/MC discrepancy stayed below 1.1·(dt + Δx) and
 * shrank at first order in both.
 */
inline constexpr double kBiasConstant = 1.5;

struct VerificationRow {
    double t = 0.0;
    double m_mc = 0.0;
    double se = 0.0;
    double m_pde = 0.0;
    double z_score = 0.0;
    /// Allowed discrepancy at this node: max(3·SE, bias allowance).
    double allowance = 0.0;
};

struct Verdict {
    bool pass = false;
    std::vector<VerificationRow> rows;
    std::size_t worst_node = 0;
    /// Largest |m_mc − m_pde| / allowance over the time nodes.
    double worst_ratio = 0.0;
    double bias_tol = 0.0;
};

/**
 * Re-simulates the population under the equilibrium policy and compares its
 * aggregate with m* node by node. A node passes if |m_mc − m*| is within
 * max(3·SE, bias·scale), with scale = m* for geometric aggregates and
 * max(1, |m*|) otherwise. After the first step bias = bias_tol = C·(dt + Δx);
 * at t_0 no step has been taken and the only discrepancy is the split of the
 * initial point mass between two nodes, so bias = C·Δx² there.
 */
inline Verdict verify_equilibrium(const Problem& pb, const MeanPath& m_star, const PolicyField& policy,
                                  const SimConfig& cfg, double bias_constant = kBiasConstant) {
    detail::require(m_star.size() == pb.time().size(), "verify_equilibrium: m* length mismatch");
    const auto est = simulate_mean_path(pb, policy, cfg);
    Verdict v;
    const double h = pb.grid().mesh_size();
    v.bias_tol = bias_constant * (pb.time().dt() + h);
    const bool relative = pb.spec().aggregator == Aggregator::Geometric;
    v.pass = true;
    for (std::size_t k = 0; k < m_star.size(); ++k) {
        VerificationRow r;
        r.t = pb.time()[k];
        r.m_mc = est.mean[k];
        r.se = est.se[k];
        r.m_pde = m_star[k];
        const double diff = std::abs(r.m_mc - r.m_pde);
        r.z_score = r.se > 0.0 ? diff / r.se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        const double scale = relative ? std::abs(r.m_pde) : std::max(1.0, std::abs(r.m_pde));
        const double bias = k == 0 ? bias_constant * h * h : v.bias_tol;
        r.allowance = std::max(3.0 * r.se, bias * scale);
        const double ratio = r.allowance > 0.0 ? diff / r.allowance
                                               : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        if (ratio >= v.worst_ratio) {
            v.worst_ratio = ratio;
            v.worst_node = k;
        }
        if (!(diff <= r.allowance)) v.pass = false;
        v.rows.push_back(r);
    }
    return v;
}

inline Verdict verify_equilibrium(const Problem& pb, const EquilibriumResult& res, const SimConfig& cfg,
                                  double bias_constant = kBiasConstant) {
    return verify_equilibrium(pb, res.m_star, res.policy, cfg, bias_constant);
}

}  // namespace mfg
