#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mfg/field.hpp"
#include "mfg/hjb.hpp"
#include "mfg/kfe.hpp"
#include "mfg/problem.hpp"

namespace mfg {

enum class Scheme { Banach, Fictitious };

struct Init {
    enum class Kind { EnvelopeMin, EnvelopeMax, Constant };
    Kind kind = Kind::EnvelopeMin;
    double value = 0.0;

    static Init envelope_min() { return {Kind::EnvelopeMin, 0.0}; }
    static Init envelope_max() { return {Kind::EnvelopeMax, 0.0}; }
    static Init constant(double v) { return {Kind::Constant, v}; }
};

struct IterationConfig {
    double epsilon = 1e-6;
    std::size_t max_iter = 500;
    Scheme scheme = Scheme::Banach;
    Init init{};
};

enum class Monotonicity { Nondecreasing, Nonincreasing, Mixed };

inline std::string_view to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::Nondecreasing: return "nondecreasing";
        case Monotonicity::Nonincreasing: return "nonincreasing";
        case Monotonicity::Mixed: return "mixed";
    }
    return "?";
}

inline std::string_view to_string(Scheme s) { return s == Scheme::Banach ? "banach" : "fictitious"; }

/// Slack allowed per component when classifying successive iterates as monotone.
inline constexpr double kMonotoneSlack = 1e-9;

struct EquilibriumResult {
    MeanPath m_star;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;
    Monotonicity monotone_flag = Monotonicity::Mixed;
    /// Most negative / most positive componentwise change between successive iterates.
    double largest_decrease = 0.0;
    double largest_increase = 0.0;
    ValueField values;
    PolicyField policy;
    DistributionPath distribution;
    double reward = 0.0;
};

struct BestResponse {
    MeanPath next;
    HjbSolution hjb;
    TransportResult kfe;
};

/// Λ(m): optimal control against m, population transported under it, aggregated per time node.
inline BestResponse best_response(const Problem& pb, const MeanPath& m) {
    BestResponse br{{}, solve_hjb(pb, m), {}};
    br.kfe = transport(pb, br.hjb.policy);
    br.next = aggregate_path(pb, br.kfe.mass);
    return br;
}

/// Aggregates of the population under the constant controls a ≡ 0 and a ≡ a_max.
inline std::pair<MeanPath, MeanPath> envelope_paths(const Problem& pb) {
    const std::size_t n_t = pb.time().size(), n_x = pb.grid().size();
    const auto lo = transport(pb, PolicyField(n_t, n_x, 0.0));
    const auto hi = transport(pb, PolicyField(n_t, n_x, pb.params().a_max));
    return {aggregate_path(pb, lo.mass), aggregate_path(pb, hi.mass)};
}

inline MeanPath initial_path(const Problem& pb, const Init& init) {
    switch (init.kind) {
        case Init::Kind::EnvelopeMin: return envelope_paths(pb).first;
        case Init::Kind::EnvelopeMax: return envelope_paths(pb).second;
        case Init::Kind::Constant:
            if (pb.spec().isoelastic()) detail::require(init.value > 0.0, "init: constant must be > 0");
            return MeanPath::constant(pb.time().size(), init.value);
    }
    return {};
}

/**
 * J = Σ_k w_k e^{−ρt_k} Σ_i g(t_k, i)[x_i P(x_i, m_k) − c(α(t_k, x_i))] + e^{−ρT} Σ_i g(T, i) x_i P(x_i, m_T),
 * with trapezoid weights w_k.
 */
inline double equilibrium_reward(const Problem& pb, const EquilibriumResult& res) {
    const auto& time = pb.time();
    const std::size_t n_x = pb.grid().size();
    const double rho = pb.params().rho;
    std::vector<double> rev(n_x);
    double running = 0.0;
    double terminal = 0.0;
    for (std::size_t k = 0; k < time.size(); ++k) {
        pb.revenue().fill(res.m_star[k], rev);
        const auto g = res.distribution.slice(k);
        const auto a = res.policy.slice(k);
        double flow = 0.0;
        for (std::size_t i = 0; i < n_x; ++i)
            if (g[i] != 0.0) flow += g[i] * (rev[i] - cost(pb.spec(), a[i]));
        const double w = (k == 0 || k == time.intervals()) ? 0.5 : 1.0;
        running += w * std::exp(-rho * time[k]) * flow;
        if (k == time.intervals()) {
            for (std::size_t i = 0; i < n_x; ++i) terminal += g[i] * rev[i];
            terminal *= std::exp(-rho * time.horizon());
        }
    }
    return running * time.dt() + terminal;
}

namespace detail {

struct MonotoneTracker {
    double down = 0.0;
    double up = 0.0;

    void observe(const MeanPath& prev, const MeanPath& next) {
        for (std::size_t k = 0; k < prev.size(); ++k) {
            const double d = next[k] - prev[k];
            down = std::min(down, d);
            up = std::max(up, d);
        }
    }

    Monotonicity flag() const {
        if (down >= -kMonotoneSlack) return Monotonicity::Nondecreasing;
        if (up <= kMonotoneSlack) return Monotonicity::Nonincreasing;
        return Monotonicity::Mixed;
    }
};

inline void finish(const Problem& pb, EquilibriumResult& res, BestResponse&& br, const MonotoneTracker& mono) {
    res.monotone_flag = mono.flag();
    res.largest_decrease = mono.down;
    res.largest_increase = mono.up;
    res.values = std::move(br.hjb.values);
    res.policy = std::move(br.hjb.policy);
    res.distribution = std::move(br.kfe.mass);
    res.reward = equilibrium_reward(pb, res);
}

}  // namespace detail

/**
 * m^{n+1} = Λ(m^n) until sup_t |m^{n+1} − m^n| < ε or max_iter evaluations of Λ.
 *
 * The returned m_star is the last image Λ(m^n); the value, policy and
 * distribution are those of that last evaluation, so m_star is exactly the
 * aggregate of the returned distribution. Non-convergence is reported through
 * `converged`, with the residual history kept.
 */
inline EquilibriumResult banach_iterate(const Problem& pb, const IterationConfig& cfg) {
    detail::require(cfg.epsilon > 0.0 && cfg.max_iter >= 1, "banach_iterate: need epsilon > 0 and max_iter >= 1");
    EquilibriumResult res;
    MeanPath m = initial_path(pb, cfg.init);
    detail::MonotoneTracker mono;
    BestResponse br;
    for (std::size_t n = 1; n <= cfg.max_iter; ++n) {
        br = best_response(pb, m);
        const double r = sup_distance(br.next, m);
        res.residual_history.push_back(r);
        res.iterations = n;
        mono.observe(m, br.next);
        m = br.next;
        if (r < cfg.epsilon) {
            res.converged = true;
            break;
        }
    }
    res.m_star = m;
    detail::finish(pb, res, std::move(br), mono);
    return res;
}

/**
 * Fictitious play: m̂^n is the running average of the best responses ν^1 = m^1,
 * ν^{k+1} = Λ(m̂^k). Under the geometric aggregator the average is taken over
 * log m. Stops when the best response reproduces the average,
 * sup_t |ν^{n+1} − m̂^n| < ε, and returns m_star = ν^{n+1}.
 */
inline EquilibriumResult fictitious_play(const Problem& pb, const IterationConfig& cfg) {
    detail::require(cfg.epsilon > 0.0 && cfg.max_iter >= 1, "fictitious_play: need epsilon > 0 and max_iter >= 1");
    const bool in_logs = pb.spec().aggregator == Aggregator::Geometric;
    EquilibriumResult res;
    MeanPath avg = initial_path(pb, cfg.init);
    detail::MonotoneTracker mono;
    BestResponse br;
    for (std::size_t n = 1; n <= cfg.max_iter; ++n) {
        br = best_response(pb, avg);
        const double defect = sup_distance(br.next, avg);
        res.residual_history.push_back(defect);
        res.iterations = n;
        if (defect < cfg.epsilon) {
            res.converged = true;
            break;
        }
        MeanPath updated = avg;
        const double w = 1.0 / static_cast<double>(n + 1);
        for (std::size_t k = 0; k < avg.size(); ++k) {
            updated[k] = in_logs ? std::exp(std::log(avg[k]) + w * (std::log(br.next[k]) - std::log(avg[k])))
                                 : avg[k] + w * (br.next[k] - avg[k]);
        }
        mono.observe(avg, updated);
        avg = std::move(updated);
    }
    res.m_star = br.next;
    detail::finish(pb, res, std::move(br), mono);
    return res;
}

inline EquilibriumResult solve_equilibrium(const Problem& pb, const IterationConfig& cfg) {
    return cfg.scheme == Scheme::Banach ? banach_iterate(pb, cfg) : fictitious_play(pb, cfg);
}

/// Σ_i g(t_k, i) P(x_i, m*_k) per time node.
inline std::vector<double> mean_price_path(const Problem& pb, const EquilibriumResult& res) {
    std::vector<double> out(res.m_star.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = mean_price(pb.spec(), res.distribution.slice(k), pb.grid(), res.m_star[k]);
    return out;
}

/// Σ_i g(t_k, i) log P(x_i, m*_k) per time node; isoelastic kinds.
inline std::vector<double> mean_log_price_path(const Problem& pb, const EquilibriumResult& res) {
    std::vector<double> out(res.m_star.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = mean_log_price(pb.spec(), res.distribution.slice(k), pb.grid(), res.m_star[k]);
    return out;
}

}  // namespace mfg
