#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg/fixedpoint.hpp"
#include "mfg/parallel.hpp"
#include "mfg/problem.hpp"

namespace mfg {

/// Thrown by basin_threshold when the two extreme starts reach the same equilibrium.
class AbsentMultiplicity : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// sup_t |log a − log b| for the isoelastic kinds, sup_t |a − b| for the LQ kind.
inline double equilibrium_gap(const Problem& pb, const MeanPath& a, const MeanPath& b) {
    if (!pb.spec().isoelastic()) return sup_distance(a, b);
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(std::log(a[k]) - std::log(b[k])));
    return d;
}

/// True if a_k <= b_k + tol for every k.
inline bool ordered_below(const MeanPath& a, const MeanPath& b, double tol) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] > b[k] + tol) return false;
    return true;
}

struct ScanOptions {
    double gap_tol = 0.1;
    /// Banach settings for each extreme start; init is overridden.
    IterationConfig iteration{};
    std::size_t threads = 0;
    bool thresholds = false;
    double classify_tol = 0.01;
};

struct MultiplicityReport {
    std::vector<double> xi_values;
    std::vector<double> gap;
    /// Equilibria reached from the constant starts x_min (low) and x_max (high).
    std::vector<EquilibriumResult> low;
    std::vector<EquilibriumResult> high;
    /// Longest contiguous run of lattice points with gap > gap_tol.
    std::optional<Interval> region;
    std::vector<std::size_t> region_indices;
    /// Points with gap > gap_tol outside the reported region.
    std::vector<std::size_t> anomalies;
    /// Basin threshold per ξ (log m¹; level m¹ on linear grids), when requested and defined.
    std::vector<std::optional<double>> thresholds;
    bool log_scale = true;

    bool contiguous() const noexcept { return anomalies.empty(); }
};

struct BasinResult {
    double threshold = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    std::size_t probes = 0;
};

namespace detail {

inline EquilibriumResult run_from_constant(const Problem& pb, IterationConfig cfg, double m1) {
    cfg.scheme = Scheme::Banach;
    cfg.init = Init::constant(m1);
    return banach_iterate(pb, cfg);
}

inline void locate_region(MultiplicityReport& rep, double gap_tol) {
    std::size_t best_start = 0, best_len = 0;
    for (std::size_t i = 0; i < rep.gap.size();) {
        if (!(rep.gap[i] > gap_tol)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < rep.gap.size() && rep.gap[j] > gap_tol) ++j;
        if (j - i > best_len) {
            best_start = i;
            best_len = j - i;
        }
        i = j;
    }
    rep.region.reset();
    rep.region_indices.clear();
    rep.anomalies.clear();
    if (best_len == 0) return;
    rep.region = Interval{rep.xi_values[best_start], rep.xi_values[best_start + best_len - 1]};
    for (std::size_t i = 0; i < rep.gap.size(); ++i) {
        const bool inside = i >= best_start && i < best_start + best_len;
        if (inside)
            rep.region_indices.push_back(i);
        else if (rep.gap[i] > gap_tol)
            rep.anomalies.push_back(i);
    }
}

}  // namespace detail

/**
 * Bisection over constant initial paths m¹ ≡ c, in log c on positive grids,
 * classifying each Banach run by its nearer reference equilibrium (the limits
 * from c = x_min and c = x_max). Returns the midpoint of the final bracket.
 */
inline BasinResult basin_threshold(const Problem& pb, const ScanOptions& opt,
                                   const EquilibriumResult* low_ref = nullptr,
                                   const EquilibriumResult* high_ref = nullptr) {
    const auto& grid = pb.grid();
    const bool logs = grid.front() > 0.0;
    std::optional<EquilibriumResult> own_low, own_high;
    if (!low_ref) low_ref = &own_low.emplace(detail::run_from_constant(pb, opt.iteration, grid.front()));
    if (!high_ref) high_ref = &own_high.emplace(detail::run_from_constant(pb, opt.iteration, grid.back()));
    if (equilibrium_gap(pb, low_ref->m_star, high_ref->m_star) <= opt.gap_tol)
        throw AbsentMultiplicity("basin_threshold: both extreme starts reach the same equilibrium at xi = " +
                                 std::to_string(pb.params().xi));

    const auto is_high = [&](const MeanPath& m) {
        return equilibrium_gap(pb, m, high_ref->m_star) < equilibrium_gap(pb, m, low_ref->m_star);
    };
    BasinResult res;
    double lo = logs ? std::log(grid.front()) : grid.front();
    double hi = logs ? std::log(grid.back()) : grid.back();
    while (hi - lo >= opt.classify_tol) {
        const double mid = 0.5 * (lo + hi);
        const auto run = detail::run_from_constant(pb, opt.iteration, logs ? std::exp(mid) : mid);
        ++res.probes;
        (is_high(run.m_star) ? hi : lo) = mid;
    }
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    res.threshold = 0.5 * (lo + hi);
    return res;
}

/**
 * For each ξ, Banach iteration from the constant starts x_min and x_max.
 * Points are solved in parallel and stored by index, so the report does not
 * depend on the thread count.
 */
inline MultiplicityReport multiplicity_scan(const Problem& pb, const std::vector<double>& xi_list,
                                            const ScanOptions& opt = {}) {
    detail::require(!xi_list.empty(), "multiplicity_scan: empty xi list");
    detail::require(std::is_sorted(xi_list.begin(), xi_list.end()), "multiplicity_scan: xi list must be sorted");
    MultiplicityReport rep;
    rep.xi_values = xi_list;
    rep.log_scale = pb.spec().isoelastic();
    const std::size_t n = xi_list.size();
    rep.low.resize(n);
    rep.high.resize(n);
    rep.gap.resize(n);
    rep.thresholds.resize(n);

    parallel_for(2 * n, opt.threads, [&](std::size_t job) {
        const std::size_t i = job / 2;
        const Problem p = pb.with_xi(xi_list[i]);
        if (job % 2 == 0)
            rep.low[i] = detail::run_from_constant(p, opt.iteration, p.grid().front());
        else
            rep.high[i] = detail::run_from_constant(p, opt.iteration, p.grid().back());
    });
    for (std::size_t i = 0; i < n; ++i) rep.gap[i] = equilibrium_gap(pb, rep.low[i].m_star, rep.high[i].m_star);
    detail::locate_region(rep, opt.gap_tol);

    if (opt.thresholds) {
        std::vector<std::size_t> multi;
        for (std::size_t i = 0; i < n; ++i)
            if (rep.gap[i] > opt.gap_tol) multi.push_back(i);
        parallel_for(multi.size(), opt.threads, [&](std::size_t j) {
            const std::size_t i = multi[j];
            rep.thresholds[i] = basin_threshold(pb.with_xi(xi_list[i]), opt, &rep.low[i], &rep.high[i]).threshold;
        });
    }
    return rep;
}

struct StaticsRow {
    double xi = 0.0;
    MeanPath m_low, m_high;
    double reward_low = 0.0, reward_high = 0.0;
    /// Mean price (LQ) or mean log-price (isoelastic) per time node.
    std::vector<double> price_low, price_high;
    bool low_converged = false, high_converged = false;
};

struct StaticsTable {
    std::vector<StaticsRow> rows;
    bool log_price = false;
    /// Per adjacent pair (j, j+1): extremal equilibria ordered in ξ.
    std::vector<bool> low_ordered, high_ordered;
    /// Per row: J(low) <= J(high) within relative slack.
    std::vector<bool> reward_ordered;
    /// Per row: mean (log-)price at low <= at high.
    std::vector<bool> price_ordered;
};

inline StaticsTable statics_from_scan(const Problem& pb, const MultiplicityReport& rep, double order_tol = 1e-6,
                                      double reward_rel_tol = 1e-8) {
    StaticsTable tab;
    tab.log_price = pb.spec().isoelastic();
    for (std::size_t i = 0; i < rep.xi_values.size(); ++i) {
        const Problem p = pb.with_xi(rep.xi_values[i]);
        StaticsRow row;
        row.xi = rep.xi_values[i];
        row.m_low = rep.low[i].m_star;
        row.m_high = rep.high[i].m_star;
        row.reward_low = rep.low[i].reward;
        row.reward_high = rep.high[i].reward;
        row.low_converged = rep.low[i].converged;
        row.high_converged = rep.high[i].converged;
        row.price_low = tab.log_price ? mean_log_price_path(p, rep.low[i]) : mean_price_path(p, rep.low[i]);
        row.price_high = tab.log_price ? mean_log_price_path(p, rep.high[i]) : mean_price_path(p, rep.high[i]);
        tab.reward_ordered.push_back(row.reward_low <= row.reward_high + reward_rel_tol * std::abs(row.reward_high));
        bool price_ok = true;
        for (std::size_t k = 0; k < row.price_low.size(); ++k)
            price_ok = price_ok && row.price_low[k] <= row.price_high[k] + order_tol;
        tab.price_ordered.push_back(price_ok);
        tab.rows.push_back(std::move(row));
    }
    for (std::size_t j = 0; j + 1 < tab.rows.size(); ++j) {
        tab.low_ordered.push_back(ordered_below(tab.rows[j].m_low, tab.rows[j + 1].m_low, order_tol));
        tab.high_ordered.push_back(ordered_below(tab.rows[j].m_high, tab.rows[j + 1].m_high, order_tol));
    }
    return tab;
}

inline StaticsTable statics_table(const Problem& pb, const std::vector<double>& xi_list, const ScanOptions& opt = {}) {
    return statics_from_scan(pb, multiplicity_scan(pb, xi_list, opt));
}

/// lo, lo + step, ..., hi; each point rounded to 12 decimals so 0.2·19 prints as 3.8.
inline std::vector<double> xi_lattice(double lo, double hi, double step) {
    detail::require(step > 0.0 && hi >= lo, "xi_lattice: need step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::round((lo + step * static_cast<double>(i)) * 1e12) / 1e12;
    return out;
}

}  // namespace mfg
