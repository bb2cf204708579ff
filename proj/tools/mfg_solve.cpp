// mfg_solve: equilibria, ξ sweeps and Monte-Carlo checks from an INI configuration.
//
//   mfg_solve solve  --config baseline [--init const:1e-6] [--xi 3.8] [--scheme banach]
//   mfg_solve sweep  --config configs/geometric.ini [--xi 0,3.8,4]
//   mfg_solve verify --config baseline
//
// Exit codes: 0 success, 1 configuration/IO/numerical error, 2 solve did not
// converge, 3 verification failed.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfg/config.hpp"
#include "mfg/io.hpp"

namespace fs = std::filesystem;
using namespace mfg;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kNotConverged = 2;
constexpr int kVerifyFailed = 3;

struct Overrides {
    std::string config = "baseline";
    std::optional<std::string> init;
    std::optional<std::string> xi;
    std::optional<std::string> scheme;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
};

RunConfig resolve(const Overrides& o, bool xi_is_list) {
    RunConfig cfg = load_config(o.config);
    if (o.init) cfg.iteration.init = parse_init(*o.init);
    if (o.scheme) cfg.iteration.scheme = parse_scheme(*o.scheme);
    if (o.xi) {
        const auto values = detail::parse_list("--xi", *o.xi);
        if (xi_is_list) {
            cfg.xi_list = values;
            if (!std::is_sorted(cfg.xi_list.begin(), cfg.xi_list.end()))
                throw ConfigError("--xi: values must be sorted");
        } else {
            if (values.size() != 1) throw ConfigError("--xi: expected a single value");
            cfg.model.params.xi = values.front();
        }
    }
    if (const char* env = std::getenv("MFG_SOLVE_OUT"); env && *env) cfg.output_dir = env;
    if (o.out) cfg.output_dir = *o.out;
    if (o.threads) cfg.mc.threads = *o.threads;
    if (o.seed) cfg.mc.seed = *o.seed;
    try {
        validate(cfg.model);
        (void)cfg.problem();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

int cmd_solve(const RunConfig& cfg) {
    const Problem pb = cfg.problem();
    const auto res = solve_equilibrium(pb, cfg.iteration);
    fs::create_directories(cfg.output_dir);
    io::write_equilibrium(cfg.output_dir / "equilibrium.csv", pb.time(), res.m_star);
    io::write_json(cfg.output_dir / "manifest.json", io::manifest(pb, cfg.iteration, res));
    if (cfg.dump_fields) io::write_fields(cfg.output_dir / "fields.csv", pb, res.values, res.policy);
    if (cfg.dump_distribution) io::write_distribution(cfg.output_dir / "distribution.csv", pb, res.distribution);
    std::cout << "scheme " << to_string(cfg.iteration.scheme) << ", xi " << io::fmt(pb.params().xi) << ": "
              << (res.converged ? "converged" : "NON_CONVERGED") << " after " << res.iterations
              << " iterations, residual " << io::fmt(res.residual_history.back()) << ", m*(T) "
              << io::fmt(res.m_star.values.back()) << ", iterates " << to_string(res.monotone_flag) << '\n';
    return res.converged ? kOk : kNotConverged;
}

int cmd_sweep(const RunConfig& cfg) {
    const Problem pb = cfg.problem();
    ScanOptions opt;
    opt.gap_tol = cfg.gap_tol;
    opt.classify_tol = cfg.classify_tol;
    opt.thresholds = cfg.thresholds;
    opt.threads = cfg.mc.threads;
    opt.iteration = cfg.iteration;
    const auto rep = multiplicity_scan(pb, cfg.xi_list, opt);
    const auto tab = statics_from_scan(pb, rep);
    fs::create_directories(cfg.output_dir);
    io::write_report(cfg.output_dir / "report.csv", pb.time(), rep);
    io::write_statics(cfg.output_dir / "statics.csv", tab);
    io::write_text(cfg.output_dir / "region.svg", io::region_chart(rep));

    if (rep.region)
        std::cout << "multiplicity region [" << io::fmt(rep.region->lo) << ", " << io::fmt(rep.region->hi) << "]";
    else
        std::cout << "no multiplicity region";
    std::cout << " over " << rep.xi_values.size() << " xi values\n";
    for (auto i : rep.anomalies) std::cout << "anomaly: gap " << io::fmt(rep.gap[i]) << " at xi " << io::fmt(rep.xi_values[i]) << '\n';
    for (std::size_t i = 0; i < rep.xi_values.size(); ++i)
        if (!rep.low[i].converged || !rep.high[i].converged)
            std::cout << "warning: non-converged run at xi " << io::fmt(rep.xi_values[i]) << '\n';
    return kOk;
}

int cmd_verify(const RunConfig& cfg) {
    const Problem pb = cfg.problem();
    const auto& grid = pb.grid();
    const Interval m_range{grid.front(), grid.back()};
    const auto rep = verify_assumptions(pb.spec(), grid, m_range, {0.0, pb.params().xi});
    bool ok = rep.standing_ok();
    for (const auto* c : {&rep.concavity, &rep.supermod_m, &rep.supermod_xi}) {
        const bool standing = c != &rep.supermod_xi;
        std::cout << (c->holds() ? "PASS " : standing ? "FAIL " : "WARN ") << c->name << " min "
                  << io::fmt(c->min_value);
        if (c->first_violation)
            std::cout << " (violated at x=" << io::fmt(c->first_violation->x) << " m=" << io::fmt(c->first_violation->m)
                      << " xi=" << io::fmt(c->first_violation->xi) << ")";
        std::cout << '\n';
    }

    const fs::path eq_file = cfg.output_dir / "equilibrium.csv";
    if (fs::exists(eq_file)) {
        const MeanPath m = io::read_equilibrium(eq_file);
        if (m.size() != pb.time().size())
            throw ConfigError(eq_file.string() + ": " + std::to_string(m.size()) + " rows, expected " +
                              std::to_string(pb.time().size()));
        for (double v : m.values)
            if (!std::isfinite(v) || (pb.spec().isoelastic() && !(v > 0.0)))
                throw ConfigError(eq_file.string() + ": invalid aggregate value");
        const auto hjb = solve_hjb(pb, m);
        const auto verdict = verify_equilibrium(pb, m, hjb.policy, cfg.mc);
        io::write_verdict(cfg.output_dir / "mc.csv", verdict);
        const auto& w = verdict.rows[verdict.worst_node];
        std::cout << (verdict.pass ? "PASS" : "FAIL") << " monte_carlo worst t=" << io::fmt(w.t)
                  << " m_mc=" << io::fmt(w.m_mc) << " m_pde=" << io::fmt(w.m_pde) << " se=" << io::fmt(w.se)
                  << " allowance=" << io::fmt(w.allowance) << '\n';
        ok = ok && verdict.pass;
    } else {
        std::cout << "SKIP monte_carlo (no " << eq_file.string() << ")\n";
    }
    return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field equilibria of production games with strategic complementarities"};
    app.require_subcommand(1);
    Overrides o;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "built-in name (baseline, geometric) or INI path")->capture_default_str();
        sub->add_option("--init", o.init, "envelope_min | envelope_max | const:<value>");
        sub->add_option("--xi", o.xi, "interaction strength (sweep: comma-separated list)");
        sub->add_option("--scheme", o.scheme, "banach | fictitious");
        sub->add_option("--out", o.out, "output directory (overrides MFG_SOLVE_OUT and the config)");
        sub->add_option("--threads", o.threads, "worker threads, 0 = all cores");
        sub->add_option("--seed", o.seed, "Monte-Carlo seed");
    };
    auto* solve = app.add_subcommand("solve", "compute one equilibrium");
    auto* sweep = app.add_subcommand("sweep", "scan xi for multiple equilibria");
    auto* verify = app.add_subcommand("verify", "check model assumptions and re-simulate a stored equilibrium");
    for (auto* s : {solve, sweep, verify}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kError;
    }

    try {
        if (solve->parsed()) return cmd_solve(resolve(o, false));
        if (sweep->parsed()) return cmd_sweep(resolve(o, true));
        return cmd_verify(resolve(o, false));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kError;
}
