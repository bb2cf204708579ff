#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mfg/error.hpp"
#include "mfg/fixedpoint.hpp"
#include "mfg/mc_oracle.hpp"
#include "mfg/sweep.hpp"

namespace mfg {

/**
 * Everything a CLI run needs. Every key is optional; defaults are the
 * baseline calibration (log mean reversion, isoelastic demand, ξ = 3.8).
 *
 *   [model]     kind, aggregator, rho, D, gamma, zeta, delta, sigma, xi, a_max, x0
 *   [grid]      x_min, x_max, n_x, spacing (log | linear)
 *   [time]      T, dt
 *   [iteration] scheme (banach | fictitious), init (envelope_min | envelope_max | const:<v>),
 *               epsilon, max_iter, terminal_discounted, policy_iteration
 *   [sweep]     xi_list (comma separated) or xi_min, xi_max, xi_step; gap_tol, classify_tol, thresholds
 *   [mc]        n_paths, seed, substeps
 *   [output]    dir, dump_fields, dump_distribution
 *
 * Numbers may be written as exp(<v>), e.g. x_min = exp(-15).
 */
struct RunConfig {
    ModelSpec model{};
    double x_min = std::exp(-15.0);
    double x_max = std::exp(15.0);
    std::size_t n_x = 501;
    Spacing spacing = Spacing::Log;
    double horizon = 1.0;
    double dt = 0.1;
    IterationConfig iteration{1e-6, 500, Scheme::Banach, Init::envelope_min()};
    SolverOptions solver{};
    std::vector<double> xi_list = xi_lattice(0.0, 6.0, 0.2);
    double gap_tol = 0.1;
    double classify_tol = 0.01;
    bool thresholds = true;
    SimConfig mc{};
    std::filesystem::path output_dir = "out";
    bool dump_fields = false;
    bool dump_distribution = false;

    SpaceGrid grid() const {
        return spacing == Spacing::Log ? build_log_grid(x_min, x_max, n_x) : build_linear_grid(x_min, x_max, n_x);
    }
    TimeGrid time() const { return build_time_grid(horizon, dt); }
    Problem problem() const { return Problem(model, grid(), time(), solver); }
};

namespace detail {

inline double parse_number(const std::string& key, std::string text) {
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    text = trim(text);
    bool exponential = false;
    if (text.rfind("exp(", 0) == 0 && text.size() > 5 && text.back() == ')') {
        exponential = true;
        text = trim(text.substr(4, text.size() - 5));
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return exponential ? std::exp(v) : v;
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' is not a number: '" + text + "'");
    }
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    const double v = parse_number(key, text);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19)
        throw ConfigError("config: '" + key + "' must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("config: '" + key + "' must be true or false");
}

inline ModelKind parse_kind(const std::string& text) {
    if (text == "lq_meanrev") return ModelKind::LqMeanRev;
    if (text == "log_meanrev_isoelastic") return ModelKind::LogMeanRevIsoelastic;
    if (text == "geometric_isoelastic") return ModelKind::GeometricIsoelastic;
    throw ConfigError("config: unknown model kind '" + text + "'");
}

inline Aggregator parse_aggregator(const std::string& text) {
    if (text == "arithmetic") return Aggregator::Arithmetic;
    if (text == "geometric") return Aggregator::Geometric;
    throw ConfigError("config: unknown aggregator '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
    if (out.empty()) throw ConfigError("config: '" + key + "' is empty");
    return out;
}

}  // namespace detail

inline Scheme parse_scheme(const std::string& text) {
    if (text == "banach") return Scheme::Banach;
    if (text == "fictitious" || text == "fictitious_play") return Scheme::Fictitious;
    throw ConfigError("unknown scheme '" + text + "' (expected banach or fictitious)");
}

/// envelope_min | envelope_max | const:<value>
inline Init parse_init(const std::string& text) {
    if (text == "envelope_min") return Init::envelope_min();
    if (text == "envelope_max") return Init::envelope_max();
    if (text.rfind("const:", 0) == 0) return Init::constant(detail::parse_number("init", text.substr(6)));
    throw ConfigError("unknown init '" + text + "' (expected envelope_min, envelope_max or const:<value>)");
}

/// Parses INI text. Unknown sections or keys, malformed values and invalid models are ConfigErrors.
inline RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    static const std::map<std::string, std::set<std::string>> known{
        {"model", {"kind", "aggregator", "rho", "D", "gamma", "zeta", "delta", "sigma", "xi", "a_max", "x0"}},
        {"grid", {"x_min", "x_max", "n_x", "spacing"}},
        {"time", {"T", "dt"}},
        {"iteration", {"scheme", "init", "epsilon", "max_iter", "terminal_discounted", "policy_iteration"}},
        {"sweep", {"xi_list", "xi_min", "xi_max", "xi_step", "gap_tol", "classify_tol", "thresholds"}},
        {"mc", {"n_paths", "seed", "substeps"}},
        {"output", {"dir", "dump_fields", "dump_distribution"}},
    };

    RunConfig cfg;
    bool aggregator_set = false;
    std::optional<double> xi_min, xi_max, xi_step;
    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw ConfigError("config: key '" + section + "' outside any section");
        const auto sec = known.find(section);
        if (sec == known.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            if (!sec->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            const std::string name = section + "." + key;
            const std::string v = node.data();
            const auto num = [&] { return detail::parse_number(name, v); };
            auto& p = cfg.model.params;
            if (section == "model") {
                if (key == "kind") cfg.model.kind = detail::parse_kind(v);
                else if (key == "aggregator") cfg.model.aggregator = detail::parse_aggregator(v), aggregator_set = true;
                else if (key == "rho") p.rho = num();
                else if (key == "D") p.D = num();
                else if (key == "gamma") p.gamma = num();
                else if (key == "zeta") p.zeta = num();
                else if (key == "delta") p.delta = num();
                else if (key == "sigma") p.sigma = num();
                else if (key == "xi") p.xi = num();
                else if (key == "a_max") p.a_max = num();
                else if (key == "x0") p.x0 = num();
            } else if (section == "grid") {
                if (key == "x_min") cfg.x_min = num();
                else if (key == "x_max") cfg.x_max = num();
                else if (key == "n_x") cfg.n_x = detail::parse_unsigned(name, v);
                else if (key == "spacing") {
                    if (v == "log") cfg.spacing = Spacing::Log;
                    else if (v == "linear") cfg.spacing = Spacing::Linear;
                    else throw ConfigError("config: grid.spacing must be log or linear");
                }
            } else if (section == "time") {
                if (key == "T") cfg.horizon = num();
                else if (key == "dt") cfg.dt = num();
            } else if (section == "iteration") {
                if (key == "scheme") cfg.iteration.scheme = parse_scheme(v);
                else if (key == "init") cfg.iteration.init = parse_init(v);
                else if (key == "epsilon") cfg.iteration.epsilon = num();
                else if (key == "max_iter") cfg.iteration.max_iter = detail::parse_unsigned(name, v);
                else if (key == "terminal_discounted") cfg.solver.terminal_discounted = detail::parse_bool(name, v);
                else if (key == "policy_iteration") cfg.solver.policy_iteration = detail::parse_bool(name, v);
            } else if (section == "sweep") {
                if (key == "xi_list") cfg.xi_list = detail::parse_list(name, v);
                else if (key == "xi_min") xi_min = num();
                else if (key == "xi_max") xi_max = num();
                else if (key == "xi_step") xi_step = num();
                else if (key == "gap_tol") cfg.gap_tol = num();
                else if (key == "classify_tol") cfg.classify_tol = num();
                else if (key == "thresholds") cfg.thresholds = detail::parse_bool(name, v);
            } else if (section == "mc") {
                if (key == "n_paths") cfg.mc.n_paths = detail::parse_unsigned(name, v);
                else if (key == "seed") cfg.mc.seed = detail::parse_unsigned(name, v);
                else if (key == "substeps") cfg.mc.substeps = detail::parse_unsigned(name, v);
            } else if (section == "output") {
                if (key == "dir") cfg.output_dir = v;
                else if (key == "dump_fields") cfg.dump_fields = detail::parse_bool(name, v);
                else if (key == "dump_distribution") cfg.dump_distribution = detail::parse_bool(name, v);
            }
        }
    }

    if (!aggregator_set) cfg.model.aggregator = cfg.model.isoelastic() ? Aggregator::Geometric : Aggregator::Arithmetic;
    if (xi_min || xi_max || xi_step) {
        if (tree.get_child("sweep").count("xi_list"))
            throw ConfigError("config: give either sweep.xi_list or sweep.xi_min/xi_max/xi_step, not both");
        if (!(xi_min && xi_max && xi_step))
            throw ConfigError("config: sweep.xi_min, xi_max and xi_step must be given together");
        cfg.xi_list = xi_lattice(*xi_min, *xi_max, *xi_step);
    }
    if (!std::is_sorted(cfg.xi_list.begin(), cfg.xi_list.end()))
        throw ConfigError("config: sweep.xi_list must be sorted");
    if (!(cfg.iteration.epsilon > 0.0) || cfg.iteration.max_iter < 1)
        throw ConfigError("config: iteration.epsilon must be > 0 and max_iter >= 1");
    if (cfg.mc.n_paths < 1 || cfg.mc.substeps < 1) throw ConfigError("config: mc.n_paths and mc.substeps must be >= 1");
    if (!(cfg.gap_tol > 0.0) || !(cfg.classify_tol > 0.0))
        throw ConfigError("config: sweep.gap_tol and classify_tol must be > 0");
    try {
        validate(cfg.model);
        (void)cfg.problem();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

/// Built-in configurations by name.
inline std::optional<std::string> builtin_config(const std::string& name) {
    if (name == "baseline" || name == "paper_baseline") return std::string("[model]\nkind = log_meanrev_isoelastic\n");
    if (name == "geometric") return std::string("[model]\nkind = geometric_isoelastic\n");
    return std::nullopt;
}

/// A built-in name or a path to an INI file.
inline RunConfig load_config(const std::string& name_or_path) {
    if (auto text = builtin_config(name_or_path)) return parse_config(*text);
    std::ifstream in(name_or_path);
    if (!in) throw ConfigError("config: cannot read '" + name_or_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace mfg
