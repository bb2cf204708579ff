#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/fixedpoint.hpp"
#include "mfg/mc_oracle.hpp"
#include "mfg/sweep.hpp"

namespace mfg::io {

/// 17 significant digits: every double round-trips.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
        write_fields(header);
    }

    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

    void row(const std::vector<double>& values) {
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ',';
            line += fmt(values[i]);
        }
        out_ << line << '\n';
    }

    void close() {
        out_.close();
        if (out_.fail()) throw std::runtime_error("write failed");
    }

private:
    void write_fields(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
        out_ << '\n';
    }

    std::ofstream out_;
};

inline void write_equilibrium(const std::filesystem::path& path, const TimeGrid& time, const MeanPath& m) {
    CsvWriter w(path, {"t", "m_star"});
    for (std::size_t k = 0; k < m.size(); ++k) w.row({time[k], m[k]});
    w.close();
}

inline void write_fields(const std::filesystem::path& path, const Problem& pb, const ValueField& v,
                         const PolicyField& a) {
    CsvWriter w(path, {"t", "x", "V", "alpha"});
    for (std::size_t k = 0; k < v.n_time(); ++k)
        for (std::size_t i = 0; i < v.n_space(); ++i) w.row({pb.time()[k], pb.grid()[i], v(k, i), a(k, i)});
    w.close();
}

inline void write_distribution(const std::filesystem::path& path, const Problem& pb, const DistributionPath& g) {
    CsvWriter w(path, {"t", "x", "mass"});
    for (std::size_t k = 0; k < g.n_time(); ++k)
        for (std::size_t i = 0; i < g.n_space(); ++i) w.row({pb.time()[k], pb.grid()[i], g(k, i)});
    w.close();
}

inline void write_verdict(const std::filesystem::path& path, const Verdict& v) {
    CsvWriter w(path, {"t", "m_mc", "se", "m_pde", "z_score"});
    for (const auto& r : v.rows) w.row({r.t, r.m_mc, r.se, r.m_pde, r.z_score});
    w.close();
}

/// Reads back a t,m_star file; throws on a malformed header or row.
inline MeanPath read_equilibrium(const std::filesystem::path& path, std::vector<double>* times = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,m_star")
        throw std::runtime_error(path.string() + ": expected header t,m_star");
    MeanPath m;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
        try {
            std::size_t used = 0;
            const double t = std::stod(line.substr(0, comma));
            const std::string rest = line.substr(comma + 1);
            const double v = std::stod(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("trailing characters");
            if (times) times->push_back(t);
            m.values.push_back(v);
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
        }
    }
    return m;
}

inline void write_report(const std::filesystem::path& path, const TimeGrid& time, const MultiplicityReport& rep) {
    std::vector<std::string> header{"xi", "gap"};
    for (std::size_t k = 0; k < time.size(); ++k) header.push_back("m_low(t_" + std::to_string(k) + ")");
    for (std::size_t k = 0; k < time.size(); ++k) header.push_back("m_high(t_" + std::to_string(k) + ")");
    for (const char* h : {"J_low", "J_high", "threshold_log_m1"}) header.emplace_back(h);
    CsvWriter w(path, header);
    for (std::size_t i = 0; i < rep.xi_values.size(); ++i) {
        std::vector<double> row{rep.xi_values[i], rep.gap[i]};
        row.insert(row.end(), rep.low[i].m_star.values.begin(), rep.low[i].m_star.values.end());
        row.insert(row.end(), rep.high[i].m_star.values.begin(), rep.high[i].m_star.values.end());
        row.push_back(rep.low[i].reward);
        row.push_back(rep.high[i].reward);
        row.push_back(rep.thresholds[i].value_or(std::numeric_limits<double>::quiet_NaN()));
        w.row(row);
    }
    w.close();
}

/// One row per ξ: rewards, time-averaged (log-)prices and the ordering verdicts.
inline void write_statics(const std::filesystem::path& path, const StaticsTable& tab) {
    CsvWriter w(path, {"xi", "J_low", "J_high", "price_low_mean", "price_high_mean", "reward_ordered",
                       "price_ordered", "low_ordered_next", "high_ordered_next"});
    const auto avg = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        const auto& r = tab.rows[i];
        const double nan = std::numeric_limits<double>::quiet_NaN();
        w.row({r.xi, r.reward_low, r.reward_high, avg(r.price_low), avg(r.price_high),
               tab.reward_ordered[i] ? 1.0 : 0.0, tab.price_ordered[i] ? 1.0 : 0.0,
               i < tab.low_ordered.size() ? (tab.low_ordered[i] ? 1.0 : 0.0) : nan,
               i < tab.high_ordered.size() ? (tab.high_ordered[i] ? 1.0 : 0.0) : nan});
    }
    w.close();
}

inline nlohmann::json to_json(const ModelSpec& s) {
    const auto& p = s.params;
    return {{"kind", std::string(to_string(s.kind))},
            {"aggregator", std::string(to_string(s.aggregator))},
            {"rho", p.rho},
            {"D", p.D},
            {"gamma", p.gamma},
            {"zeta", p.zeta},
            {"delta", p.delta},
            {"sigma", p.sigma},
            {"xi", p.xi},
            {"a_max", p.a_max},
            {"x0", p.x0}};
}

inline nlohmann::json manifest(const Problem& pb, const IterationConfig& cfg, const EquilibriumResult& res) {
    nlohmann::json j;
    j["model"] = to_json(pb.spec());
    j["grid"] = {{"x_min", pb.grid().front()},
                 {"x_max", pb.grid().back()},
                 {"n_x", pb.grid().size()},
                 {"spacing", pb.grid().kind() == Spacing::Log ? "log" : "linear"}};
    j["time"] = {{"T", pb.time().horizon()}, {"dt", pb.time().dt()}};
    j["solver"] = {{"terminal_discounted", pb.options().terminal_discounted},
                   {"policy_iteration", pb.options().policy_iteration}};
    std::string init;
    switch (cfg.init.kind) {
        case Init::Kind::EnvelopeMin: init = "envelope_min"; break;
        case Init::Kind::EnvelopeMax: init = "envelope_max"; break;
        case Init::Kind::Constant: init = "const:" + fmt(cfg.init.value); break;
    }
    j["iteration"] = {{"scheme", std::string(to_string(cfg.scheme))},
                      {"init", init},
                      {"epsilon", cfg.epsilon},
                      {"max_iter", cfg.max_iter}};
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["residuals"] = res.residual_history;
    j["monotone_flag"] = std::string(to_string(res.monotone_flag));
    j["largest_decrease"] = res.largest_decrease;
    j["largest_increase"] = res.largest_increase;
    j["reward"] = res.reward;
    j["m_star"] = res.m_star.values;
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

struct Series {
    std::string label;
    std::vector<double> x;
    /// NaN entries break the line.
    std::vector<double> y;
    std::string color = "#1f77b4";
};

/// Minimal standalone SVG line chart with axes, ticks and a legend.
inline std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series) {
    constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
        svg << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(xv)
            << "</text>\n";
        svg << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    }
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << x_label
        << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        std::string pts;
        const auto flush = [&] {
            if (!pts.empty())
                svg << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"2\" points=\"" << pts
                    << "\"/>\n";
            pts.clear();
        };
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
            if (!std::isfinite(ser.y[i])) {
                flush();
                continue;
            }
            pts += num(px(ser.x[i])) + "," + num(py(ser.y[i])) + " ";
        }
        flush();
        const double ly = T + 14 + 16 * static_cast<double>(s);
        svg << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 130 << "\" y2=\"" << ly
            << "\" stroke=\"" << ser.color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << W - R - 124 << "\" y=\"" << ly + 4 << "\">" << ser.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

/// Gap and basin threshold against ξ.
inline std::string region_chart(const MultiplicityReport& rep) {
    Series gap{"gap", rep.xi_values, rep.gap, "#1f77b4"};
    Series thr{"threshold", rep.xi_values, {}, "#d62728"};
    for (const auto& t : rep.thresholds) thr.y.push_back(t.value_or(std::numeric_limits<double>::quiet_NaN()));
    const std::string y = rep.log_scale ? "gap (log m) / threshold (log m1)" : "gap / threshold (m1)";
    return line_chart("equilibrium multiplicity", "xi", y, {gap, thr});
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

}  // namespace mfg::io
