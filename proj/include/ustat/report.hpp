#pragma once

// CSV, JSON and SVG renderings of experiment reports. All output is a pure
// function of the report, so identical reports give identical bytes.

#include "ustat/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <system_error>
#include <vector>

namespace ustat {

/// Shortest decimal that round-trips to the same double; "nan" for NaN.
inline std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// 17 significant digits, the format used for series files.
inline std::string format_series_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

} // namespace detail

inline constexpr const char* kCoverageCsvHeader =
    "method,n,l,alpha,level,coverage,mean_width,num_sims,B,seed";

/// One row per (method, n, l, alpha). An `error` column is appended only
/// when at least one cell failed.
inline std::string coverage_csv(const CoverageReport& report) {
    const bool with_error = report.has_failures();
    std::string out = kCoverageCsvHeader;
    out += with_error ? ",error\n" : "\n";
    for (const auto& r : report.records) {
        out += std::string(to_string(r.method)) + ',' + std::to_string(r.n) + ',' +
               std::to_string(r.l) + ',' + format_number(r.alpha) + ',' + format_number(r.level) +
               ',' + format_number(r.coverage) + ',' + format_number(r.mean_width) + ',' +
               std::to_string(r.num_sims) + ',' + std::to_string(r.B) + ',' +
               std::to_string(r.seed);
        if (with_error) {
            out += ',' + detail::csv_field(r.error);
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json coverage_json(const CoverageReport& report) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : report.records) {
        nlohmann::json row = {{"method", std::string(to_string(r.method))},
                              {"n", r.n},
                              {"l", r.l},
                              {"alpha", r.alpha},
                              {"level", r.level},
                              {"coverage", detail::number_or_null(r.coverage)},
                              {"mean_width", detail::number_or_null(r.mean_width)},
                              {"num_sims", r.num_sims},
                              {"B", r.B},
                              {"seed", r.seed}};
        if (!r.ok()) {
            row["error"] = r.error;
        }
        records.push_back(std::move(row));
    }
    return {{"kind", "coverage"}, {"records", std::move(records)}};
}

inline std::string mse_csv(const MseReport& report) {
    bool with_error = false;
    for (const auto& r : report.records) {
        with_error = with_error || !r.ok();
    }
    std::string out = "n,l,alpha,mse,mse_se,mean_bootstrap_variance,target,target_se,num_sims";
    out += with_error ? ",error\n" : "\n";
    for (const auto& r : report.records) {
        out += std::to_string(r.n) + ',' + std::to_string(r.l) + ',' + format_number(r.alpha) +
               ',' + format_number(r.mse) + ',' + format_number(r.mse_se) + ',' +
               format_number(r.mean_bootstrap_variance) + ',' + format_number(r.target) + ',' +
               format_number(r.target_se) + ',' + std::to_string(r.num_sims);
        if (with_error) {
            out += ',' + detail::csv_field(r.error);
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json mse_json(const MseReport& report) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : report.records) {
        nlohmann::json row = {{"n", r.n},
                              {"l", r.l},
                              {"alpha", r.alpha},
                              {"mse", detail::number_or_null(r.mse)},
                              {"mse_se", detail::number_or_null(r.mse_se)},
                              {"mean_bootstrap_variance",
                               detail::number_or_null(r.mean_bootstrap_variance)},
                              {"target", detail::number_or_null(r.target)},
                              {"target_se", detail::number_or_null(r.target_se)},
                              {"num_sims", r.num_sims}};
        if (!r.ok()) {
            row["error"] = r.error;
        }
        records.push_back(std::move(row));
    }
    return {{"kind", "mse"}, {"records", std::move(records)}};
}

/// Counts only; wall-clock timings are deliberately left out of artifacts.
inline std::string bench_csv(const BenchReport& report) {
    bool with_error = false;
    for (const auto& r : report.records) {
        with_error = with_error || !r.error.empty();
    }
    std::string out = "n,l,m,B,precompute_evals,new_evals_per_replicate,new_lookups_per_replicate,"
                      "plugin_evals_per_replicate,expected_precompute_evals,expected_plugin_evals,"
                      "counts_exact";
    out += with_error ? ",error\n" : "\n";
    for (const auto& r : report.records) {
        out += std::to_string(r.n) + ',' + std::to_string(r.l) + ',' + std::to_string(r.m) + ',' +
               std::to_string(r.B) + ',' + std::to_string(r.precompute_evals) + ',' +
               std::to_string(r.new_evals_per_replicate) + ',' +
               std::to_string(r.new_lookups_per_replicate) + ',' +
               std::to_string(r.plugin_evals_per_replicate) + ',' +
               std::to_string(r.expected_precompute_evals) + ',' +
               std::to_string(r.expected_plugin_evals) + ',' + (r.counts_exact ? "true" : "false");
        if (with_error) {
            out += ',' + detail::csv_field(r.error);
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json bench_json(const BenchReport& report) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : report.records) {
        nlohmann::json row = {{"n", r.n},
                              {"l", r.l},
                              {"m", r.m},
                              {"B", r.B},
                              {"precompute_evals", r.precompute_evals},
                              {"new_evals_per_replicate", r.new_evals_per_replicate},
                              {"new_lookups_per_replicate", r.new_lookups_per_replicate},
                              {"plugin_evals_per_replicate", r.plugin_evals_per_replicate},
                              {"expected_precompute_evals", r.expected_precompute_evals},
                              {"expected_plugin_evals", r.expected_plugin_evals},
                              {"counts_exact", r.counts_exact}};
        if (!r.error.empty()) {
            row["error"] = r.error;
        }
        records.push_back(std::move(row));
    }
    return {{"kind", "bench"}, {"records", std::move(records)}};
}

/**
 * @brief Line chart of coverage against block length, one polyline per method.
 *
 * Plug-in is grey, new bootstrap black, subsampling dashed. A dotted line
 * marks the nominal level.
 */
inline std::string coverage_curve_svg(const CoverageReport& report) {
    constexpr double width = 640.0;
    constexpr double height = 400.0;
    constexpr double left = 60.0;
    constexpr double right = 20.0;
    constexpr double top = 20.0;
    constexpr double bottom = 50.0;

    std::vector<const CoverageRecord*> rows;
    for (const auto& r : report.records) {
        if (r.ok()) {
            rows.push_back(&r);
        }
    }
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                      "viewBox=\"0 0 640 400\">\n";
    svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    if (rows.empty()) {
        return svg + "</svg>\n";
    }

    double l_min = static_cast<double>(rows.front()->l);
    double l_max = l_min;
    double y_min = rows.front()->coverage;
    double level = rows.front()->level;
    for (const auto* r : rows) {
        l_min = std::min(l_min, static_cast<double>(r->l));
        l_max = std::max(l_max, static_cast<double>(r->l));
        y_min = std::min(y_min, r->coverage);
    }
    if (l_max == l_min) {
        l_max = l_min + 1.0;
    }
    y_min = std::floor(std::min(y_min, level) * 10.0) / 10.0;
    const double y_max = 1.0;
    if (y_min >= y_max) {
        y_min = y_max - 0.1;
    }
    auto px = [&](double l) { return left + (l - l_min) / (l_max - l_min) * (width - left - right); };
    auto py = [&](double c) { return top + (y_max - c) / (y_max - y_min) * (height - top - bottom); };

    svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(height - bottom) + "\" x2=\"" +
           fmt(width - right) + "\" y2=\"" + fmt(height - bottom) + "\"/>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) + "\" y2=\"" +
           fmt(height - bottom) + "\"/>\n</g>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(py(level)) + "\" x2=\"" +
           fmt(width - right) + "\" y2=\"" + fmt(py(level)) +
           "\" stroke=\"#999\" stroke-dasharray=\"2,3\"/>\n";

    svg += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    std::vector<std::size_t> ls;
    for (const auto* r : rows) {
        if (std::find(ls.begin(), ls.end(), r->l) == ls.end()) {
            ls.push_back(r->l);
        }
    }
    std::sort(ls.begin(), ls.end());
    for (std::size_t l : ls) {
        svg += "<text x=\"" + fmt(px(static_cast<double>(l))) + "\" y=\"" +
               fmt(height - bottom + 16) + "\" text-anchor=\"middle\">" + std::to_string(l) +
               "</text>\n";
    }
    for (double c = y_min; c <= y_max + 1e-9; c += 0.1) {
        svg += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(py(c) + 4) +
               "\" text-anchor=\"end\">" + fmt(c) + "</text>\n";
    }
    svg += "<text x=\"" + fmt((left + width - right) / 2) + "\" y=\"" + fmt(height - 12) +
           "\" text-anchor=\"middle\">block length l</text>\n";
    svg += "<text x=\"14\" y=\"" + fmt((top + height - bottom) / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
           fmt((top + height - bottom) / 2) + ")\">coverage</text>\n</g>\n";

    for (Method method : all_methods()) {
        std::vector<const CoverageRecord*> line;
        for (const auto* r : rows) {
            if (r->method == method) {
                line.push_back(r);
            }
        }
        if (line.empty()) {
            continue;
        }
        std::sort(line.begin(), line.end(),
                  [](const CoverageRecord* a, const CoverageRecord* b) { return a->l < b->l; });
        std::string points;
        for (const auto* r : line) {
            if (!points.empty()) {
                points += ' ';
            }
            points += fmt(px(static_cast<double>(r->l))) + ',' + fmt(py(r->coverage));
        }
        const char* style = method == Method::PlugInBootstrap ? "stroke=\"#888\""
                            : method == Method::NewBootstrap  ? "stroke=\"black\""
                                                              : "stroke=\"black\" stroke-dasharray=\"6,4\"";
        svg += "<polyline fill=\"none\" stroke-width=\"2\" " + std::string(style) +
               " data-method=\"" + std::string(to_string(method)) + "\" points=\"" + points +
               "\"/>\n";
    }
    return svg + "</svg>\n";
}

} // namespace ustat
