// ustat: command-line front end for the U-statistic block bootstrap library.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric/guard error.

#include "ustat/ustat.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
    std::vector<T> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (item.empty()) {
            continue;
        }
        T value{};
        const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
            throw UsageError(std::string("cannot parse '") + std::string(item) + "' in " + flag);
        }
        out.push_back(value);
    }
    return out;
}

std::vector<double> read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open input file '" + path + "'");
    }
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view item = trim(line);
        if (item.empty()) {
            continue;
        }
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": cannot parse '" +
                            std::string(item) + "' as a number");
        }
        if (!std::isfinite(v)) {
            throw DataError(path + ":" + std::to_string(line_no) + ": value is not finite");
        }
        values.push_back(v);
    }
    if (values.size() < 2) {
        throw DataError(path + ": need at least 2 values, found " + std::to_string(values.size()));
    }
    return values;
}

void write_output(const std::string& path, const std::string& bytes) {
    try {
        ustat::detail::write_file_atomically(path, bytes);
    } catch (const std::exception& e) {
        throw DataError(std::string("cannot write output: ") + e.what());
    }
}

unsigned resolve_threads(unsigned flag) {
    if (flag > 0) {
        return flag;
    }
    if (const char* env = std::getenv("USTAT_THREADS")) {
        unsigned v = 0;
        const std::string_view text(env);
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec == std::errc{} && v > 0) {
            return v;
        }
    }
    return ustat::default_thread_count();
}

void check_alpha(double alpha) {
    if (!(std::fabs(alpha) < 1.0)) {
        std::ostringstream msg;
        msg << "--alpha " << alpha << " violates the stationarity bound |alpha| < 1";
        throw UsageError(msg.str());
    }
}

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw UsageError("--level must lie in (0, 1)");
    }
}

/// Flag values that name an unknown choice are usage errors.
template <class Fn>
auto parse_flag(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ustat::InvalidInput& e) {
        throw UsageError(e.what());
    }
}

std::vector<ustat::Method> parse_methods(const std::string& text) {
    std::vector<ustat::Method> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (!item.empty()) {
            out.push_back(parse_flag([&] { return ustat::parse_method(item); }));
        }
    }
    if (out.empty()) {
        throw UsageError("--methods must name at least one method");
    }
    return out;
}

// --- subcommands -----------------------------------------------------------

struct GenerateArgs {
    double alpha = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 1;
    std::size_t burn_in = 1000;
    std::string out;
};

int cmd_generate(const GenerateArgs& a) {
    check_alpha(a.alpha);
    if (a.n < 2) {
        throw UsageError("--n must be at least 2");
    }
    const ustat::Sample sample = ustat::ar1_generate({a.alpha, a.n, a.burn_in, a.seed});
    std::string bytes;
    for (double v : sample.values()) {
        bytes += ustat::format_series_value(v);
        bytes += '\n';
    }
    if (a.out.empty()) {
        std::cout << bytes;
    } else {
        write_output(a.out, bytes);
    }
    return 0;
}

struct CiArgs {
    std::string in;
    std::string kernel = "variance";
    std::string method = "new";
    std::string scheme = "circular";
    std::size_t l = 0;
    std::size_t B = 1000;
    double level = 0.95;
    std::uint64_t seed = 1;
    std::string json;
    unsigned threads = 0;
};

int cmd_ci(const CiArgs& a) {
    check_level(a.level);
    const ustat::KernelId kernel_id = parse_flag([&] { return ustat::parse_kernel(a.kernel); });
    const ustat::Method method = parse_flag([&] { return ustat::parse_method(a.method); });
    const ustat::BlockScheme scheme = parse_flag([&] { return ustat::parse_scheme(a.scheme); });
    if (a.l < 2) {
        throw UsageError("--l must be at least 2");
    }
    if (a.B < 1) {
        throw UsageError("--B must be at least 1");
    }
    const ustat::Sample sample(read_series(a.in));
    if (a.l > sample.size()) {
        throw DataError("--l " + std::to_string(a.l) + " exceeds the series length " +
                        std::to_string(sample.size()));
    }
    const unsigned threads = resolve_threads(a.threads);

    return ustat::visit_kernel(kernel_id, [&](const auto& kernel) {
        const double point = ustat::u_statistic(sample, kernel);
        ustat::ReplicateSet reps;
        switch (method) {
        case ustat::Method::NewBootstrap:
            reps = ustat::new_bootstrap(ustat::block_u_stats(sample, kernel, scheme, a.l, threads),
                                        a.B, a.seed, threads);
            break;
        case ustat::Method::PlugInBootstrap:
            reps = ustat::plug_in_bootstrap(sample, kernel, scheme, a.l, a.B, a.seed, threads);
            break;
        case ustat::Method::Subsampling:
            reps = ustat::subsampling_distribution(sample, kernel, scheme, a.l);
            break;
        }
        const ustat::ConfidenceInterval ci =
            ustat::confidence_interval(point, reps, sample.size(), a.level);
        if (!std::isfinite(ci.lower) || !std::isfinite(ci.upper)) {
            throw std::range_error("interval endpoints are not finite");
        }

        std::cout << "point  " << ustat::format_number(point) << '\n'
                  << "lower  " << ustat::format_number(ci.lower) << '\n'
                  << "upper  " << ustat::format_number(ci.upper) << '\n'
                  << "level  " << ustat::format_number(ci.level) << '\n'
                  << "method " << ustat::to_string(method) << " scheme "
                  << ustat::to_string(scheme) << " kernel " << kernel.name() << " n "
                  << sample.size() << " l " << a.l << " replicates " << reps.size() << '\n';

        if (!a.json.empty()) {
            const nlohmann::json doc = {{"kind", "ci"},
                                        {"point", point},
                                        {"lower", ci.lower},
                                        {"upper", ci.upper},
                                        {"level", ci.level},
                                        {"method", std::string(ustat::to_string(method))},
                                        {"scheme", std::string(ustat::to_string(scheme))},
                                        {"kernel", std::string(kernel.name())},
                                        {"n", sample.size()},
                                        {"l", a.l},
                                        {"m", reps.meta.m},
                                        {"B", reps.size()},
                                        {"seed", reps.meta.seed},
                                        {"center", reps.center},
                                        {"scale", reps.scale}};
            write_output(a.json, doc.dump(2) + "\n");
        }
        return 0;
    });
}

struct CoverageArgs {
    std::string n = "200";
    std::string l = "10";
    std::string alpha = "0.4";
    std::string methods = "plugin,new,subsample";
    std::string scheme = "circular";
    double level = 0.95;
    std::size_t sims = 2000;
    std::size_t B = 500;
    std::uint64_t seed = 20240101;
    std::string out;
    std::string json;
    unsigned threads = 0;
};

ustat::CoverageConfig coverage_config(const CoverageArgs& a) {
    check_level(a.level);
    if (a.sims < 1 || a.B < 1) {
        throw UsageError("--sims and --B must be at least 1");
    }
    ustat::CoverageConfig cfg;
    cfg.methods = parse_methods(a.methods);
    cfg.scheme = parse_flag([&] { return ustat::parse_scheme(a.scheme); });
    cfg.n_list = parse_list<std::size_t>(a.n, "--n");
    cfg.l_list = parse_list<std::size_t>(a.l, "--l");
    cfg.alpha_list = parse_list<double>(a.alpha, "--alpha");
    cfg.level = a.level;
    cfg.num_sims = a.sims;
    cfg.num_resamples = a.B;
    cfg.master_seed = a.seed;
    cfg.threads = resolve_threads(a.threads);
    return cfg;
}

void print_coverage(const ustat::CoverageReport& report) {
    for (const auto& r : report.records) {
        std::cout << ustat::to_string(r.method) << " n=" << r.n << " l=" << r.l
                  << " alpha=" << ustat::format_number(r.alpha) << " coverage=";
        if (r.ok()) {
            std::cout << ustat::format_number(r.coverage)
                      << " width=" << ustat::format_number(r.mean_width) << '\n';
        } else {
            std::cout << "failed (" << r.error << ")\n";
        }
    }
}

int cmd_coverage(const CoverageArgs& a) {
    const ustat::CoverageConfig cfg = coverage_config(a);
    const ustat::CoverageReport report = ustat::run_coverage(cfg);
    write_output(a.out, ustat::coverage_csv(report));
    if (!a.json.empty()) {
        write_output(a.json, ustat::coverage_json(report).dump(2) + "\n");
    }
    print_coverage(report);
    return 0;
}

struct CurveArgs : CoverageArgs {
    std::string svg;
};

int cmd_curve(const CurveArgs& a) {
    ustat::CoverageConfig cfg = coverage_config(a);
    if (cfg.n_list.size() != 1 || cfg.alpha_list.size() != 1) {
        throw UsageError("curve takes exactly one --n and one --alpha");
    }
    const ustat::CoverageReport report = ustat::figure_block_length_curve(
        cfg.n_list.front(), cfg.alpha_list.front(), cfg.l_list, cfg);
    write_output(a.out, ustat::coverage_csv(report));
    if (!a.json.empty()) {
        write_output(a.json, ustat::coverage_json(report).dump(2) + "\n");
    }
    if (!a.svg.empty()) {
        write_output(a.svg, ustat::coverage_curve_svg(report));
    }
    print_coverage(report);
    return 0;
}

struct MseArgs {
    std::string n = "1024";
    std::string l = "2,4,8,16,32,64,256,512";
    double alpha = 0.4;
    std::string scheme = "circular";
    std::size_t sims = 500;
    std::size_t oracle_sims = 100000;
    std::string cache_dir;
    std::uint64_t seed = 20240101;
    std::string out;
    std::string json;
    unsigned threads = 0;
};

int cmd_mse(const MseArgs& a) {
    check_alpha(a.alpha);
    if (a.sims < 1 || a.oracle_sims < 2) {
        throw UsageError("--sims must be at least 1 and --oracle-sims at least 2");
    }
    ustat::MseConfig cfg;
    cfg.n_list = parse_list<std::size_t>(a.n, "--n");
    cfg.l_list = parse_list<std::size_t>(a.l, "--l");
    cfg.alpha = a.alpha;
    cfg.scheme = parse_flag([&] { return ustat::parse_scheme(a.scheme); });
    cfg.num_sims = a.sims;
    cfg.oracle_sims = a.oracle_sims;
    cfg.cache_dir = a.cache_dir;
    cfg.master_seed = a.seed;
    cfg.threads = resolve_threads(a.threads);
    const ustat::MseReport report = ustat::run_mse(cfg);
    write_output(a.out, ustat::mse_csv(report));
    if (!a.json.empty()) {
        write_output(a.json, ustat::mse_json(report).dump(2) + "\n");
    }
    for (const auto& r : report.records) {
        std::cout << "n=" << r.n << " l=" << r.l << " mse=";
        if (r.ok()) {
            std::cout << ustat::format_number(r.mse) << " se=" << ustat::format_number(r.mse_se)
                      << " target=" << ustat::format_number(r.target) << '\n';
        } else {
            std::cout << "failed (" << r.error << ")\n";
        }
    }
    return 0;
}

struct BenchArgs {
    std::string n = "400";
    std::string l;
    std::size_t B = 200;
    std::string scheme = "circular";
    std::uint64_t seed = 20240101;
    std::string out;
    std::string json;
    bool timings = false;
};

int cmd_bench(const BenchArgs& a) {
    if (a.B < 1) {
        throw UsageError("--B must be at least 1");
    }
    ustat::BenchConfig cfg;
    cfg.n_list = parse_list<std::size_t>(a.n, "--n");
    cfg.l_list = parse_list<std::size_t>(a.l, "--l");
    cfg.num_resamples = a.B;
    cfg.scheme = parse_flag([&] { return ustat::parse_scheme(a.scheme); });
    cfg.master_seed = a.seed;
    const ustat::BenchReport report = ustat::run_benchmark(cfg);
    if (!a.out.empty()) {
        write_output(a.out, ustat::bench_csv(report));
    }
    if (!a.json.empty()) {
        write_output(a.json, ustat::bench_json(report).dump(2) + "\n");
    }
    for (const auto& r : report.records) {
        if (!r.error.empty()) {
            std::cout << "n=" << r.n << " l=" << r.l << " failed (" << r.error << ")\n";
            continue;
        }
        std::cout << "n=" << r.n << " l=" << r.l << " m=" << r.m
                  << " precompute_evals=" << r.precompute_evals
                  << " new_evals_per_replicate=" << r.new_evals_per_replicate
                  << " plugin_evals_per_replicate=" << r.plugin_evals_per_replicate
                  << " counts_exact=" << (r.counts_exact ? "true" : "false") << '\n';
        if (a.timings) {
            std::cout << "  precompute " << r.precompute_seconds << " s, new "
                      << r.new_seconds_per_replicate << " s/replicate, plugin "
                      << r.plugin_seconds_per_replicate << " s/replicate\n";
        }
    }
    return 0;
}

void add_coverage_flags(CLI::App* cmd, CoverageArgs& a) {
    cmd->add_option("--n", a.n, "Sample sizes, comma separated")->capture_default_str();
    cmd->add_option("--l", a.l, "Block lengths, comma separated")->capture_default_str();
    cmd->add_option("--alpha", a.alpha, "AR(1) coefficients, comma separated")
        ->capture_default_str();
    cmd->add_option("--methods", a.methods, "Subset of plugin,new,subsample")->capture_default_str();
    cmd->add_option("--scheme", a.scheme, "circular|nonoverlap")->capture_default_str();
    cmd->add_option("--level", a.level, "Nominal confidence level")->capture_default_str();
    cmd->add_option("--sims", a.sims, "Simulated series per cell")->capture_default_str();
    cmd->add_option("--B", a.B, "Bootstrap resamples")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Master seed")->capture_default_str();
    cmd->add_option("--out", a.out, "CSV output path")->required();
    cmd->add_option("--json", a.json, "JSON summary path");
    cmd->add_option("--threads", a.threads, "Worker threads (default: USTAT_THREADS or all cores)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block bootstrap and subsampling for U-statistics of time series"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a stationary Gaussian AR(1) series");
    generate->add_option("--alpha", gen.alpha, "AR coefficient, |alpha| < 1")->required();
    generate->add_option("--n", gen.n, "Series length")->required();
    generate->add_option("--seed", gen.seed, "Seed")->capture_default_str();
    generate->add_option("--burn-in", gen.burn_in, "Discarded warm-up steps")->capture_default_str();
    generate->add_option("--out", gen.out, "Output path (default: stdout)");

    CiArgs ci;
    auto* ci_cmd = app.add_subcommand("ci", "Confidence interval for U_n on a series file");
    ci_cmd->add_option("--in", ci.in, "Input file, one value per line")->required();
    ci_cmd->add_option("--kernel", ci.kernel, "variance|additive")->capture_default_str();
    ci_cmd->add_option("--method", ci.method, "new|plugin|subsample")->capture_default_str();
    ci_cmd->add_option("--scheme", ci.scheme, "circular|nonoverlap")->capture_default_str();
    ci_cmd->add_option("--l", ci.l, "Block length")->required();
    ci_cmd->add_option("--B", ci.B, "Bootstrap resamples")->capture_default_str();
    ci_cmd->add_option("--level", ci.level, "Confidence level")->capture_default_str();
    ci_cmd->add_option("--seed", ci.seed, "Seed")->capture_default_str();
    ci_cmd->add_option("--json", ci.json, "Write a JSON summary here");
    ci_cmd->add_option("--threads", ci.threads, "Worker threads");

    CoverageArgs cov;
    auto* cov_cmd = app.add_subcommand("coverage", "Coverage study over an (n, l, alpha) grid");
    add_coverage_flags(cov_cmd, cov);

    CurveArgs curve;
    curve.l = "5,7,10,15";
    auto* curve_cmd = app.add_subcommand("curve", "Coverage as a function of block length");
    add_coverage_flags(curve_cmd, curve);
    curve_cmd->add_option("--svg", curve.svg, "SVG chart path");

    MseArgs mse;
    auto* mse_cmd = app.add_subcommand("mse", "MSE of the bootstrap variance across block lengths");
    mse_cmd->add_option("--n", mse.n, "Sample sizes")->capture_default_str();
    mse_cmd->add_option("--l", mse.l, "Block lengths")->capture_default_str();
    mse_cmd->add_option("--alpha", mse.alpha, "AR coefficient")->capture_default_str();
    mse_cmd->add_option("--scheme", mse.scheme, "circular|nonoverlap")->capture_default_str();
    mse_cmd->add_option("--sims", mse.sims, "Simulated series per n")->capture_default_str();
    mse_cmd->add_option("--oracle-sims", mse.oracle_sims, "Replications for Var(sqrt(n) U_n)")
        ->capture_default_str();
    mse_cmd->add_option("--cache-dir", mse.cache_dir, "Directory caching oracle values");
    mse_cmd->add_option("--seed", mse.seed, "Master seed")->capture_default_str();
    mse_cmd->add_option("--out", mse.out, "CSV output path")->required();
    mse_cmd->add_option("--json", mse.json, "JSON summary path");
    mse_cmd->add_option("--threads", mse.threads, "Worker threads");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Kernel-evaluation counts per replicate");
    bench_cmd->add_option("--n", bench.n, "Sample sizes")->capture_default_str();
    bench_cmd->add_option("--l", bench.l, "Block length(s); default floor(sqrt(n))");
    bench_cmd->add_option("--B", bench.B, "Replicates timed")->capture_default_str();
    bench_cmd->add_option("--scheme", bench.scheme, "circular|nonoverlap")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "CSV output path");
    bench_cmd->add_option("--json", bench.json, "JSON summary path");
    bench_cmd->add_flag("--timings", bench.timings, "Print wall-clock timings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(gen);
        }
        if (ci_cmd->parsed()) {
            return cmd_ci(ci);
        }
        if (cov_cmd->parsed()) {
            return cmd_coverage(cov);
        }
        if (curve_cmd->parsed()) {
            return cmd_curve(curve);
        }
        if (mse_cmd->parsed()) {
            return cmd_mse(mse);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(bench);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const ustat::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitUsage;
}
