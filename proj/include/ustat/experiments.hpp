#pragma once

#include "ustat/blocking.hpp"
#include "ustat/dgp.hpp"
#include "ustat/error.hpp"
#include "ustat/kernel.hpp"
#include "ustat/parallel.hpp"
#include "ustat/resampling.hpp"
#include "ustat/rng.hpp"

#include <json.hpp>

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ustat {

/**
 * @brief A simulated data source plus the parameter it targets.
 *
 * `generate(n, alpha, seed)` must be deterministic in its arguments and
 * `truth(alpha)` is the value the confidence intervals should cover.
 */
struct DataModel {
    std::string name;
    std::function<Sample(std::size_t, double, std::uint64_t)> generate;
    std::function<double(double)> truth;
};

/// Stationary Gaussian AR(1), targeting Var(X_1) (the variance kernel's θ).
inline DataModel ar1_model(std::size_t burn_in = 1000) {
    return {"ar1",
            [burn_in](std::size_t n, double alpha, std::uint64_t seed) {
                return ar1_generate({alpha, n, burn_in, seed});
            },
            [](double alpha) { return true_theta_variance_kernel(alpha); }};
}

/// Every observation equals `value`; the variance kernel's θ is then 0.
inline DataModel constant_model(double value = 1.0) {
    return {"constant",
            [value](std::size_t n, double, std::uint64_t) {
                return Sample(std::vector<double>(n, value));
            },
            [](double) { return 0.0; }};
}

inline const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods{Method::PlugInBootstrap, Method::NewBootstrap,
                                             Method::Subsampling};
    return methods;
}

// ---------------------------------------------------------------------------
// Coverage study
// ---------------------------------------------------------------------------

struct CoverageConfig {
    std::vector<Method> methods = all_methods();
    BlockScheme scheme = BlockScheme::Circular;
    std::vector<std::size_t> n_list;
    std::vector<std::size_t> l_list;
    std::vector<double> alpha_list;
    double level = 0.95;
    std::size_t num_sims = 2000;
    std::size_t num_resamples = 500;
    std::uint64_t master_seed = 20240101;
    unsigned threads = 1;
};

struct CoverageRecord {
    Method method = Method::NewBootstrap;
    std::size_t n = 0;
    std::size_t l = 0;
    double alpha = 0.0;
    double level = 0.0;
    double coverage = std::numeric_limits<double>::quiet_NaN();
    double mean_width = std::numeric_limits<double>::quiet_NaN();
    std::size_t num_sims = 0;
    std::size_t B = 0;
    std::uint64_t seed = 0;
    std::string error;

    bool ok() const noexcept { return error.empty(); }
    /// Binomial standard error of the coverage estimate.
    double standard_error() const noexcept {
        return std::sqrt(coverage * (1.0 - coverage) / static_cast<double>(num_sims));
    }
};

struct CoverageReport {
    std::vector<CoverageRecord> records;

    bool has_failures() const noexcept {
        for (const auto& r : records) {
            if (!r.ok()) {
                return true;
            }
        }
        return false;
    }

    const CoverageRecord* find(Method method, std::size_t n, std::size_t l, double alpha) const {
        for (const auto& r : records) {
            if (r.method == method && r.n == n && r.l == l && r.alpha == alpha) {
                return &r;
            }
        }
        return nullptr;
    }
};

/// Seed for one grid cell; independent of the rest of the grid.
inline std::uint64_t cell_seed(std::uint64_t master, std::size_t n, std::size_t l, double alpha) {
    return stream_seed(stream_seed(stream_seed(master, n), l), std::bit_cast<std::uint64_t>(alpha));
}

namespace detail {

inline void check_coverage_config(const CoverageConfig& cfg) {
    require(cfg.num_sims >= 1, "num_sims must be at least 1");
    require(cfg.num_resamples >= 1, "number of resamples B must be at least 1");
    check_probability(cfg.level, "confidence level");
    require(!cfg.methods.empty(), "at least one method is required");
}

struct SimOutcome {
    bool covered = false;
    double width = 0.0;
};

/// One simulated data set, every requested method on it.
template <Kernel K>
void simulate_cell_once(const CoverageConfig& cfg, const DataModel& model, const K& kernel,
                        std::size_t n, std::size_t l, double alpha, double truth,
                        std::uint64_t sim_seed, std::span<SimOutcome> out) {
    const Sample sample = model.generate(n, alpha, stream_seed(sim_seed, 0));
    const std::uint64_t resample_seed = stream_seed(sim_seed, 1);
    const double point = u_statistic(sample, kernel);

    std::optional<BlockStats> blocks;
    auto block_stats = [&]() -> const BlockStats& {
        if (!blocks) {
            blocks = block_u_stats(sample, kernel, cfg.scheme, l);
        }
        return *blocks;
    };

    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
        ReplicateSet reps;
        switch (cfg.methods[k]) {
        case Method::PlugInBootstrap:
            reps = plug_in_bootstrap(sample, kernel, cfg.scheme, l, cfg.num_resamples,
                                     resample_seed);
            break;
        case Method::NewBootstrap:
            reps = new_bootstrap(block_stats(), cfg.num_resamples, resample_seed);
            break;
        case Method::Subsampling:
            reps = subsampling_from_blocks(block_stats(), point);
            break;
        }
        const ConfidenceInterval ci = confidence_interval(point, reps, n, cfg.level);
        out[k] = {ci.contains(truth), ci.width()};
    }
}

} // namespace detail

/**
 * @brief Empirical coverage of basic bootstrap/subsampling intervals.
 *
 * Cells are visited in n, l, alpha order; each cell emits one record per
 * method. All methods see the same simulated series, and both bootstraps
 * share their block-index draws. Simulation s of a cell is seeded with
 * stream_seed(cell_seed(...), s), so reports are identical for any thread
 * count. Invalid cells (l outside [2, n], |alpha| >= 1) produce records
 * carrying an error message instead of aborting the run.
 */
template <Kernel K = VarianceKernel>
CoverageReport run_coverage(const CoverageConfig& cfg, const DataModel& model = ar1_model(),
                            const K& kernel = K{}) {
    detail::check_coverage_config(cfg);
    CoverageReport report;
    const std::size_t methods = cfg.methods.size();

    for (std::size_t n : cfg.n_list) {
        for (std::size_t l : cfg.l_list) {
            for (double alpha : cfg.alpha_list) {
                const std::uint64_t seed = cell_seed(cfg.master_seed, n, l, alpha);
                std::vector<CoverageRecord> cell(methods);
                for (std::size_t k = 0; k < methods; ++k) {
                    cell[k].method = cfg.methods[k];
                    cell[k].n = n;
                    cell[k].l = l;
                    cell[k].alpha = alpha;
                    cell[k].level = cfg.level;
                    cell[k].num_sims = cfg.num_sims;
                    cell[k].B = cfg.num_resamples;
                    cell[k].seed = cfg.master_seed;
                }
                try {
                    detail::require(n >= 2, "sample size must be at least 2");
                    block_count(cfg.scheme, n, l);
                    const double truth = model.truth(alpha);

                    std::vector<detail::SimOutcome> outcomes(cfg.num_sims * methods);
                    parallel_for(cfg.num_sims, cfg.threads, [&](std::size_t s) {
                        detail::simulate_cell_once(
                            cfg, model, kernel, n, l, alpha, truth, stream_seed(seed, s),
                            std::span<detail::SimOutcome>(outcomes).subspan(s * methods, methods));
                    });

                    for (std::size_t k = 0; k < methods; ++k) {
                        std::size_t hits = 0;
                        double width = 0.0;
                        for (std::size_t s = 0; s < cfg.num_sims; ++s) {
                            const auto& o = outcomes[s * methods + k];
                            hits += o.covered ? 1 : 0;
                            width += o.width;
                        }
                        cell[k].coverage =
                            static_cast<double>(hits) / static_cast<double>(cfg.num_sims);
                        cell[k].mean_width = width / static_cast<double>(cfg.num_sims);
                    }
                } catch (const std::exception& e) {
                    for (auto& r : cell) {
                        r.error = e.what();
                    }
                }
                report.records.insert(report.records.end(), cell.begin(), cell.end());
            }
        }
    }
    return report;
}

/// Coverage as a function of block length for one (n, alpha).
template <Kernel K = VarianceKernel>
CoverageReport figure_block_length_curve(std::size_t n, double alpha,
                                         const std::vector<std::size_t>& l_list,
                                         CoverageConfig cfg, const DataModel& model = ar1_model(),
                                         const K& kernel = K{}) {
    cfg.n_list = {n};
    cfg.alpha_list = {alpha};
    cfg.l_list = l_list;
    return run_coverage(cfg, model, kernel);
}

// ---------------------------------------------------------------------------
// Mean squared error of the bootstrap variance
// ---------------------------------------------------------------------------

struct OracleEstimate {
    double variance = 0.0;
    double standard_error = 0.0;
    std::size_t replications = 0;
    bool from_cache = false;
};

struct MseConfig {
    std::vector<std::size_t> n_list;
    std::vector<std::size_t> l_list;
    std::size_t num_sims = 500;
    std::uint64_t master_seed = 20240101;
    double alpha = 0.4;
    BlockScheme scheme = BlockScheme::Circular;
    std::size_t oracle_sims = 100000;
    /// Directory for cached oracle values; empty disables caching.
    std::filesystem::path cache_dir;
    unsigned threads = 1;
};

struct MseRecord {
    std::size_t n = 0;
    std::size_t l = 0;
    double alpha = 0.0;
    double mse = std::numeric_limits<double>::quiet_NaN();
    double mse_se = std::numeric_limits<double>::quiet_NaN();
    double mean_bootstrap_variance = std::numeric_limits<double>::quiet_NaN();
    double target = std::numeric_limits<double>::quiet_NaN();
    double target_se = std::numeric_limits<double>::quiet_NaN();
    std::size_t num_sims = 0;
    std::string error;

    bool ok() const noexcept { return error.empty(); }
};

struct MseReport {
    std::vector<MseRecord> records;

    const MseRecord* find(std::size_t n, std::size_t l) const {
        for (const auto& r : records) {
            if (r.n == n && r.l == l) {
                return &r;
            }
        }
        return nullptr;
    }
};

namespace detail {

inline constexpr std::uint64_t kOracleStream = 0x6f7261636c65ULL;

/// FNV-1a, used only to name cache files.
inline std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    return h;
}

inline void write_file_atomically(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        }
        out << bytes;
        out.flush();
        if (!out) {
            throw std::runtime_error("failed writing '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

/**
 * @brief Long-run Monte Carlo estimate of Var(sqrt(n) U_n).
 *
 * Replication i draws a fresh series from the model with its own substream
 * and evaluates the full U-statistic. When `cache_dir` is set the result is
 * stored as JSON keyed by (model, n, alpha, kernel, replications, seed).
 */
template <Kernel K>
OracleEstimate long_run_variance_oracle(const DataModel& model, const K& kernel, std::size_t n,
                                        double alpha, std::size_t replications, std::uint64_t seed,
                                        const std::filesystem::path& cache_dir = {},
                                        unsigned threads = 1) {
    detail::require(replications >= 2, "oracle needs at least 2 replications");
    const nlohmann::json key = {{"model", model.name},   {"n", n},
                                {"alpha", alpha},        {"kernel", std::string(kernel.name())},
                                {"replications", replications}, {"seed", seed}};
    std::filesystem::path cache_file;
    if (!cache_dir.empty()) {
        const std::uint64_t digest = detail::fnv1a(key.dump());
        char name[64];
        std::snprintf(name, sizeof(name), "oracle_%016llx.json",
                      static_cast<unsigned long long>(digest));
        cache_file = cache_dir / name;
        std::ifstream in(cache_file);
        if (in) {
            try {
                const nlohmann::json cached = nlohmann::json::parse(in);
                if (cached.at("key") == key) {
                    return {cached.at("variance").get<double>(),
                            cached.at("standard_error").get<double>(), replications, true};
                }
            } catch (const std::exception&) {
                // unreadable cache entries are recomputed
            }
        }
    }

    const std::uint64_t base = stream_seed(stream_seed(seed, detail::kOracleStream), n);
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> scaled(replications);
    parallel_for(replications, threads, [&](std::size_t i) {
        const Sample sample = model.generate(n, alpha, stream_seed(base, i));
        scaled[i] = root_n * u_statistic(sample, kernel);
    });

    const double count = static_cast<double>(replications);
    double mean = 0.0;
    for (double v : scaled) {
        mean += v;
    }
    mean /= count;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : scaled) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    const double variance = m2 / (count - 1.0);
    const double pop_var = m2 / count;
    const double se = std::sqrt(std::max(0.0, m4 / count - pop_var * pop_var) / count);

    if (!cache_file.empty()) {
        nlohmann::json doc = {{"key", key}, {"variance", variance}, {"standard_error", se}};
        detail::write_file_atomically(cache_file, doc.dump(2) + "\n");
    }
    return {variance, se, replications, false};
}

/**
 * @brief Monte Carlo MSE of the closed-form bootstrap variance.
 *
 * For each n and each simulated series, computes Var★(sqrt(ml) U*) from the
 * block statistics for every l and compares it with the oracle value of
 * Var(sqrt(n) U_n). Records carry the MSE and its Monte Carlo SE.
 */
template <Kernel K = VarianceKernel>
MseReport run_mse(const MseConfig& cfg, const DataModel& model = ar1_model(),
                  const K& kernel = K{}) {
    detail::require(cfg.num_sims >= 1, "num_sims must be at least 1");
    MseReport report;
    for (std::size_t n : cfg.n_list) {
        std::vector<MseRecord> rows(cfg.l_list.size());
        std::vector<bool> valid(cfg.l_list.size(), false);
        for (std::size_t j = 0; j < cfg.l_list.size(); ++j) {
            rows[j].n = n;
            rows[j].l = cfg.l_list[j];
            rows[j].alpha = cfg.alpha;
            rows[j].num_sims = cfg.num_sims;
            try {
                detail::require(n >= 2, "sample size must be at least 2");
                block_count(cfg.scheme, n, cfg.l_list[j]);
                valid[j] = true;
            } catch (const std::exception& e) {
                rows[j].error = e.what();
            }
        }

        try {
            detail::require(n >= 2, "sample size must be at least 2");
            model.truth(cfg.alpha);
            const OracleEstimate oracle =
                long_run_variance_oracle(model, kernel, n, cfg.alpha, cfg.oracle_sims,
                                         cfg.master_seed, cfg.cache_dir, cfg.threads);

            const std::size_t width = cfg.l_list.size();
            std::vector<double> errors(cfg.num_sims * width, 0.0);
            std::vector<double> variances(cfg.num_sims * width, 0.0);
            const std::uint64_t base = stream_seed(cfg.master_seed, n);
            parallel_for(cfg.num_sims, cfg.threads, [&](std::size_t s) {
                const Sample sample = model.generate(n, cfg.alpha, stream_seed(base, s));
                for (std::size_t j = 0; j < width; ++j) {
                    if (!valid[j]) {
                        continue;
                    }
                    const BlockStats stats = block_u_stats(sample, kernel, cfg.scheme, cfg.l_list[j]);
                    const double v = bootstrap_variance_closed_form(stats);
                    const double d = v - oracle.variance;
                    variances[s * width + j] = v;
                    errors[s * width + j] = d * d;
                }
            });

            const double count = static_cast<double>(cfg.num_sims);
            for (std::size_t j = 0; j < width; ++j) {
                if (!valid[j]) {
                    continue;
                }
                double sum = 0.0;
                double vsum = 0.0;
                for (std::size_t s = 0; s < cfg.num_sims; ++s) {
                    sum += errors[s * width + j];
                    vsum += variances[s * width + j];
                }
                const double mean = sum / count;
                double ss = 0.0;
                for (std::size_t s = 0; s < cfg.num_sims; ++s) {
                    const double d = errors[s * width + j] - mean;
                    ss += d * d;
                }
                rows[j].mse = mean;
                rows[j].mse_se = cfg.num_sims > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
                rows[j].mean_bootstrap_variance = vsum / count;
                rows[j].target = oracle.variance;
                rows[j].target_se = oracle.standard_error;
            }
        } catch (const std::exception& e) {
            for (auto& r : rows) {
                if (r.error.empty()) {
                    r.error = e.what();
                }
            }
        }
        report.records.insert(report.records.end(), rows.begin(), rows.end());
    }
    return report;
}

// ---------------------------------------------------------------------------
// Cost accounting
// ---------------------------------------------------------------------------

struct BenchConfig {
    std::vector<std::size_t> n_list;
    /// Block length per n; empty means floor(sqrt(n)).
    std::vector<std::size_t> l_list;
    std::size_t num_resamples = 200;
    std::uint64_t master_seed = 20240101;
    BlockScheme scheme = BlockScheme::Circular;
    double alpha = 0.4;
};

struct BenchRecord {
    std::size_t n = 0;
    std::size_t l = 0;
    std::size_t m = 0;
    std::size_t B = 0;
    std::uint64_t precompute_evals = 0;
    std::uint64_t new_evals_per_replicate = 0;
    std::uint64_t new_lookups_per_replicate = 0;
    std::uint64_t plugin_evals_per_replicate = 0;
    std::uint64_t expected_precompute_evals = 0;
    std::uint64_t expected_plugin_evals = 0;
    bool counts_exact = false;
    // Wall-clock figures are informational and never written to artifacts.
    double precompute_seconds = 0.0;
    double new_seconds_per_replicate = 0.0;
    double plugin_seconds_per_replicate = 0.0;
    std::string error;
};

struct BenchReport {
    std::vector<BenchRecord> records;
};

inline std::size_t sqrt_block_length(std::size_t n) {
    auto l = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    while ((l + 1) * (l + 1) <= n) {
        ++l;
    }
    while (l * l > n) {
        --l;
    }
    return std::max<std::size_t>(l, 2);
}

/**
 * @brief Counts kernel evaluations for the two bootstraps.
 *
 * Expected: precompute = (#blocks) * l(l-1)/2, new bootstrap 0 per replicate
 * (m table lookups), plug-in (ml)(ml-1)/2 per replicate. `counts_exact`
 * records whether the instrumented counts match these formulas.
 */
inline BenchReport run_benchmark(const BenchConfig& cfg) {
    detail::require(cfg.num_resamples >= 1, "number of resamples B must be at least 1");
    detail::require(cfg.l_list.empty() || cfg.l_list.size() == 1 ||
                        cfg.l_list.size() == cfg.n_list.size(),
                    "give one block length, one per n, or none (sqrt rule)");
    using clock = std::chrono::steady_clock;
    auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };

    BenchReport report;
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        BenchRecord rec;
        rec.n = cfg.n_list[i];
        rec.B = cfg.num_resamples;
        rec.l = cfg.l_list.empty()       ? sqrt_block_length(rec.n)
                : cfg.l_list.size() == 1 ? cfg.l_list.front()
                                         : cfg.l_list[i];
        try {
            const std::size_t blocks = block_count(cfg.scheme, rec.n, rec.l);
            rec.m = rec.n / rec.l;
            const std::uint64_t seed = stream_seed(cfg.master_seed, rec.n);
            const Sample sample = ar1_generate({cfg.alpha, rec.n, 1000, stream_seed(seed, 0)});
            CountingKernel<VarianceKernel> kernel;

            auto t0 = clock::now();
            const BlockStats stats = block_u_stats(sample, kernel, cfg.scheme, rec.l);
            rec.precompute_seconds = seconds(clock::now() - t0);
            rec.precompute_evals = kernel.count();

            kernel.reset();
            std::atomic<std::uint64_t> lookups{0};
            t0 = clock::now();
            new_bootstrap_draws(stats, rec.B, stream_seed(seed, 1), 1, &lookups);
            rec.new_seconds_per_replicate = seconds(clock::now() - t0) / static_cast<double>(rec.B);
            rec.new_evals_per_replicate = kernel.count() / rec.B;
            rec.new_lookups_per_replicate = lookups.load() / rec.B;

            kernel.reset();
            t0 = clock::now();
            plug_in_draws(sample, kernel, cfg.scheme, rec.l, rec.B, stream_seed(seed, 1));
            rec.plugin_seconds_per_replicate =
                seconds(clock::now() - t0) / static_cast<double>(rec.B);
            const std::uint64_t plugin_total = kernel.count();
            rec.plugin_evals_per_replicate = plugin_total / rec.B;

            const std::uint64_t ml = static_cast<std::uint64_t>(rec.m) * rec.l;
            rec.expected_plugin_evals = ml * (ml - 1) / 2;
            rec.expected_precompute_evals =
                static_cast<std::uint64_t>(blocks) * rec.l * (rec.l - 1) / 2;
            rec.counts_exact = rec.precompute_evals == rec.expected_precompute_evals &&
                               rec.new_evals_per_replicate == 0 &&
                               rec.new_lookups_per_replicate == rec.m &&
                               plugin_total == rec.expected_plugin_evals * rec.B;
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        report.records.push_back(rec);
    }
    return report;
}

} // namespace ustat
