#pragma once

#include "ustat/blocking.hpp"
#include "ustat/error.hpp"
#include "ustat/kernel.hpp"
#include "ustat/parallel.hpp"
#include "ustat/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ustat {

enum class Method { PlugInBootstrap, NewBootstrap, Subsampling };

inline std::string_view to_string(Method method) noexcept {
    switch (method) {
    case Method::PlugInBootstrap:
        return "plugin";
    case Method::NewBootstrap:
        return "new";
    case Method::Subsampling:
    default:
        return "subsample";
    }
}

inline Method parse_method(std::string_view text) {
    if (text == "new") {
        return Method::NewBootstrap;
    }
    if (text == "plugin") {
        return Method::PlugInBootstrap;
    }
    if (text == "subsample") {
        return Method::Subsampling;
    }
    throw InvalidInput("unknown method '" + std::string(text) + "' (expected new|plugin|subsample)");
}

struct ReplicateMeta {
    std::size_t n = 0;
    std::size_t l = 0;
    std::size_t m = 0;
    std::size_t B = 0;
    std::uint64_t seed = 0;
};

/// Replicates of the centered, scaled statistic scale * (U* - center).
struct ReplicateSet {
    std::vector<double> replicates;
    double center = 0.0;
    double scale = 1.0;
    Method method = Method::NewBootstrap;
    BlockScheme scheme = BlockScheme::Circular;
    ReplicateMeta meta;

    std::size_t size() const noexcept { return replicates.size(); }
};

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
    Method method = Method::NewBootstrap;

    bool contains(double value) const noexcept { return lower <= value && value <= upper; }
    double width() const noexcept { return upper - lower; }
};

/// Exact law of a discrete replicate: sorted atoms with their probabilities.
struct ExactDistribution {
    struct Atom {
        double value;
        double probability;
    };
    std::vector<Atom> atoms;

    /// P(X <= x + tol).
    double cdf(double x, double tol = 0.0) const noexcept {
        double p = 0.0;
        for (const auto& atom : atoms) {
            if (atom.value > x + tol) {
                break;
            }
            p += atom.probability;
        }
        return p;
    }
};

namespace detail {

inline void require_nonempty(const BlockStats& stats) {
    require(!stats.values.empty(), "block statistics are empty");
    require(stats.block_length >= 1 && stats.source_n >= stats.block_length,
            "block statistics carry an invalid block length");
}

inline double resample_scale(const BlockStats& stats) {
    return std::sqrt(static_cast<double>(stats.blocks_per_resample()) *
                     static_cast<double>(stats.block_length));
}

/// Index of the ceil(p * B)-th order statistic (1-based), clamped to [1, B].
/// The 1e-9 slack keeps p * B that is an integer up to rounding on that integer.
inline std::size_t quantile_rank(double p, std::size_t count) {
    const double x = p * static_cast<double>(count) - 1e-9;
    const double k = std::ceil(x);
    if (k < 1.0) {
        return 1;
    }
    if (k > static_cast<double>(count)) {
        return count;
    }
    return static_cast<std::size_t>(k);
}

inline double sorted_quantile(std::span<const double> sorted, double p) {
    return sorted[quantile_rank(p, sorted.size()) - 1];
}

inline void check_probability(double p, const char* what) {
    require(p > 0.0 && p < 1.0, std::string(what) + " must lie in (0, 1), got " + std::to_string(p));
}

} // namespace detail

/// E★U*: the mean of the block statistics.
inline double bootstrap_expectation(const BlockStats& stats) {
    detail::require_nonempty(stats);
    double s = 0.0;
    for (double v : stats.values) {
        s += v;
    }
    return s / static_cast<double>(stats.values.size());
}

/// Var★(sqrt(ml) U*) = l * (population variance of the block statistics).
inline double bootstrap_variance_closed_form(const BlockStats& stats) {
    const double mean = bootstrap_expectation(stats);
    double ss = 0.0;
    for (double v : stats.values) {
        const double d = v - mean;
        ss += d * d;
    }
    return static_cast<double>(stats.block_length) * ss / static_cast<double>(stats.values.size());
}

/**
 * @brief Raw new-bootstrap draws U*_b, b = 0..B-1.
 *
 * Each draw averages m = floor(n/l) block statistics chosen uniformly with
 * replacement (over n blocks for Circular, m for Nonoverlapping). Draw b uses
 * substream stream_seed(seed, b) only. Optionally counts table lookups.
 */
inline std::vector<double> new_bootstrap_draws(const BlockStats& stats, std::size_t B,
                                               std::uint64_t seed, unsigned threads = 1,
                                               std::atomic<std::uint64_t>* lookups = nullptr) {
    detail::require_nonempty(stats);
    detail::require(B >= 1, "number of resamples B must be at least 1");
    const std::size_t m = stats.blocks_per_resample();
    detail::require(m >= 1, "need at least one block per resample (m = floor(n/l) >= 1)");

    const std::uint64_t table = stats.values.size();
    const double dm = static_cast<double>(m);
    std::vector<double> draws(B);
    parallel_for(B, threads, [&](std::size_t b) {
        Xoshiro256ss rng(stream_seed(seed, b));
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            sum += stats.values[rng.bounded(table)];
        }
        draws[b] = sum / dm;
        if (lookups != nullptr) {
            lookups->fetch_add(m, std::memory_order_relaxed);
        }
    });
    return draws;
}

/// New bootstrap: replicates sqrt(ml) * (U*_b - E★U*).
inline ReplicateSet new_bootstrap(const BlockStats& stats, std::size_t B, std::uint64_t seed,
                                  unsigned threads = 1) {
    std::vector<double> draws = new_bootstrap_draws(stats, B, seed, threads);
    ReplicateSet out;
    out.center = bootstrap_expectation(stats);
    out.scale = detail::resample_scale(stats);
    for (double& d : draws) {
        d = out.scale * (d - out.center);
    }
    out.replicates = std::move(draws);
    out.method = Method::NewBootstrap;
    out.scheme = stats.scheme;
    out.meta = {stats.source_n, stats.block_length, stats.blocks_per_resample(), B, seed};
    return out;
}

/// Block-mean bootstrap of the raw series: the new bootstrap run on block means.
inline ReplicateSet block_mean_bootstrap(const Sample& sample, BlockScheme scheme, std::size_t l,
                                         std::size_t B, std::uint64_t seed, unsigned threads = 1) {
    return new_bootstrap(block_means(sample, scheme, l, threads), B, seed, threads);
}

/**
 * @brief Raw plug-in bootstrap values U*_{n,k}.
 *
 * Draw b picks m block starts from substream stream_seed(seed, b) under the
 * same law as the new bootstrap, concatenates the blocks into a pseudo-series
 * of length ml and evaluates the full U-statistic on it: (ml)(ml-1)/2 kernel
 * calls per draw.
 */
template <Kernel K>
std::vector<double> plug_in_draws(const Sample& sample, const K& kernel, BlockScheme scheme,
                                  std::size_t l, std::size_t B, std::uint64_t seed,
                                  unsigned threads = 1) {
    const std::size_t table = block_count(scheme, sample.size(), l);
    detail::require(B >= 1, "number of resamples B must be at least 1");
    const std::size_t m = sample.size() / l;
    const auto x = sample.values();

    std::vector<double> draws(B);
    parallel_for(B, threads, [&](std::size_t b) {
        thread_local std::vector<double> pseudo;
        pseudo.resize(m * l);
        Xoshiro256ss rng(stream_seed(seed, b));
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t block = rng.bounded(table);
            detail::gather_block(x, scheme, block, std::span<double>(pseudo).subspan(j * l, l));
        }
        draws[b] = detail::u_statistic_unchecked(std::span<const double>(pseudo), kernel);
    });
    return draws;
}

/// Plug-in bootstrap, centered at the mean of its own B raw values.
template <Kernel K>
ReplicateSet plug_in_bootstrap(const Sample& sample, const K& kernel, BlockScheme scheme,
                               std::size_t l, std::size_t B, std::uint64_t seed,
                               unsigned threads = 1) {
    std::vector<double> draws = plug_in_draws(sample, kernel, scheme, l, B, seed, threads);
    const std::size_t m = sample.size() / l;
    ReplicateSet out;
    double s = 0.0;
    for (double d : draws) {
        s += d;
    }
    out.center = s / static_cast<double>(B);
    out.scale = std::sqrt(static_cast<double>(m) * static_cast<double>(l));
    for (double& d : draws) {
        d = out.scale * (d - out.center);
    }
    out.replicates = std::move(draws);
    out.method = Method::PlugInBootstrap;
    out.scheme = scheme;
    out.meta = {sample.size(), l, m, B, seed};
    return out;
}

/// Subsampling from precomputed block statistics: sqrt(l) * (x̄(i) - U_n) for every block.
inline ReplicateSet subsampling_from_blocks(const BlockStats& stats, double full_statistic) {
    detail::require_nonempty(stats);
    ReplicateSet out;
    out.center = full_statistic;
    out.scale = std::sqrt(static_cast<double>(stats.block_length));
    out.replicates.reserve(stats.values.size());
    for (double v : stats.values) {
        out.replicates.push_back(out.scale * (v - full_statistic));
    }
    out.method = Method::Subsampling;
    out.scheme = stats.scheme;
    out.meta = {stats.source_n, stats.block_length, stats.blocks_per_resample(),
                stats.values.size(), 0};
    return out;
}

template <Kernel K>
ReplicateSet subsampling_distribution(const Sample& sample, const K& kernel, BlockScheme scheme,
                                      std::size_t l) {
    const BlockStats stats = block_u_stats(sample, kernel, scheme, l);
    return subsampling_from_blocks(stats, u_statistic(sample, kernel));
}

/// Left-continuous empirical inverse: the ceil(p*B)-th smallest replicate.
inline double quantile(const ReplicateSet& reps, double p) {
    detail::require(!reps.replicates.empty(), "replicate set is empty");
    detail::check_probability(p, "quantile probability");
    std::vector<double> sorted = reps.replicates;
    std::sort(sorted.begin(), sorted.end());
    return detail::sorted_quantile(sorted, p);
}

/**
 * @brief Basic (root) interval for the parameter.
 *
 * With q_p the replicate quantiles, returns
 * [point - q_{(1+level)/2} / sqrt(n), point - q_{(1-level)/2} / sqrt(n)].
 */
inline ConfidenceInterval confidence_interval(double point, const ReplicateSet& reps,
                                              std::size_t n, double level) {
    detail::check_probability(level, "confidence level");
    detail::require(!reps.replicates.empty(), "replicate set is empty");
    detail::require(n >= 1, "sample size must be positive");
    std::vector<double> sorted = reps.replicates;
    std::sort(sorted.begin(), sorted.end());
    const double root_n = std::sqrt(static_cast<double>(n));
    const double q_hi = detail::sorted_quantile(sorted, (1.0 + level) / 2.0);
    const double q_lo = detail::sorted_quantile(sorted, (1.0 - level) / 2.0);
    return {point - q_hi / root_n, point - q_lo / root_n, level, reps.method};
}

/// Refuse exact enumeration beyond this many index tuples.
inline constexpr std::uint64_t kEnumerationLimit = 1'000'000;

/**
 * @brief Exact law of sqrt(ml) * (U* - E★U*) by visiting every index tuple.
 *
 * Throws GuardExceeded when (#blocks)^m exceeds kEnumerationLimit. Values that
 * agree to 1e-12 (relative to the scale of the atoms) are merged.
 */
inline ExactDistribution enumerate_new_bootstrap(const BlockStats& stats) {
    detail::require_nonempty(stats);
    const std::size_t m = stats.blocks_per_resample();
    detail::require(m >= 1, "need at least one block per resample");
    const std::uint64_t table = stats.values.size();

    std::uint64_t total = 1;
    for (std::size_t j = 0; j < m; ++j) {
        if (total > kEnumerationLimit / table) {
            throw GuardExceeded("exact enumeration needs " + std::to_string(table) + "^" +
                                std::to_string(m) + " tuples, above the limit of " +
                                std::to_string(kEnumerationLimit));
        }
        total *= table;
    }

    const double center = bootstrap_expectation(stats);
    const double scale = detail::resample_scale(stats);
    const double dm = static_cast<double>(m);
    std::vector<double> values;
    values.reserve(total);
    std::vector<std::uint64_t> index(m, 0);
    for (std::uint64_t t = 0; t < total; ++t) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            sum += stats.values[index[j]];
        }
        values.push_back(scale * (sum / dm - center));
        for (std::size_t j = m; j-- > 0;) {
            if (++index[j] < table) {
                break;
            }
            index[j] = 0;
        }
    }
    std::sort(values.begin(), values.end());

    double magnitude = 1.0;
    for (double v : stats.values) {
        magnitude = std::max(magnitude, scale * std::fabs(v));
    }
    const double merge_tol = 1e-12 * magnitude;
    const double unit = 1.0 / static_cast<double>(total);

    ExactDistribution dist;
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i;
        while (j < values.size() && values[j] - values[i] <= merge_tol) {
            ++j;
        }
        dist.atoms.push_back({values[i], static_cast<double>(j - i) * unit});
        i = j;
    }
    return dist;
}

} // namespace ustat
