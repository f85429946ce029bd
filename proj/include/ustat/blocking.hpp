#pragma once

#include "ustat/error.hpp"
#include "ustat/kernel.hpp"
#include "ustat/parallel.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ustat {

/// Circular: n blocks starting at every index, wrapping past the end.
/// Nonoverlapping: m = floor(n / l) disjoint blocks; the tail is dropped.
enum class BlockScheme { Circular, Nonoverlapping };

inline std::string_view to_string(BlockScheme scheme) noexcept {
    return scheme == BlockScheme::Circular ? "circular" : "nonoverlap";
}

inline BlockScheme parse_scheme(std::string_view text) {
    if (text == "circular") {
        return BlockScheme::Circular;
    }
    if (text == "nonoverlap" || text == "nonoverlapping") {
        return BlockScheme::Nonoverlapping;
    }
    throw InvalidInput("unknown block scheme '" + std::string(text) +
                       "' (expected circular|nonoverlap)");
}

/// Per-block statistics x̄(1..K) of one sample under one scheme.
struct BlockStats {
    BlockScheme scheme = BlockScheme::Circular;
    std::size_t block_length = 0;
    std::size_t source_n = 0;
    std::vector<double> values;

    /// m = floor(n / l), the number of blocks in one resample.
    std::size_t blocks_per_resample() const noexcept { return source_n / block_length; }
    std::size_t size() const noexcept { return values.size(); }
};

namespace detail {

inline void check_block_length(std::size_t n, std::size_t l, std::size_t min_l) {
    require(l >= min_l, "block length must be at least " + std::to_string(min_l) + ", got " +
                            std::to_string(l));
    require(l <= n, "block length " + std::to_string(l) + " exceeds sample size " +
                        std::to_string(n));
}

inline std::size_t block_start(BlockScheme scheme, std::size_t block, std::size_t l) noexcept {
    return scheme == BlockScheme::Circular ? block : block * l;
}

/// Copies block `block` into `out` (size l), wrapping indices modulo n.
inline void gather_block(std::span<const double> x, BlockScheme scheme, std::size_t block,
                         std::span<double> out) noexcept {
    const std::size_t n = x.size();
    std::size_t k = block_start(scheme, block, out.size());
    for (double& v : out) {
        v = x[k];
        if (++k == n) {
            k = 0;
        }
    }
}

template <class PerBlock>
BlockStats compute_blocks(const Sample& sample, BlockScheme scheme, std::size_t l,
                          unsigned threads, PerBlock&& per_block) {
    const auto x = sample.values();
    BlockStats stats;
    stats.scheme = scheme;
    stats.block_length = l;
    stats.source_n = x.size();
    stats.values.resize(scheme == BlockScheme::Circular ? x.size() : x.size() / l);

    parallel_for(stats.values.size(), threads, [&](std::size_t i) {
        thread_local std::vector<double> buffer;
        buffer.resize(l);
        gather_block(x, scheme, i, buffer);
        stats.values[i] = per_block(std::span<const double>(buffer));
    });
    return stats;
}

} // namespace detail

/// n for Circular, floor(n / l) for Nonoverlapping. Requires 2 <= l <= n.
inline std::size_t block_count(BlockScheme scheme, std::size_t n, std::size_t l) {
    detail::check_block_length(n, l, 2);
    return scheme == BlockScheme::Circular ? n : n / l;
}

/**
 * @brief U-statistic of every block: (2 / (l(l-1))) * sum over a < b in the block.
 *
 * Direct O(l^2) evaluation per block, so a Circular call costs exactly
 * n * l(l-1)/2 kernel evaluations.
 */
template <Kernel K>
BlockStats block_u_stats(const Sample& sample, const K& kernel, BlockScheme scheme,
                         std::size_t l, unsigned threads = 1) {
    detail::check_block_length(sample.size(), l, 2);
    const double pairs = static_cast<double>(l) * static_cast<double>(l - 1) / 2.0;
    return detail::compute_blocks(sample, scheme, l, threads, [&](std::span<const double> block) {
        return detail::pair_sum(block, kernel) / pairs;
    });
}

/// Block averages of the raw observations. Allows l == 1.
inline BlockStats block_means(const Sample& sample, BlockScheme scheme, std::size_t l,
                              unsigned threads = 1) {
    detail::check_block_length(sample.size(), l, 1);
    const double dl = static_cast<double>(l);
    return detail::compute_blocks(sample, scheme, l, threads, [&](std::span<const double> block) {
        double s = 0.0;
        for (double v : block) {
            s += v;
        }
        return s / dl;
    });
}

} // namespace ustat
