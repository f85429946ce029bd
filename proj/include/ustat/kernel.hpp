#pragma once

#include "ustat/error.hpp"

#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ustat {

/**
 * @brief A symmetric real kernel of degree two.
 *
 * Any callable `double(double, double) const` with a `name()` qualifies.
 * Symmetry (k(x, y) == k(y, x)) is assumed, not checked at runtime.
 */
template <class K>
concept Kernel = requires(const K& k, double x, double y) {
    { k(x, y) } -> std::convertible_to<double>;
    { k.name() } -> std::convertible_to<std::string_view>;
};

/// h(x, y) = (x - y)^2 / 2. Its U-statistic is the unbiased sample variance.
struct VarianceKernel {
    double operator()(double x, double y) const noexcept {
        const double d = x - y;
        return 0.5 * d * d;
    }
    static constexpr std::string_view name() noexcept { return "variance"; }
};

/// h(x, y) = (x + y) / 2. Its U-statistic is the sample mean.
struct AdditiveKernel {
    double operator()(double x, double y) const noexcept { return 0.5 * (x + y); }
    static constexpr std::string_view name() noexcept { return "additive"; }
};

/// Type-erased kernel for user-supplied functions.
class FunctionKernel {
public:
    FunctionKernel(std::string name, std::function<double(double, double)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {
        detail::require(static_cast<bool>(fn_), "kernel function is empty");
    }

    double operator()(double x, double y) const { return fn_(x, y); }
    std::string_view name() const noexcept { return name_; }

private:
    std::string name_;
    std::function<double(double, double)> fn_;
};

/// Wraps a kernel and counts evaluations. Copies share the counter.
template <Kernel K>
class CountingKernel {
public:
    explicit CountingKernel(K inner = K{})
        : inner_(std::move(inner)), count_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

    double operator()(double x, double y) const {
        count_->fetch_add(1, std::memory_order_relaxed);
        return inner_(x, y);
    }
    std::string_view name() const noexcept { return inner_.name(); }

    std::uint64_t count() const noexcept { return count_->load(std::memory_order_relaxed); }
    void reset() const noexcept { count_->store(0, std::memory_order_relaxed); }

private:
    K inner_;
    std::shared_ptr<std::atomic<std::uint64_t>> count_;
};

enum class KernelId { Variance, Additive };

inline KernelId parse_kernel(std::string_view text) {
    if (text == VarianceKernel::name()) {
        return KernelId::Variance;
    }
    if (text == AdditiveKernel::name()) {
        return KernelId::Additive;
    }
    throw InvalidInput("unknown kernel '" + std::string(text) + "' (expected variance|additive)");
}

/// Calls fn with a default-constructed instance of the named built-in kernel.
template <class Fn>
decltype(auto) visit_kernel(KernelId id, Fn&& fn) {
    switch (id) {
    case KernelId::Additive:
        return std::forward<Fn>(fn)(AdditiveKernel{});
    case KernelId::Variance:
    default:
        return std::forward<Fn>(fn)(VarianceKernel{});
    }
}

/// An observed series x_1..x_n: at least two values, all finite.
class Sample {
public:
    explicit Sample(std::vector<double> values) : values_(std::move(values)) {
        detail::require(values_.size() >= 2, "sample needs at least 2 observations, got " +
                                                 std::to_string(values_.size()));
        for (std::size_t i = 0; i < values_.size(); ++i) {
            detail::require(std::isfinite(values_[i]),
                            "sample value at index " + std::to_string(i) + " is not finite");
        }
    }

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

private:
    std::vector<double> values_;
};

namespace detail {

/// Sum of kernel(x_i, x_j) over i < j, accumulated row by row.
template <Kernel K>
double pair_sum(std::span<const double> x, const K& kernel) {
    double total = 0.0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double xi = x[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            total += kernel(xi, x[j]);
        }
    }
    return total;
}

template <Kernel K>
double u_statistic_unchecked(std::span<const double> x, const K& kernel) {
    const double n = static_cast<double>(x.size());
    return pair_sum(x, kernel) / (n * (n - 1.0) / 2.0);
}

} // namespace detail

/// U_n(h) = (2 / (n(n-1))) * sum_{i<j} h(x_i, x_j). Exactly n(n-1)/2 kernel calls.
template <Kernel K>
double u_statistic(const Sample& sample, const K& kernel) {
    return detail::u_statistic_unchecked(sample.values(), kernel);
}

/// Overload for raw series, validated like Sample.
template <Kernel K>
double u_statistic(std::span<const double> values, const K& kernel) {
    detail::require(values.size() >= 2, "U-statistic needs at least 2 observations");
    return detail::u_statistic_unchecked(values, kernel);
}

/**
 * @brief Empirical Hoeffding decomposition of a kernel on a fixed sample.
 *
 * theta_hat averages the kernel over all n^2 ordered pairs (diagonal included),
 * h1(i) is the row mean minus theta_hat and h2 is whatever remains, so
 * h(x_a, x_b) = theta_hat + h1(a) + h1(b) + h2(a, b) holds for every pair and
 * both h1 and every row of h2 sum to zero.
 */
class HoeffdingParts {
public:
    HoeffdingParts(double theta_hat, std::vector<double> h1, std::vector<double> h2)
        : theta_hat_(theta_hat), h1_(std::move(h1)), h2_(std::move(h2)) {}

    double theta_hat() const noexcept { return theta_hat_; }
    std::span<const double> h1_table() const noexcept { return h1_; }
    double h1(std::size_t i) const noexcept { return h1_[i]; }
    double h2(std::size_t a, std::size_t b) const noexcept { return h2_[a * h1_.size() + b]; }
    std::size_t size() const noexcept { return h1_.size(); }

private:
    double theta_hat_;
    std::vector<double> h1_;
    std::vector<double> h2_;
};

template <Kernel K>
HoeffdingParts empirical_hoeffding(const Sample& sample, const K& kernel) {
    const auto x = sample.values();
    const std::size_t n = x.size();
    const double dn = static_cast<double>(n);

    std::vector<double> matrix(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            const double v = kernel(x[a], x[b]);
            matrix[a * n + b] = v;
            matrix[b * n + a] = v;
        }
    }

    std::vector<double> row_mean(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            s += matrix[a * n + b];
        }
        row_mean[a] = s / dn;
    }
    double theta = 0.0;
    for (double r : row_mean) {
        theta += r;
    }
    theta /= dn;

    std::vector<double> h1(n);
    for (std::size_t a = 0; a < n; ++a) {
        h1[a] = row_mean[a] - theta;
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            matrix[a * n + b] -= theta + h1[a] + h1[b];
        }
    }
    return HoeffdingParts(theta, std::move(h1), std::move(matrix));
}

} // namespace ustat
