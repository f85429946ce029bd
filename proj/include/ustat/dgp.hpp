#pragma once

#include "ustat/error.hpp"
#include "ustat/kernel.hpp"
#include "ustat/rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ustat {

/// Gaussian AR(1): X_t = alpha * X_{t-1} + e_t with iid N(0, 1) innovations.
struct Ar1Config {
    double alpha = 0.0;
    std::size_t n = 0;
    std::size_t burn_in = 1000;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_stationary(double alpha) {
    require(std::isfinite(alpha) && std::fabs(alpha) < 1.0,
            "AR coefficient must satisfy |alpha| < 1 for stationarity, got " +
                std::to_string(alpha));
}

} // namespace detail

/**
 * @brief Draws a stationary AR(1) path.
 *
 * X_0 ~ N(0, 1/(1 - alpha^2)) is drawn first, then burn_in steps are
 * discarded and the next n values returned. All normals come from one
 * Xoshiro256ss stream seeded with cfg.seed (see rng.hpp).
 */
inline Sample ar1_generate(const Ar1Config& cfg) {
    detail::check_stationary(cfg.alpha);
    detail::require(cfg.n >= 2, "series length must be at least 2");

    Xoshiro256ss rng(cfg.seed);
    double state = rng.standard_normal() / std::sqrt(1.0 - cfg.alpha * cfg.alpha);
    for (std::size_t t = 0; t < cfg.burn_in; ++t) {
        state = cfg.alpha * state + rng.standard_normal();
    }
    std::vector<double> values(cfg.n);
    for (double& v : values) {
        state = cfg.alpha * state + rng.standard_normal();
        v = state;
    }
    return Sample(std::move(values));
}

/// Var(X_1) = 1 / (1 - alpha^2), the target of the variance kernel.
inline double true_theta_variance_kernel(double alpha) {
    detail::check_stationary(alpha);
    return 1.0 / (1.0 - alpha * alpha);
}

} // namespace ustat
