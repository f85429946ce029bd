// Minimal library usage: a 95% interval for Var(X_1) of an AR(1) series
// from the new bootstrap, next to the plug-in bootstrap and subsampling.

#include "ustat/ustat.hpp"

#include <cstdio>

int main() {
    const ustat::Sample sample = ustat::ar1_generate({0.4, 200, 1000, 7});
    const ustat::VarianceKernel kernel;
    const std::size_t l = 10;

    const double point = ustat::u_statistic(sample, kernel);
    const ustat::BlockStats blocks =
        ustat::block_u_stats(sample, kernel, ustat::BlockScheme::Circular, l);

    const ustat::ReplicateSet sets[] = {
        ustat::plug_in_bootstrap(sample, kernel, ustat::BlockScheme::Circular, l, 1000, 1),
        ustat::new_bootstrap(blocks, 1000, 1),
        ustat::subsampling_from_blocks(blocks, point),
    };

    std::printf("U_n = %.6f (true value %.6f)\n", point, ustat::true_theta_variance_kernel(0.4));
    for (const auto& reps : sets) {
        const auto ci = ustat::confidence_interval(point, reps, sample.size(), 0.95);
        std::printf("%-10s [%.6f, %.6f]\n", std::string(ustat::to_string(reps.method)).c_str(),
                    ci.lower, ci.upper);
    }
    std::printf("closed-form Var* = %.6f\n", ustat::bootstrap_variance_closed_form(blocks));
}
