#include "ustat/resampling.hpp"
#include "ustat/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

using namespace ustat;

namespace {

std::vector<double> random_series(std::uint64_t seed, std::size_t n) {
    Xoshiro256ss rng(seed);
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.standard_normal();
    }
    return v;
}

std::vector<double> dyadic_series(std::uint64_t seed, std::size_t n) {
    Xoshiro256ss rng(seed);
    std::vector<double> v(n);
    for (double& x : v) {
        x = (static_cast<double>(rng.bounded(4001)) - 2000.0) / 64.0;
    }
    return v;
}

BlockStats worked_stats() {
    return block_u_stats(Sample({1, 2, 3, 4}), VarianceKernel{}, BlockScheme::Circular, 2);
}

double dkw_epsilon(std::size_t B, double delta = 0.01) {
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(B)));
}

// sup_x |F_B(x) - F(x)| over the atoms of a discrete law; values within tol
// of an atom are attributed to it.
double ks_distance(std::vector<double> draws, const ExactDistribution& exact, double tol) {
    std::sort(draws.begin(), draws.end());
    double worst = 0.0;
    double cumulative = 0.0;
    for (const auto& atom : exact.atoms) {
        cumulative += atom.probability;
        const auto below = std::lower_bound(draws.begin(), draws.end(), atom.value - tol);
        const auto upto = std::upper_bound(draws.begin(), draws.end(), atom.value + tol);
        const double f_left = static_cast<double>(below - draws.begin()) / draws.size();
        const double f_right = static_cast<double>(upto - draws.begin()) / draws.size();
        worst = std::max({worst, std::fabs(f_right - cumulative),
                          std::fabs(f_left - (cumulative - atom.probability))});
    }
    return worst;
}

double sample_variance(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    return ss / static_cast<double>(x.size() - 1);
}

} // namespace

TEST_CASE("conditional moments of the worked case", "[resampling]") {
    const BlockStats circ = worked_stats();
    CHECK(bootstrap_expectation(circ) == 1.5);
    CHECK(bootstrap_variance_closed_form(circ) == 6.0);

    const BlockStats non =
        block_u_stats(Sample({1, 2, 3, 4}), VarianceKernel{}, BlockScheme::Nonoverlapping, 2);
    CHECK(bootstrap_expectation(non) == 0.5);
    CHECK(bootstrap_variance_closed_form(non) == 0.0);

    BlockStats empty;
    empty.block_length = 2;
    empty.source_n = 4;
    CHECK_THROWS_AS(bootstrap_expectation(empty), InvalidInput);
    CHECK_THROWS_AS(bootstrap_variance_closed_form(empty), InvalidInput);
}

TEST_CASE("exact new-bootstrap law of the worked case", "[resampling][enumeration]") {
    const auto dist = enumerate_new_bootstrap(worked_stats());
    REQUIRE(dist.atoms.size() == 3);
    CHECK(dist.atoms[0].value == -2.0);
    CHECK(dist.atoms[1].value == 2.0);
    CHECK(dist.atoms[2].value == 6.0);
    CHECK(dist.atoms[0].probability == 9.0 / 16.0);
    CHECK(dist.atoms[1].probability == 6.0 / 16.0);
    CHECK(dist.atoms[2].probability == 1.0 / 16.0);
}

TEST_CASE("enumeration edge cases", "[resampling][enumeration]") {
    SECTION("single draw per resample") {
        const BlockStats stats =
            block_u_stats(Sample({1, 4, 2}), VarianceKernel{}, BlockScheme::Circular, 2);
        REQUIRE(stats.blocks_per_resample() == 1);
        const auto dist = enumerate_new_bootstrap(stats);
        const double center = bootstrap_expectation(stats);
        std::vector<double> expected;
        for (double v : stats.values) {
            expected.push_back(std::sqrt(2.0) * (v - center));
        }
        std::sort(expected.begin(), expected.end());
        REQUIRE(dist.atoms.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(dist.atoms[i].value == Catch::Approx(expected[i]).epsilon(1e-14));
            CHECK(dist.atoms[i].probability == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
        }
    }
    SECTION("constant statistics give a point mass at zero") {
        const BlockStats stats =
            block_u_stats(Sample({2, 2, 2, 2, 2, 2}), VarianceKernel{}, BlockScheme::Circular, 2);
        const auto dist = enumerate_new_bootstrap(stats);
        REQUIRE(dist.atoms.size() == 1);
        CHECK(dist.atoms[0].value == 0.0);
        CHECK(dist.atoms[0].probability == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("guard refuses large enumerations") {
        const BlockStats stats =
            block_u_stats(Sample(random_series(1, 14)), VarianceKernel{}, BlockScheme::Circular, 2);
        CHECK_THROWS_AS(enumerate_new_bootstrap(stats), GuardExceeded);
    }
    SECTION("probabilities sum to one") {
        const BlockStats stats =
            block_u_stats(Sample(random_series(2, 9)), VarianceKernel{}, BlockScheme::Circular, 2);
        double total = 0.0;
        for (const auto& a : enumerate_new_bootstrap(stats).atoms) {
            total += a.probability;
        }
        CHECK(std::fabs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("new bootstrap of constant statistics is identically zero", "[resampling]") {
    const BlockStats stats =
        block_u_stats(Sample({5, 5, 5, 5, 5, 5}), VarianceKernel{}, BlockScheme::Circular, 3);
    const ReplicateSet reps = new_bootstrap(stats, 100, 9);
    for (double r : reps.replicates) {
        CHECK(r == 0.0);
    }
    CHECK(quantile(reps, 0.025) == 0.0);
    const auto ci = confidence_interval(u_statistic(Sample({5, 5, 5, 5, 5, 5}), VarianceKernel{}),
                                        reps, 6, 0.95);
    CHECK(ci.lower == 0.0);
    CHECK(ci.upper == 0.0);
}

TEST_CASE("new bootstrap metadata and validation", "[resampling]") {
    const ReplicateSet reps = new_bootstrap(worked_stats(), 50, 3);
    CHECK(reps.size() == 50);
    CHECK(reps.center == 1.5);
    CHECK(reps.scale == 2.0);
    CHECK(reps.method == Method::NewBootstrap);
    CHECK(reps.meta.n == 4);
    CHECK(reps.meta.l == 2);
    CHECK(reps.meta.m == 2);
    CHECK(reps.meta.B == 50);
    CHECK(reps.meta.seed == 3);
    for (double r : reps.replicates) {
        CHECK((r == -2.0 || r == 2.0 || r == 6.0));
    }
    CHECK_THROWS_AS(new_bootstrap(worked_stats(), 0, 3), InvalidInput);
}

TEST_CASE("Monte Carlo new bootstrap matches exact enumeration", "[resampling][oracle]") {
    const std::size_t B = 100000;
    const double band = dkw_epsilon(B);
    std::uint64_t case_seed = 0;
    for (std::size_t n = 4; n <= 7; ++n) {
        for (auto scheme : {BlockScheme::Circular, BlockScheme::Nonoverlapping}) {
            const BlockStats stats =
                block_u_stats(Sample(random_series(++case_seed, n)), VarianceKernel{}, scheme, 2);
            REQUIRE(stats.blocks_per_resample() <= 3);
            const auto exact = enumerate_new_bootstrap(stats);
            const auto reps = new_bootstrap(stats, B, 1000 + case_seed);
            INFO("n = " << n << " scheme " << to_string(scheme));
            CHECK(ks_distance(reps.replicates, exact, 1e-9) <= band);
        }
    }
}

TEST_CASE("plug-in bootstrap matches brute-force enumeration", "[resampling][oracle]") {
    // All 16 equally likely start pairs of the circular scheme on [1,2,3,4], l = 2.
    const std::vector<double> x{1, 2, 3, 4};
    std::map<double, double> law;
    for (std::size_t s1 = 0; s1 < 4; ++s1) {
        for (std::size_t s2 = 0; s2 < 4; ++s2) {
            const std::vector<double> pseudo{x[s1], x[(s1 + 1) % 4], x[s2], x[(s2 + 1) % 4]};
            law[sample_variance(pseudo)] += 1.0 / 16.0;
        }
    }
    ExactDistribution exact;
    for (const auto& [v, p] : law) {
        exact.atoms.push_back({v, p});
    }

    const std::size_t B = 100000;
    const auto draws = plug_in_draws(Sample(x), VarianceKernel{}, BlockScheme::Circular, 2, B, 17);
    CHECK(ks_distance(draws, exact, 1e-9) <= dkw_epsilon(B));
}

TEST_CASE("plug-in bootstrap basics", "[resampling]") {
    const auto flat = plug_in_bootstrap(Sample({1, 1, 1, 1, 1}), VarianceKernel{},
                                        BlockScheme::Circular, 2, 40, 5);
    for (double r : flat.replicates) {
        CHECK(r == 0.0);
    }
    const auto reps =
        plug_in_bootstrap(Sample(random_series(3, 30)), VarianceKernel{}, BlockScheme::Circular, 4,
                          200, 5);
    double mean = 0.0;
    for (double r : reps.replicates) {
        mean += r;
    }
    CHECK(std::fabs(mean / 200.0) < 1e-10);
    CHECK(reps.scale == Catch::Approx(std::sqrt(28.0)));
    CHECK(reps.method == Method::PlugInBootstrap);
}

TEST_CASE("raw new-bootstrap draws center on the closed-form expectation",
          "[resampling][moments]") {
    const std::size_t B = 10000;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const BlockStats stats = block_u_stats(Sample(random_series(seed, 60)), VarianceKernel{},
                                               BlockScheme::Circular, 5);
        const double center = bootstrap_expectation(stats);
        const double per_draw_var =
            bootstrap_variance_closed_form(stats) / static_cast<double>(stats.block_length);
        const auto draws = new_bootstrap_draws(stats, B, seed);
        double mean = 0.0;
        for (double d : draws) {
            mean += d;
        }
        mean /= static_cast<double>(B);
        const double m = static_cast<double>(stats.blocks_per_resample());
        CHECK(std::fabs(mean - center) <= 3.0 * std::sqrt(per_draw_var / (m * B)));
    }
}

TEST_CASE("replicate variance matches the closed form", "[resampling][moments]") {
    const std::size_t B = 10000;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const BlockStats stats = block_u_stats(Sample(random_series(seed + 77, 80)),
                                               VarianceKernel{}, BlockScheme::Circular, 8);
        const auto reps = new_bootstrap(stats, B, seed);
        double mean = 0.0;
        for (double r : reps.replicates) {
            mean += r;
        }
        mean /= static_cast<double>(B);
        double m2 = 0.0;
        double m4 = 0.0;
        for (double r : reps.replicates) {
            const double d2 = (r - mean) * (r - mean);
            m2 += d2;
            m4 += d2 * d2;
        }
        const double var = m2 / static_cast<double>(B - 1);
        const double pop = m2 / static_cast<double>(B);
        const double se = std::sqrt((m4 / static_cast<double>(B) - pop * pop) / B);
        CHECK(std::fabs(var - bootstrap_variance_closed_form(stats)) <= 3.0 * se);
    }
}

TEST_CASE("new bootstrap with the additive kernel is the block-mean bootstrap",
          "[resampling][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (auto scheme : {BlockScheme::Circular, BlockScheme::Nonoverlapping}) {
            const Sample exact(dyadic_series(seed, 40 + seed));
            const std::size_t l = 2 + seed % 6;
            const auto a = new_bootstrap(block_u_stats(exact, AdditiveKernel{}, scheme, l), 300, seed);
            const auto b = block_mean_bootstrap(exact, scheme, l, 300, seed);
            CHECK(a.replicates == b.replicates);
            CHECK(a.center == b.center);
        }
    }
}

TEST_CASE("plug-in and new bootstrap agree for the additive kernel", "[resampling][slow]") {
    const Sample s(random_series(2024, 2000));
    const std::size_t l = 40;
    const auto plug = plug_in_bootstrap(s, AdditiveKernel{}, BlockScheme::Circular, l, 5000, 8);
    const auto fresh =
        new_bootstrap(block_u_stats(s, AdditiveKernel{}, BlockScheme::Circular, l), 5000, 8);
    const double vp = sample_variance(plug.replicates);
    const double vn = sample_variance(fresh.replicates);
    CHECK(std::fabs(vp - vn) <= 0.05 * vn);
}

TEST_CASE("replicates do not depend on the thread count", "[resampling]") {
    const Sample s(random_series(5, 120));
    const BlockStats stats = block_u_stats(s, VarianceKernel{}, BlockScheme::Circular, 6);
    CHECK(new_bootstrap(stats, 2000, 4, 1).replicates == new_bootstrap(stats, 2000, 4, 4).replicates);
    CHECK(plug_in_bootstrap(s, VarianceKernel{}, BlockScheme::Nonoverlapping, 6, 300, 4, 1).replicates ==
          plug_in_bootstrap(s, VarianceKernel{}, BlockScheme::Nonoverlapping, 6, 300, 4, 3).replicates);
    CHECK(new_bootstrap(stats, 100, 4).replicates != new_bootstrap(stats, 100, 5).replicates);
}

TEST_CASE("per-replicate cost of the two bootstraps", "[resampling][cost]") {
    const Sample s(random_series(6, 100));
    CountingKernel<VarianceKernel> h;
    const BlockStats stats = block_u_stats(s, h, BlockScheme::Circular, 10);
    CHECK(h.count() == 100u * 45u);

    h.reset();
    std::atomic<std::uint64_t> lookups{0};
    new_bootstrap_draws(stats, 250, 1, 1, &lookups);
    CHECK(h.count() == 0);
    CHECK(lookups.load() == 250u * 10u);

    plug_in_draws(s, h, BlockScheme::Circular, 10, 250, 1);
    CHECK(h.count() == 250u * (100u * 99u / 2u));
}

TEST_CASE("subsampling distribution", "[resampling]") {
    const Sample s({1, 2, 3, 4});
    const auto reps = subsampling_distribution(s, VarianceKernel{}, BlockScheme::Circular, 2);
    const double u = 5.0 / 3.0;
    REQUIRE(reps.size() == 4);
    const double expected[] = {0.5, 0.5, 0.5, 4.5};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(reps.replicates[i] == Catch::Approx(std::sqrt(2.0) * (expected[i] - u)).epsilon(1e-14));
    }
    CHECK(reps.center == Catch::Approx(u).epsilon(1e-15));
    CHECK(reps.meta.B == 4);

    for (double r : subsampling_distribution(Sample({3, 3, 3, 3}), VarianceKernel{},
                                             BlockScheme::Nonoverlapping, 2)
                        .replicates) {
        CHECK(r == 0.0);
    }

    const Sample big(random_series(12, 40));
    const auto circ = subsampling_distribution(big, VarianceKernel{}, BlockScheme::Circular, 5);
    const auto non = subsampling_distribution(big, VarianceKernel{}, BlockScheme::Nonoverlapping, 5);
    REQUIRE(non.size() == 8);
    for (std::size_t i = 0; i < non.size(); ++i) {
        CHECK(non.replicates[i] == circ.replicates[i * 5]);
    }
}

TEST_CASE("subsampling replicates permute with the blocks", "[resampling][property]") {
    BlockStats stats = worked_stats();
    const auto before = subsampling_from_blocks(stats, 1.0);
    std::reverse(stats.values.begin(), stats.values.end());
    auto after = subsampling_from_blocks(stats, 1.0).replicates;
    std::reverse(after.begin(), after.end());
    CHECK(after == before.replicates);
}

TEST_CASE("quantile uses the left-continuous inverse", "[resampling][quantile]") {
    ReplicateSet reps;
    reps.replicates = {4, 1, 3, 2};
    CHECK(quantile(reps, 0.5) == 2.0);
    CHECK(quantile(reps, 0.95) == 4.0);
    CHECK(quantile(reps, 0.25) == 1.0);
    CHECK(quantile(reps, 0.26) == 2.0);
    reps.replicates = {7.5};
    CHECK(quantile(reps, 0.01) == 7.5);
    CHECK(quantile(reps, 0.99) == 7.5);

    reps.replicates.clear();
    CHECK_THROWS_AS(quantile(reps, 0.5), InvalidInput);
    reps.replicates = {1.0};
    CHECK_THROWS_AS(quantile(reps, 0.0), InvalidInput);
    CHECK_THROWS_AS(quantile(reps, 1.0), InvalidInput);

    // 500 replicates: the 2.5% and 97.5% points are order statistics 13 and 488.
    reps.replicates.resize(500);
    for (std::size_t i = 0; i < 500; ++i) {
        reps.replicates[i] = static_cast<double>(i + 1);
    }
    CHECK(quantile(reps, 0.025) == 13.0);
    CHECK(quantile(reps, 0.975) == 488.0);
    reps.replicates.resize(20);
    CHECK(quantile(reps, 0.95) == 19.0);
}

TEST_CASE("basic confidence interval", "[resampling][ci]") {
    ReplicateSet reps;
    reps.replicates = std::vector<double>(10, 0.0);
    auto ci = confidence_interval(1.25, reps, 100, 0.95);
    CHECK(ci.lower == 1.25);
    CHECK(ci.upper == 1.25);
    CHECK(ci.width() == 0.0);

    reps.replicates = {-3.0, 3.0};
    ci = confidence_interval(2.0, reps, 9, 0.5);
    CHECK(ci.lower == 1.0);
    CHECK(ci.upper == 3.0);
    CHECK(ci.level == 0.5);

    // Skewed replicates push the interval the other way (root inversion).
    reps.replicates = {-1.0, -1.0, -1.0, 10.0};
    ci = confidence_interval(0.0, reps, 1, 0.5);
    CHECK(ci.lower == 1.0);
    CHECK(ci.upper == 1.0);
    ci = confidence_interval(0.0, reps, 1, 0.9);
    CHECK(ci.lower == -10.0);
    CHECK(ci.upper == 1.0);

    CHECK_THROWS_AS(confidence_interval(0.0, reps, 4, 1.0), InvalidInput);
    CHECK_THROWS_AS(confidence_interval(0.0, reps, 4, 0.0), InvalidInput);
    reps.replicates.clear();
    CHECK_THROWS_AS(confidence_interval(0.0, reps, 4, 0.9), InvalidInput);
}

TEST_CASE("method names parse", "[resampling]") {
    CHECK(parse_method("new") == Method::NewBootstrap);
    CHECK(parse_method("plugin") == Method::PlugInBootstrap);
    CHECK(parse_method("subsample") == Method::Subsampling);
    CHECK_THROWS_AS(parse_method("jackknife"), InvalidInput);
    CHECK(to_string(Method::Subsampling) == "subsample");
}
