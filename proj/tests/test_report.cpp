#include "ustat/report.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <limits>
#include <string>

using namespace ustat;

namespace {

CoverageRecord record(Method method, std::size_t l, double coverage) {
    CoverageRecord r;
    r.method = method;
    r.n = 100;
    r.l = l;
    r.alpha = 0.4;
    r.level = 0.95;
    r.coverage = coverage;
    r.mean_width = 0.25;
    r.num_sims = 2000;
    r.B = 500;
    r.seed = 20240101;
    return r;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t hits = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
        ++hits;
    }
    return hits;
}

} // namespace

TEST_CASE("number formatting", "[report]") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(0.857) == "0.857");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(-1.5e-7) == "-1.5e-07");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(std::stod(format_series_value(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_series_value(0.5) == "0.5");
}

TEST_CASE("coverage CSV", "[report]") {
    CoverageReport report;
    report.records = {record(Method::PlugInBootstrap, 7, 0.874), record(Method::NewBootstrap, 7, 0.857)};
    const std::string csv = coverage_csv(report);
    CHECK(csv == "method,n,l,alpha,level,coverage,mean_width,num_sims,B,seed\n"
                 "plugin,100,7,0.4,0.95,0.874,0.25,2000,500,20240101\n"
                 "new,100,7,0.4,0.95,0.857,0.25,2000,500,20240101\n");

    CoverageRecord bad = record(Method::Subsampling, 200, std::numeric_limits<double>::quiet_NaN());
    bad.mean_width = std::numeric_limits<double>::quiet_NaN();
    bad.error = "block length l=200 exceeds n=100, \"quoted\"";
    report.records.push_back(bad);
    const std::string with_error = coverage_csv(report);
    CHECK(with_error.starts_with(
        "method,n,l,alpha,level,coverage,mean_width,num_sims,B,seed,error\n"
        "plugin,100,7,0.4,0.95,0.874,0.25,2000,500,20240101,\n"));
    CHECK(with_error.ends_with(
        "subsample,100,200,0.4,0.95,nan,nan,2000,500,20240101,"
        "\"block length l=200 exceeds n=100, \"\"quoted\"\"\"\n"));

    CHECK(coverage_csv(CoverageReport{}) == std::string(kCoverageCsvHeader) + "\n");
}

TEST_CASE("coverage JSON", "[report]") {
    CoverageReport report;
    report.records = {record(Method::NewBootstrap, 5, 0.9)};
    CoverageRecord bad = record(Method::Subsampling, 500, std::numeric_limits<double>::quiet_NaN());
    bad.error = "too long";
    report.records.push_back(bad);
    const nlohmann::json doc = coverage_json(report);
    CHECK(doc["kind"] == "coverage");
    REQUIRE(doc["records"].size() == 2);
    const auto& ok = doc["records"][0];
    CHECK(ok["method"] == "new");
    CHECK(ok["n"].is_number_unsigned());
    CHECK(ok["coverage"] == 0.9);
    CHECK(ok["seed"] == 20240101u);
    CHECK_FALSE(ok.contains("error"));
    const auto& failed = doc["records"][1];
    CHECK(failed["coverage"].is_null());
    CHECK(failed["error"] == "too long");
    CHECK(nlohmann::json::parse(doc.dump()) == doc);
}

TEST_CASE("MSE and bench outputs", "[report]") {
    MseReport mse;
    MseRecord m;
    m.n = 1024;
    m.l = 32;
    m.alpha = 0.4;
    m.mse = 0.75;
    m.mse_se = 0.05;
    m.mean_bootstrap_variance = 3.5;
    m.target = 3.9;
    m.target_se = 0.02;
    m.num_sims = 500;
    mse.records = {m};
    CHECK(mse_csv(mse) ==
          "n,l,alpha,mse,mse_se,mean_bootstrap_variance,target,target_se,num_sims\n"
          "1024,32,0.4,0.75,0.05,3.5,3.9,0.02,500\n");
    CHECK(mse_json(mse)["records"][0]["mse"] == 0.75);

    BenchReport bench;
    BenchRecord b;
    b.n = 400;
    b.l = 20;
    b.m = 20;
    b.B = 10;
    b.precompute_evals = 76000;
    b.new_lookups_per_replicate = 20;
    b.plugin_evals_per_replicate = 79800;
    b.expected_precompute_evals = 76000;
    b.expected_plugin_evals = 79800;
    b.counts_exact = true;
    b.plugin_seconds_per_replicate = 1.25;
    bench.records = {b};
    const std::string csv = bench_csv(bench);
    CHECK(csv.ends_with("400,20,20,10,76000,0,20,79800,76000,79800,true\n"));
    CHECK(csv.find("seconds") == std::string::npos);
    const nlohmann::json doc = bench_json(bench);
    CHECK(doc["records"][0]["plugin_evals_per_replicate"] == 79800);
    CHECK_FALSE(doc["records"][0].contains("plugin_seconds_per_replicate"));
}

TEST_CASE("coverage curve SVG", "[report]") {
    CoverageReport report;
    for (std::size_t l : {5, 7, 10, 15}) {
        report.records.push_back(record(Method::PlugInBootstrap, l, 0.9));
        report.records.push_back(record(Method::NewBootstrap, l, 0.85));
        report.records.push_back(record(Method::Subsampling, l, 0.8));
    }
    const std::string svg = coverage_curve_svg(report);
    CHECK(svg.starts_with("<svg"));
    CHECK(svg.ends_with("</svg>\n"));
    CHECK(count(svg, "<polyline") == 3);
    CHECK(count(svg, "data-method=\"plugin\"") == 1);
    CHECK(count(svg, "data-method=\"new\"") == 1);
    CHECK(count(svg, "data-method=\"subsample\"") == 1);
    CHECK(svg.find("stroke-dasharray=\"6,4\" data-method=\"subsample\"") != std::string::npos);
    CHECK(svg == coverage_curve_svg(report));

    const std::string empty = coverage_curve_svg(CoverageReport{});
    CHECK(count(empty, "<polyline") == 0);
    CHECK(empty.ends_with("</svg>\n"));
}
