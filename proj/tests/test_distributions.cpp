#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <catch_amalgamated.hpp>

#include <agora/distributions.hpp>
#include <agora/json_io.hpp>

#include "oracle_values.hpp"

using namespace agora;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<ValuationDistribution> families()
{
    return {dist::uniform(),      dist::power(2),       dist::power(3),
            dist::beta(2, 2),     dist::beta(2, 3),     dist::trunc_exp(1),
            dist::trunc_exp(-2),  dist::trunc_normal(),  dist::trunc_logistic(),
            dist::piecewise({0.25, 0.75}, {1.9, 0.1, 1.9})};
}

std::string temp_file(const std::string& name, const std::string& body)
{
    std::string path = "agora_test_" + name;
    std::ofstream(path) << body;
    return path;
}

} // namespace

TEST_CASE("virtual value and cost for the uniform and power families")
{
    auto u = dist::uniform();
    CHECK_THAT(virtual_value(u, 0.5), WithinAbs(0.0, 1e-12));
    CHECK_THAT(virtual_cost(u, 0.5), WithinAbs(1.0, 1e-12));
    CHECK_THAT(virtual_value(u, 1.0 - 1e-9), WithinAbs(1.0, 1e-5));
    CHECK_THAT(virtual_cost(u, 1e-9), WithinAbs(0.0, 1e-5));

    auto sq = dist::power(2);
    CHECK_THAT(virtual_value(sq, 0.8), WithinAbs(0.575, 1e-12));
    CHECK_THAT(virtual_cost(sq, 0.4), WithinAbs(0.6, 1e-12));
}

TEST_CASE("endpoints are clamped rather than divided by zero")
{
    auto sq = dist::power(2);
    // f(0) = 0 for F = x^2, the guard keeps us inside the support
    CHECK(std::isfinite(virtual_cost(sq, 0.0)));
    CHECK(std::isfinite(virtual_value(sq, 1.0)));
}

TEST_CASE("zero density inside the support is reported")
{
    auto gap = dist::piecewise({0.4, 0.6}, {1.0, 1e-14, 1.0});
    CHECK_THROWS_AS(virtual_value(gap, 0.5), degenerate_density_error);
    CHECK_THROWS_AS(virtual_cost(gap, 0.5), degenerate_density_error);
    CHECK_NOTHROW(virtual_value(gap, 0.2));
}

TEST_CASE("regularity")
{
    CHECK(check_regularity(dist::uniform()).is_regular);
    CHECK(check_regularity(dist::power(3)).is_regular);
    CHECK(check_regularity(dist::beta(2, 2)).is_regular);
    CHECK(check_regularity(dist::trunc_exp(1)).is_regular);
    CHECK(check_regularity(dist::trunc_normal()).is_regular);
    CHECK(check_regularity(dist::trunc_logistic()).is_regular);

    auto bimodal = dist::piecewise({0.25, 0.75}, {1.9, 0.1, 1.9});
    CHECK_THAT(virtual_value(bimodal, 0.25 - 1e-9), WithinAbs(-0.0263157894737, 1e-6));
    CHECK_THAT(virtual_value(bimodal, 0.25 + 1e-9), WithinAbs(-5.0, 1e-6));
    auto rep = check_regularity(bimodal, 1000);
    REQUIRE_FALSE(rep.is_regular);
    REQUIRE_FALSE(rep.violation_points.empty());
    CHECK_THAT(rep.violation_points.front().theta, WithinAbs(0.25, 2e-3));
    CHECK(rep.violation_points.front().which == Transform::value);

    CHECK_THROWS_AS(check_regularity(dist::uniform(), 50), argument_error);
}

TEST_CASE("moments and truncation")
{
    auto u = dist::uniform();
    CHECK_THAT(conditional_mean(u, 0.25, 0.75), WithinAbs(0.5, 1e-12));
    CHECK_THAT(conditional_mean(u, 0.1, 0.9), WithinAbs(0.5, 1e-12));
    CHECK_THAT(conditional_mean(dist::power(2), 0, 1), WithinAbs(2.0 / 3.0, 1e-10));
    CHECK_THROWS_AS(conditional_mean(u, 0.4, 0.4), argument_error);

    auto tu = truncate(u, 0.25, 0.75);
    CHECK_THAT(tu.cdf(0.5), WithinAbs(0.5, 1e-12));
    CHECK_THAT(tu.quantile(0.5), WithinAbs(0.5, 1e-12));
    CHECK_THAT(tu.cdf(0.1), WithinAbs(0.0, 0.0));
    CHECK_THAT(tu.cdf(0.9), WithinAbs(1.0, 0.0));
    CHECK_THAT(truncate(dist::power(2), 0, 0.5).cdf(0.25), WithinAbs(0.25, 1e-12));
    CHECK_THROWS_AS(truncate(u, 0.6, 0.4), argument_error);
}

TEST_CASE("medians against the oracle")
{
    CHECK_THAT(dist::power(2).median(), WithinAbs(oracle::power2_median, 1e-12));
    CHECK_THAT(dist::trunc_exp(1).median(), WithinAbs(oracle::trunc_exp1_median, 1e-12));
    CHECK_THAT(dist::beta(2, 3).median(), WithinAbs(oracle::beta23_median, 1e-10));
}

TEST_CASE("cdf, pdf and quantile are consistent for every family")
{
    for (const auto& d : families()) {
        INFO(d.name());
        CHECK(d.cdf(0.0) == 0.0);
        CHECK(d.cdf(1.0) == 1.0);
        double prev = 0.0;
        for (int i = 1; i < 200; ++i) {
            double x = i / 200.0;
            double F = d.cdf(x);
            CHECK(F > prev);
            prev = F;
            CHECK_THAT(d.quantile(F), WithinAbs(x, 1e-9));
        }
        // composite midpoint rule, 10^4 panels
        double mass = 0.0;
        for (int i = 0; i < 10000; ++i) mass += d.pdf((i + 0.5) / 1e4) / 1e4;
        CHECK_THAT(mass, WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("partial moments agree with brute-force integration")
{
    for (const auto& d : families()) {
        INFO(d.name());
        // panels break at the piecewise density jumps
        double brute = 0.0;
        const int n = 100000;
        std::vector<double> cuts{0.2, 0.25, 0.75, 0.8};
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            double a = cuts[k], w = (cuts[k + 1] - a) / n;
            for (int i = 0; i < n; ++i) {
                double x = a + (i + 0.5) * w;
                brute += x * d.pdf(x) * w;
            }
        }
        CHECK_THAT(partial_moment(d, 0.2, 0.8), WithinAbs(brute, 1e-7));
    }
}

TEST_CASE("bad parameters are argument errors")
{
    CHECK_THROWS_AS(dist::power(0.5), argument_error);
    CHECK_THROWS_AS(dist::beta(0.5, 2), argument_error);
    CHECK_THROWS_AS(dist::trunc_exp(0), argument_error);
    CHECK_THROWS_AS(dist::trunc_normal(0.5, 0), argument_error);
    CHECK_THROWS_AS(dist::piecewise({0.5}, {1.0}), argument_error);
    CHECK_THROWS_AS(dist::piecewise({0.6, 0.4}, {1, 1, 1}), argument_error);
    CHECK_THROWS_AS(dist::piecewise({0.5}, {1.0, -1.0}), argument_error);
}

TEST_CASE("tabulated cdfs")
{
    std::vector<double> x, F;
    for (int i = 0; i <= 40; ++i) {
        x.push_back(i / 40.0);
        F.push_back(x.back() * x.back());
    }
    auto t = dist::tabulated(x, F);
    CHECK_THAT(t.cdf(0.8), WithinAbs(0.64, 1e-4));
    CHECK_THAT(t.median(), WithinAbs(std::sqrt(0.5), 1e-4));

    CHECK_THROWS_AS(dist::tabulated({0, 0.5, 1}, {0, 0.5, 1}), parse_error);
    CHECK_THROWS_AS(dist::tabulated({0, 0.3, 0.5, 1}, {0, 0.4, 0.35, 1}), parse_error);
    CHECK_THROWS_AS(dist::tabulated({0, 0.3, 0.5, 0.9}, {0, 0.3, 0.5, 1}), parse_error);

    auto good = temp_file("good.csv", "theta,cdf\n0,0\n0.25,0.25\n0.5,0.5\n0.75,0.75\n1,1\n");
    auto tab = dist::load_table(good);
    CHECK(tab.family() == "table");
    CHECK_THAT(tab.cdf(0.3), WithinAbs(0.3, 1e-12));
    CHECK(tab.table_path() == good);

    auto bad = temp_file("bad.csv", "theta,cdf\n0,0\n0.3,0.4\n0.5,0.35\n0.8,0.9\n1,1\n");
    CHECK_THROWS_AS(dist::load_table(bad), parse_error);
    auto header = temp_file("header.csv", "x,y\n0,0\n0.3,0.3\n0.6,0.6\n1,1\n");
    CHECK_THROWS_AS(dist::load_table(header), parse_error);
    auto junk = temp_file("junk.csv", "theta,cdf\n0,0\n0.3,abc\n0.6,0.6\n1,1\n");
    CHECK_THROWS_AS(dist::load_table(junk), parse_error);
    CHECK_THROWS_AS(dist::load_table("does/not/exist.csv"), parse_error);
    for (auto p : {good, bad, header, junk}) std::remove(p.c_str());
}

TEST_CASE("distribution specs parse in every accepted spelling")
{
    CHECK(parse_distribution("uniform").name() == "uniform");
    CHECK(parse_distribution("beta:2,2").name() == "beta(2,2)");
    CHECK(parse_distribution("beta(2,3)").name() == "beta(2,3)");
    CHECK(parse_distribution(R"({"family":"power","params":[3]})").name() == "power(3)");
    CHECK(parse_distribution("trunc_normal").params() == std::vector<double>{0.5, 0.25});
    auto spec = temp_file("spec.json", R"({"family":"piecewise","params":[0.5,1,3]})");
    auto pw = parse_distribution("@" + spec);
    CHECK_THAT(pw.cdf(0.5), WithinAbs(0.25, 1e-12));
    std::remove(spec.c_str());

    CHECK_THROWS_AS(parse_distribution("gamma"), parse_error);
    CHECK_THROWS_AS(parse_distribution("beta:x,2"), parse_error);
    CHECK_THROWS_AS(parse_distribution("{nope"), parse_error);
    CHECK_THROWS_AS(parse_distribution(R"({"family":"beta","params":[0.1,2]})"), parse_error);
    CHECK_THROWS_AS(parse_distribution("@missing.json"), parse_error);

    for (const auto& d : families()) {
        auto back = distribution_from_spec(distribution_spec(d));
        CHECK(back.name() == d.name());
        CHECK(back.cdf(0.37) == d.cdf(0.37));
    }
}
