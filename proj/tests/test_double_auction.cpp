#include <cmath>

#include <catch_amalgamated.hpp>

#include <agora/double_auction.hpp>

#include "oracle_values.hpp"

using namespace agora;
using Catch::Matchers::WithinAbs;

namespace {

// largest gap between central differences of da_payoff and a candidate interior slope
template <class Slope>
double slope_gap(const DoubleAuctionSpec& s, Slope candidate)
{
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 1; i < 200; ++i) {
        double x = s.theta_low + (s.theta_high - s.theta_low) * i / 200.0;
        double fd = (da_payoff(s, x + h) - da_payoff(s, x - h)) / (2 * h);
        worst = std::max(worst, std::abs(fd - candidate(x)));
    }
    return worst;
}

} // namespace

TEST_CASE("uniform bids follow the linear rule")
{
    auto s = make_da_spec(dist::uniform(), 0.25, 0.75, 1.0);
    CHECK_THAT(da_bid(s, 0.25), WithinAbs(1.0 / 3.0, 1e-10));
    CHECK_THAT(da_bid(s, 0.5), WithinAbs(0.5, 1e-12));
    CHECK_THAT(da_bid(s, 0.9), WithinAbs(2.0 / 3.0, 1e-10));
    CHECK_THAT(da_bid(s, 0.1), WithinAbs(1.0 / 3.0, 1e-10));
    for (int i = 0; i <= 100; ++i) {
        double x = 0.25 + 0.5 * i / 100.0;
        CHECK_THAT(da_bid(s, x), WithinAbs((4 * x + 0.25 + 0.75) / 6, 1e-8));
    }
    CHECK_THAT(s.bid_mean, WithinAbs(0.5, 1e-10));
}

TEST_CASE("bids shade toward the segment median")
{
    auto s = make_da_spec(dist::beta(2, 3), 0.15, 0.6, 0.7);
    double prev = -1.0;
    for (int i = 0; i <= 60; ++i) {
        double x = 0.15 + 0.45 * i / 60.0;
        double b = da_bid(s, x);
        CHECK(b > prev);
        prev = b;
        // sellers ask above value, buyers bid below it
        if (x < s.median - 1e-9) CHECK(b >= x);
        if (x > s.median + 1e-9) CHECK(b <= x);
    }
    // the series and the quadrature agree across the switch near the median
    CHECK_THAT(da_bid(s, s.median + 1e-5), WithinAbs(da_bid(s, s.median - 1e-5), 1e-4));
}

TEST_CASE("double-auction payoffs against the oracle")
{
    auto s = make_da_spec(dist::uniform(), 0.25, 0.75, 1.0);
    CHECK_THAT(da_payoff(s, 0.25), WithinAbs(1.0 / 6.0, 1e-8));
    CHECK_THAT(da_payoff(s, 0.75), WithinAbs(1.0 / 6.0, 1e-8));
    CHECK_THAT(da_payoff(s, 0.5), WithinAbs(1.0 / 24.0, 1e-9));
    CHECK_THAT(da_payoff(s, 0.25), WithinAbs(oracle::uniform_da_payoff_lo, 1e-9));
    CHECK_THAT(da_payoff(s, 0.4), WithinAbs(oracle::uniform_da_payoff_x04, 1e-9));
    CHECK_THAT(da_payoff(s, 0.5), WithinAbs(oracle::uniform_da_payoff_mid, 1e-9));
    CHECK_THAT(da_payoff(s, 0.6), WithinAbs(oracle::uniform_da_payoff_x06, 1e-9));
    CHECK_THAT(da_payoff(s, 0.75), WithinAbs(oracle::uniform_da_payoff_hi, 1e-9));
    CHECK_THAT(da_payoff(s, 0.1), WithinAbs(oracle::uniform_da_payoff_below, 1e-9));
    CHECK_THAT(da_payoff(s, 0.9), WithinAbs(oracle::uniform_da_payoff_above, 1e-9));

    auto base = solve_baseline(dist::beta(2, 2));
    auto b = make_da_spec(dist::beta(2, 2), base.theta_low, base.theta_high, 0.8);
    CHECK_THAT(da_payoff(b, 0.2), WithinAbs(oracle::beta22_da_payoff_below, 1e-8));
    CHECK_THAT(da_payoff(b, 0.4), WithinAbs(oracle::beta22_da_payoff_x04, 1e-8));
    CHECK_THAT(da_payoff(b, 0.5), WithinAbs(oracle::beta22_da_payoff_mid, 1e-8));
    CHECK_THAT(da_payoff(b, 0.62), WithinAbs(oracle::beta22_da_payoff_x062, 1e-8));
    CHECK_THAT(da_payoff(b, 0.9), WithinAbs(oracle::beta22_da_payoff_above, 1e-8));
    CHECK_THAT(da_bid(b, 0.4), WithinAbs(oracle::beta22_da_bid_x04, 1e-9));
    CHECK_THAT(da_bid(b, base.theta_low), WithinAbs(oracle::beta22_da_bid_lo, 1e-9));

    CHECK(da_payoff(dist::uniform(), 0.25, 0.75, 0.0, 0.6) == 0.0);
    CHECK_THROWS_AS(da_payoff(s, 1.2), argument_error);
}

TEST_CASE("the interior slope is p(2G-1)")
{
    for (double p : {0.5, 1.0}) {
        auto s = make_da_spec(dist::uniform(), 0.25, 0.75, p);
        auto G = [&](double x) { return (x - 0.25) / 0.5; };
        double right = slope_gap(s, [&](double x) { return p * (2 * G(x) - 1); });
        double wrong = slope_gap(s, [&](double x) { return p * (G(x) - 1); });
        CHECK(right < 1e-5);
        CHECK(wrong > 0.1);
    }
    auto u = dist::uniform();
    CHECK_THAT(da_payoff_slope(u, 0.25, 0.75, 0.8, 0.1), WithinAbs(-0.8, 1e-12));
    CHECK_THAT(da_payoff_slope(u, 0.25, 0.75, 1, 0.5), WithinAbs(0.0, 1e-12));
    CHECK_THAT(da_payoff_slope(u, 0.25, 0.75, 1, 0.25, Side::right), WithinAbs(-1.0, 1e-12));
    CHECK_THAT(da_payoff_slope(u, 0.25, 0.75, 1, 0.9), WithinAbs(1.0, 1e-12));

    auto base = solve_baseline(dist::trunc_exp(1));
    auto e = make_da_spec(dist::trunc_exp(1), base.theta_low, base.theta_high, 0.6);
    double gap = slope_gap(e, [&](double x) {
        return da_payoff_slope(dist::trunc_exp(1), base.theta_low, base.theta_high, 0.6, x);
    });
    CHECK(gap < 1e-5);
}

TEST_CASE("double-auction coexistence")
{
    auto u = dist::uniform();
    auto r = solve_da_coexistence(u, 1.0);
    CHECK(r.protocol == Protocol::double_auction);
    CHECK_THAT(r.profit, WithinAbs(1.0 / 24.0, 1e-8));
    CHECK_THAT(r.compensations, WithinAbs(1.0 / 12.0, 1e-8));
    CHECK_THAT(r.ratio, WithinAbs(1.0 / 3.0, 1e-8));
    CHECK_THAT(r.profit, WithinAbs(oracle::uniform_da_p1_profit, 1e-9));

    auto zero = solve_da_coexistence(u, 0.0);
    CHECK_THAT(zero.profit, WithinAbs(0.125, 1e-12));
    CHECK_THAT(zero.ratio, WithinAbs(1.0, 1e-12));

    auto mid = solve_da_coexistence(u, 0.6);
    CHECK_THAT(mid.ratio, WithinAbs(0.6, 1e-8));
    CHECK_THAT(mid.profit, WithinAbs(oracle::uniform_da_p06_profit, 1e-9));
    CHECK_THAT(mid.compensations, WithinAbs(oracle::uniform_da_p06_compensations, 1e-9));
    CHECK_THAT(solve_da_coexistence(u, 0.3).profit, WithinAbs(oracle::uniform_da_p03_profit, 1e-9));

    // the ratio is linear in p with slope -2/3
    for (int k = 0; k <= 10; ++k) {
        double p = k / 10.0;
        CHECK_THAT(solve_da_coexistence(u, p).ratio, WithinAbs(1.0 - 2.0 * p / 3.0, 1e-8));
    }

    CHECK_THROWS_AS(solve_da_coexistence(dist::beta(2, 2), 1.0), unsupported_distribution);
}

TEST_CASE("double-auction equilibrium has no profitable deviations")
{
    auto u = dist::uniform();
    for (double p : {0.3, 1.0}) {
        auto r = solve_da_coexistence(u, p);
        auto rep = verify_no_profitable_deviation_da(u, r);
        INFO("p=" << p << " max violation " << rep.max_violation);
        CHECK(rep.passes);
        // marketplace types take the posted price, segment types bargain
        CHECK(equilibrium_payoff(u, r, 0.1) == mechanism_payoff(r.mech, 0.1));
        CHECK(equilibrium_payoff(u, r, 0.5) == outside_option(u, r, 0.5));
        CHECK_THAT(mechanism_payoff(r.mech, 0.25), WithinAbs(outside_option(u, r, 0.25), 1e-10));
    }
}
