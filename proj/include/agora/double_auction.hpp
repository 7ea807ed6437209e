#pragma once

#include <algorithm>
#include <cmath>

#include "coexistence.hpp"
#include "distributions.hpp"
#include "errors.hpp"
#include "mechanism.hpp"
#include "numerics.hpp"
#include "search.hpp"

namespace agora {

struct DoubleAuctionSpec {
    ValuationDistribution trunc;
    double theta_low = 0.0;
    double theta_high = 1.0;
    double p = 1.0;
    double median = 0.5;
    // cached at construction
    double bid_low = 0.0;
    double bid_high = 0.0;
    double bid_mean = 0.0; // ∫ b g over the segment
};

namespace detail {

// below this distance from 1/2 the bid formula is 0/0 and the local expansion takes over
inline constexpr double median_band = 1e-4;

inline double raw_bid(const ValuationDistribution& g, double med, double x)
{
    double dev = g.cdf(x) - 0.5;
    if (std::abs(dev) < median_band) return x - (x - med) / 3.0;
    auto sq = [&](double y) {
        double e = g.cdf(y) - 0.5;
        return e * e;
    };
    double integral = num::simpson_pieces(sq, med, x, g.knots(), 1e-10 * dev * dev);
    return x - integral / (dev * dev);
}

inline double bid_integral(const ValuationDistribution& g, double med, double a, double b)
{
    if (b <= a) return 0.0;
    auto f = [&](double x) { return raw_bid(g, med, x) * g.pdf(x); };
    auto knots = g.knots();
    knots.push_back(med);
    return num::simpson_pieces(f, a, b, knots, moment_tol);
}

} // namespace detail

inline DoubleAuctionSpec make_da_spec(const ValuationDistribution& d, double lo, double hi, double p)
{
    detail::check_probability(p);
    DoubleAuctionSpec s{truncate(d, lo, hi), lo, hi, p};
    s.median = s.trunc.quantile(0.5);
    s.bid_low = detail::raw_bid(s.trunc, s.median, lo);
    s.bid_high = detail::raw_bid(s.trunc, s.median, hi);
    s.bid_mean = detail::bid_integral(s.trunc, s.median, lo, hi);
    return s;
}

// equilibrium bid; types outside the segment submit the nearest boundary type's bid
inline double da_bid(const DoubleAuctionSpec& s, double x)
{
    if (x <= s.theta_low) return s.bid_low;
    if (x >= s.theta_high) return s.bid_high;
    return detail::raw_bid(s.trunc, s.median, x);
}

inline double da_payoff(const DoubleAuctionSpec& s, double x)
{
    if (!(x >= 0.0 && x <= 1.0)) throw argument_error("type outside [0,1]");
    double p = s.p;
    if (p == 0.0) return 0.0;
    if (x < s.theta_low) return p * (0.5 * (s.bid_low + s.bid_mean) - x);
    if (x > s.theta_high) return p * (x - 0.5 * (s.bid_high + s.bid_mean));
    double G = s.trunc.cdf(x);
    double b = da_bid(s, x);
    double down = detail::bid_integral(s.trunc, s.median, s.theta_low, x);
    double up = s.bid_mean - down;
    return p * x * (2.0 * G - 1.0) + 0.5 * p * (1.0 - 2.0 * G) * b + 0.5 * p * (up - down);
}

inline double da_payoff(const ValuationDistribution& d, double lo, double hi, double p, double x)
{
    return da_payoff(make_da_spec(d, lo, hi, p), x);
}

inline double da_payoff_slope(const ValuationDistribution& d, double lo, double hi, double p, double x,
                              Side side = Side::right)
{
    detail::check_segment(d, lo, hi, p);
    bool below = x < lo || (x == lo && side == Side::left);
    bool above = x > hi || (x == hi && side == Side::right);
    if (below) return -p;
    if (above) return p;
    double G = (d.cdf(x) - d.cdf(lo)) / (d.cdf(hi) - d.cdf(lo));
    return p * (2.0 * G - 1.0);
}

// uniform valuations only; cutoffs, compensations and profit from the bidding equilibrium
inline EquilibriumReport solve_da_coexistence(const ValuationDistribution& d, double p, double tol = 1e-10)
{
    if (d.family() != "uniform") throw unsupported_distribution("double-auction equilibrium is solved for uniform only");
    detail::check_probability(p);
    auto base = solve_baseline(d, tol);
    double lo = base.theta_low, hi = base.theta_high;
    double Fl = d.cdf(lo), Fh = d.cdf(hi);

    EquilibriumReport r;
    r.distribution = d.name();
    r.protocol = Protocol::double_auction;
    r.p = p;
    r.theta_low = lo;
    r.theta_high = hi;
    r.segment_mean = conditional_mean(d, lo, hi);
    r.baseline_profit = base.profit;
    r.virtual_surplus = virtual_surplus(d, lo, hi);

    auto s = make_da_spec(d, lo, hi, p);
    double ul = da_payoff(s, lo), uh = da_payoff(s, hi);
    r.compensations = Fl * ul + (1.0 - Fh) * uh;
    double kept = -lo * Fl + hi * (1.0 - Fh);
    r.profit = (1.0 - p) * kept -
               0.5 * p * ((Fl + Fh - 1.0) * s.bid_mean + Fl * s.bid_low - (1.0 - Fh) * s.bid_high);
    if (std::abs(r.profit - (r.virtual_surplus - r.compensations)) > 1e-10)
        throw solver_failure("double-auction profit routes disagree");
    r.ratio = r.profit / r.baseline_profit;
    r.sell_price = lo + ul;
    r.buy_price = hi - uh;
    r.mech = posted_price_mechanism(r.sell_price, r.buy_price);
    return r;
}

// decentralized payoff under whichever protocol the report was solved for
inline double outside_option(const ValuationDistribution& d, const EquilibriumReport& r, double x)
{
    if (r.protocol == Protocol::nash) return search_payoff(d, r.theta_low, r.theta_high, r.p, x);
    return da_payoff(d, r.theta_low, r.theta_high, r.p, x);
}

inline DeviationReport verify_no_profitable_deviation_da(const ValuationDistribution& d, const EquilibriumReport& r,
                                                         int grid_n = 1000)
{
    auto s = make_da_spec(d, r.theta_low, r.theta_high, r.p);
    return verify_against(r, [&](double x) { return da_payoff(s, x); }, grid_n);
}

inline double equilibrium_payoff(const ValuationDistribution& d, const EquilibriumReport& r, double x)
{
    return std::max(mechanism_payoff(r.mech, x), outside_option(d, r, x));
}

} // namespace agora
