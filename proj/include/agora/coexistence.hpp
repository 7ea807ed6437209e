#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "mechanism.hpp"
#include "numerics.hpp"
#include "search.hpp"

namespace agora {

enum class Protocol { nash, double_auction };

inline const char* to_string(Protocol p) { return p == Protocol::nash ? "nash" : "da"; }

struct EquilibriumReport {
    std::string distribution;
    Protocol protocol = Protocol::nash;
    double p = 0.0;
    double theta_low = 0.0;
    double theta_high = 0.0;
    double sell_price = 0.0;
    double buy_price = 0.0;
    double profit = 0.0;
    double baseline_profit = 0.0;
    double compensations = 0.0;
    double ratio = 1.0;
    double virtual_surplus = 0.0;
    double segment_mean = 0.0;
    MechanismRule mech;
};

namespace detail {

inline void check_probability(double p)
{
    if (!(p >= 0.0 && p <= 1.0)) throw argument_error("matching probability must lie in [0,1]");
}

inline double segment_mean_or(const ValuationDistribution& d, double lo, double hi)
{
    if (lo < hi && d.cdf(hi) > d.cdf(lo)) return conditional_mean(d, lo, hi);
    return lo;
}

} // namespace detail

// bid-ask prices that leave the cutoff types indifferent with bargaining
inline std::pair<double, double> posted_prices(const ValuationDistribution& d, double lo, double hi, double p)
{
    detail::check_probability(p);
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw argument_error("cutoffs must satisfy 0 <= lo <= hi <= 1");
    double e = detail::segment_mean_or(d, lo, hi);
    return {0.5 * (p * e + (2.0 - p) * lo), 0.5 * (p * e + (2.0 - p) * hi)};
}

struct ProfitDecomposition {
    double profit = 0.0;
    double compensations = 0.0;
    double virtual_surplus = 0.0;
};

inline ProfitDecomposition coexistence_profit_general(const ValuationDistribution& d, double lo, double hi, double p)
{
    detail::check_probability(p);
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw argument_error("cutoffs must satisfy 0 <= lo <= hi <= 1");
    double Fl = d.cdf(lo), Fh = d.cdf(hi);
    double excess = Fl - (1.0 - Fh);
    if (excess < -1e-12) throw argument_error("infeasible cutoffs: more buyers than sellers");
    excess = std::max(excess, 0.0);

    ProfitDecomposition out;
    out.virtual_surplus = virtual_surplus(d, lo, hi);
    bool market = lo < hi && Fh > Fl;
    if (!market || p == 0.0) {
        out.profit = out.virtual_surplus;
        return out;
    }
    double e = conditional_mean(d, lo, hi);
    double kept = -lo * Fl + hi * (1.0 - Fh);
    out.profit = 0.5 * ((2.0 - p) * kept - p * excess * e);
    out.compensations = Fl * search_payoff(d, lo, hi, p, lo) + (1.0 - Fh) * search_payoff(d, lo, hi, p, hi);
    if (std::abs(out.profit + out.compensations - out.virtual_surplus) > 1e-8)
        throw solver_failure("profit and compensations do not add up to the virtual surplus");
    return out;
}

inline EquilibriumReport solve_coexistence(const ValuationDistribution& d, double p, double tol = 1e-10)
{
    detail::check_probability(p);
    auto base = solve_baseline(d, tol);
    EquilibriumReport r;
    r.distribution = d.name();
    r.protocol = Protocol::nash;
    r.p = p;
    r.theta_low = base.theta_low;
    r.theta_high = base.theta_high;
    r.segment_mean = conditional_mean(d, r.theta_low, r.theta_high);
    std::tie(r.sell_price, r.buy_price) = posted_prices(d, r.theta_low, r.theta_high, p);
    double Fl = d.cdf(r.theta_low), Fh = d.cdf(r.theta_high);
    r.profit = 0.5 * (2.0 - p) * Fl * (r.theta_high - r.theta_low);
    r.baseline_profit = base.profit;
    r.compensations = Fl * search_payoff(d, r.theta_low, r.theta_high, p, r.theta_low) +
                      (1.0 - Fh) * search_payoff(d, r.theta_low, r.theta_high, p, r.theta_high);
    r.virtual_surplus = virtual_surplus(d, r.theta_low, r.theta_high);
    if (std::abs(r.profit + r.compensations - r.virtual_surplus) > 1e-8)
        throw solver_failure("profit and compensations do not add up to the virtual surplus");
    r.ratio = r.profit / r.baseline_profit;
    r.mech = posted_price_mechanism(r.sell_price, r.buy_price);
    return r;
}

inline bool in_marketplace(const EquilibriumReport& r, double x) { return x <= r.theta_low || x >= r.theta_high; }

struct DeviationReport {
    bool passes = true;
    double max_violation = 0.0;
    double worst_theta = 0.0;
    std::vector<double> crossings;
    bool crossings_match = true;
    long checked = 0;
};

// marketplace payoff against an outside option: marketplace types must weakly prefer it, segment types not
inline DeviationReport verify_against(const EquilibriumReport& r, const std::function<double(double)>& outside,
                                      int grid_n = 1000)
{
    if (grid_n < 10) throw argument_error("deviation grid needs at least 10 points");
    constexpr double tol = 1e-9;
    auto diff = [&](double x) { return mechanism_payoff(r.mech, x) - outside(x); };
    DeviationReport rep;
    auto grid = num::linspace(0.0, 1.0, std::size_t(grid_n) + 1);
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid[i], v = diff(x);
        vals[i] = v;
        ++rep.checked;
        double bad = in_marketplace(r, x) ? -v : v;
        if (bad > rep.max_violation) {
            rep.max_violation = bad;
            rep.worst_theta = x;
        }
    }
    rep.passes = rep.max_violation <= tol;

    // edges of the region where bargaining is strictly better; at p = 1 under the auction
    // the marketplace types are exactly indifferent, so there may be no sign change at all
    constexpr double eps = 1e-15;
    auto inside = [&](double x) { return diff(x) < -eps; };
    for (std::size_t i = 1; i < grid.size(); ++i) {
        bool a = vals[i - 1] < -eps, b = vals[i] < -eps;
        if (a == b) continue;
        double l = grid[i - 1], h = grid[i];
        while (h - l > 1e-14) {
            double m = 0.5 * (l + h);
            (inside(m) == a ? l : h) = m;
        }
        rep.crossings.push_back(0.5 * (l + h));
    }
    if (r.p > 0.0) {
        rep.crossings_match = rep.crossings.size() == 2 && std::abs(rep.crossings[0] - r.theta_low) < 1e-7 &&
                              std::abs(rep.crossings[1] - r.theta_high) < 1e-7;
        rep.passes = rep.passes && rep.crossings_match;
    }
    return rep;
}

inline DeviationReport verify_no_profitable_deviation(const ValuationDistribution& d, const EquilibriumReport& r,
                                                      double p, int grid_n = 1000)
{
    detail::check_probability(p);
    auto outside = [&](double x) { return search_payoff(d, r.theta_low, r.theta_high, p, x); };
    EquilibriumReport at = r;
    at.p = p;
    return verify_against(at, outside, grid_n);
}

// both would have to vanish for a strict subset (a,b) ⊇ (lo,hi) to be self-enforcing
inline std::pair<double, double> obedience_residuals(const ValuationDistribution& d, double lo, double hi, double a,
                                                     double b, double p)
{
    if (!(0.0 < a && a <= lo && lo <= hi && hi <= b && b < 1.0))
        throw argument_error("obedience residuals need 0 < a <= lo <= hi <= b < 1");
    double r1 = search_payoff(d, a, b, p, a) - (search_payoff(d, lo, hi, p, lo) + lo - a);
    double r2 = search_payoff(d, a, b, p, b) - (search_payoff(d, lo, hi, p, hi) + b - hi);
    return {r1, r2};
}

// [a,b] rejoins the marketplace while [lo,a] and [b,hi] keep bargaining
inline double two_interval_profit(const ValuationDistribution& d, double lo, double a, double b, double hi, double p)
{
    detail::check_probability(p);
    if (!(0.0 <= lo && lo <= a && a <= b && b <= hi && hi <= 1.0))
        throw argument_error("two-interval profit needs lo <= a <= b <= hi");
    double Fl = d.cdf(lo), Fa = d.cdf(a), Fb = d.cdf(b), Fh = d.cdf(hi);
    if (std::abs((Fa - Fl) - (Fh - Fb)) > 1e-9) throw argument_error("intervals are not measure balanced");
    if (std::abs(Fl - (1.0 - Fh)) > 1e-9) throw argument_error("marketplace cutoffs are not balanced");

    SegmentationSpec seg;
    seg.p = p;
    if (a >= b) {
        seg.segments = {{lo, hi}};
    } else {
        if (Fa > Fl) seg.segments.push_back({lo, a});
        if (Fh > Fb) seg.segments.push_back({b, hi});
        if (seg.segments.empty()) throw empty_segment_error("both bargaining intervals are empty");
    }
    auto ud = [&](double x) { return search_payoff_general(d, seg, x); };
    return -Fl * ud(lo) - (1.0 - Fh) * ud(hi) - (Fb - Fa) * ud(a) + virtual_surplus(d, lo, hi);
}

struct ObedienceScan {
    double min_residual = 0.0; // min over the grid of max(|r1|,|r2|)
    double at_a = 0.0, at_b = 0.0, at_p = 0.0;
    long points = 0;
};

// a strictly inside (0,lo), b strictly inside (hi,1), p over [0,1]
inline ObedienceScan obedience_scan(const ValuationDistribution& d, double lo, double hi, int na = 40, int nb = 40,
                                    int np = 11)
{
    ObedienceScan s;
    s.min_residual = std::numeric_limits<double>::infinity();
    for (int i = 0; i < na; ++i) {
        double a = lo * (i + 1) / (na + 1);
        for (int j = 0; j < nb; ++j) {
            double b = hi + (1.0 - hi) * (j + 1) / (nb + 1);
            for (int k = 0; k < np; ++k) {
                double p = np == 1 ? 1.0 : double(k) / (np - 1);
                auto [r1, r2] = obedience_residuals(d, lo, hi, a, b, p);
                double r = std::max(std::abs(r1), std::abs(r2));
                ++s.points;
                if (r < s.min_residual) {
                    s.min_residual = r;
                    s.at_a = a;
                    s.at_b = b;
                    s.at_p = p;
                }
            }
        }
    }
    return s;
}

struct TwoIntervalScan {
    double best_profit = 0.0;
    double best_a = 0.0, best_b = 0.0;
    double interval_profit = 0.0; // a = b = median
    long balanced_points = 0;
    bool interval_is_best = false;
};

// n x n grid in probability space; only measure-balanced (a,b) pairs are priced
inline TwoIntervalScan two_interval_scan(const ValuationDistribution& d, double lo, double hi, double p, int n = 50)
{
    if (n < 2) throw argument_error("two-interval grid needs at least 2 points per axis");
    double Fl = d.cdf(lo), Fh = d.cdf(hi), med = d.median();
    auto a_at = [&](int i) { return i == n - 1 ? med : d.quantile(Fl + (0.5 - Fl) * i / (n - 1)); };
    auto b_at = [&](int j) { return j == n - 1 ? med : d.quantile(Fh - (Fh - 0.5) * j / (n - 1)); };
    TwoIntervalScan s;
    s.best_profit = -std::numeric_limits<double>::infinity();
    // index 0 on both axes means nobody bargains, which is not a segmentation
    for (int i = 1; i < n; ++i) {
        double a = a_at(i);
        for (int j = 1; j < n; ++j) {
            double b = b_at(j);
            if (a > b || std::abs((d.cdf(a) - Fl) - (Fh - d.cdf(b))) > 1e-9) continue;
            double v = two_interval_profit(d, lo, a, b, hi, p);
            ++s.balanced_points;
            if (v > s.best_profit) {
                s.best_profit = v;
                s.best_a = a;
                s.best_b = b;
            }
        }
    }
    s.interval_profit = two_interval_profit(d, lo, med, med, hi, p);
    s.interval_is_best = s.best_profit <= s.interval_profit + 1e-12;
    return s;
}

// extreme types compared when everybody bargains instead of using the marketplace
inline double full_decentralization_margin(const ValuationDistribution& d, double p)
{
    auto r = solve_coexistence(d, p);
    double um = mechanism_payoff(r.mech, 0.0) + mechanism_payoff(r.mech, 1.0);
    double ud = search_payoff(d, 0.0, 1.0, p, 0.0) + search_payoff(d, 0.0, 1.0, p, 1.0);
    return um - ud;
}

} // namespace agora
