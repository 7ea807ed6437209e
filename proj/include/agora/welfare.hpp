#pragma once

#include <cmath>
#include <vector>

#include "coexistence.hpp"
#include "distributions.hpp"
#include "double_auction.hpp"
#include "errors.hpp"
#include "numerics.hpp"

namespace agora {

struct WelfareDecomposition {
    double marketplace_part = 0.0;
    double decentralized_part = 0.0;
    double total = 0.0;
    double search_only = 0.0;
    double marketplace_only = 0.0;
};

namespace detail {

inline void check_balanced(const ValuationDistribution& d, double lo, double hi)
{
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw argument_error("cutoffs must satisfy 0 <= lo <= hi <= 1");
    if (std::abs(d.cdf(lo) - (1.0 - d.cdf(hi))) > 1e-8) throw argument_error("cutoffs are not measure balanced");
}

// ∫_a^b h(x) f(x) dx
template <class H>
double weighted(const ValuationDistribution& d, H&& h, double a, double b)
{
    if (b <= a) return 0.0;
    return num::simpson_pieces([&](double x) { return h(x) * d.pdf(x); }, a, b, d.knots(), moment_tol);
}

} // namespace detail

// everybody bargains
inline double welfare_search_only(const ValuationDistribution& d, double p)
{
    detail::check_probability(p);
    return p * detail::weighted(d, [&](double x) { return x * (2.0 * d.cdf(x) - 1.0); }, d.lower(), d.upper());
}

// buyers above hi receive the units sold by types below lo
inline double welfare_marketplace(const ValuationDistribution& d, double lo, double hi)
{
    detail::check_balanced(d, lo, hi);
    return partial_moment(d, hi, 1.0) - partial_moment(d, 0.0, lo);
}

inline WelfareDecomposition welfare_coexistence(const ValuationDistribution& d, double lo, double hi, double p)
{
    detail::check_probability(p);
    WelfareDecomposition w;
    w.marketplace_part = welfare_marketplace(d, lo, hi);
    double Fl = d.cdf(lo), Fh = d.cdf(hi), mass = Fh - Fl;
    if (mass > 0.0 && p > 0.0)
        w.decentralized_part =
            p * detail::weighted(d, [&](double x) { return x * (2.0 * d.cdf(x) - Fl - Fh) / mass; }, lo, hi);
    w.total = w.marketplace_part + w.decentralized_part;
    w.search_only = welfare_search_only(d, p);
    w.marketplace_only = w.marketplace_part;
    return w;
}

struct Assumption2Check {
    bool satisfied = false;
    double margin = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

// sufficient condition for coexistence to beat pure bargaining
inline Assumption2Check check_assumption2(const ValuationDistribution& d, double lo, double hi)
{
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw argument_error("cutoffs must satisfy 0 <= lo <= hi <= 1");
    auto xF = [&](double x) { return x * d.cdf(x); };
    auto x1 = [](double x) { return x; };
    double Fl = d.cdf(lo);
    // conditional expectation with its limit when the conditioning set has no mass
    auto cond = [&](auto h, double a, double b, double limit) {
        double mass = d.cdf(b) - d.cdf(a);
        if (mass <= 1e-14) return limit;
        return detail::weighted(d, h, a, b) / mass;
    };
    double mid_xF = cond(xF, lo, hi, lo * Fl), mid_x = cond(x1, lo, hi, lo);
    double top_x = cond(x1, hi, 1.0, 1.0), top_xF = cond(xF, hi, 1.0, 1.0);
    double bottom_xF = cond(xF, 0.0, lo, 0.0);
    Assumption2Check c;
    c.lhs = 2.0 * mid_xF + top_x;
    c.rhs = mid_x + bottom_xF + top_xF;
    c.margin = c.lhs - c.rhs;
    c.satisfied = c.margin >= 0.0;
    return c;
}

struct PayoffDrop {
    double theta;
    double p_from;
    double p_to;
    double drop;
};

struct MonotonicityReport {
    bool passes = true;
    std::vector<PayoffDrop> violations;
    long checked = 0;
};

// equilibrium payoffs should weakly rise with the matching probability
inline MonotonicityReport payoff_monotonicity_sweep(const ValuationDistribution& d, const std::vector<double>& p_grid,
                                                    const std::vector<double>& theta_grid)
{
    if (p_grid.empty() || theta_grid.empty()) throw argument_error("sweep grids must be nonempty");
    for (std::size_t i = 1; i < p_grid.size(); ++i)
        if (!(p_grid[i] > p_grid[i - 1])) throw argument_error("p grid must be increasing");
    MonotonicityReport rep;
    std::vector<double> prev;
    for (std::size_t k = 0; k < p_grid.size(); ++k) {
        auto eq = solve_coexistence(d, p_grid[k]);
        std::vector<double> cur(theta_grid.size());
        for (std::size_t i = 0; i < theta_grid.size(); ++i) cur[i] = equilibrium_payoff(d, eq, theta_grid[i]);
        if (k) {
            for (std::size_t i = 0; i < cur.size(); ++i) {
                ++rep.checked;
                double drop = prev[i] - cur[i];
                if (drop > 1e-9) rep.violations.push_back({theta_grid[i], p_grid[k - 1], p_grid[k], drop});
            }
        }
        prev = std::move(cur);
    }
    rep.passes = rep.violations.empty();
    return rep;
}

} // namespace agora
