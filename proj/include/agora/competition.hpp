#pragma once

#include <algorithm>

#include "distributions.hpp"
#include "errors.hpp"
#include "mechanism.hpp"

namespace agora {

// market-clearing posted price
inline double walrasian_price(const ValuationDistribution& d) { return d.median(); }

// deviator shaving eps off both sides takes the whole short side; incumbents split evenly
inline double undercut_gain(const ValuationDistribution& d, double sell, double buy, double eps, int n)
{
    if (n < 2) throw argument_error("undercutting needs at least two designers");
    if (sell > buy) throw argument_error("sell price above buy price");
    double spread = buy - sell;
    if (spread <= 0.0) return 0.0;
    if (!(eps > 0.0 && eps < 0.5 * spread)) throw argument_error("eps must lie in (0, spread/2)");
    double deviator = std::min(d.cdf(sell + eps), 1.0 - d.cdf(buy - eps)) * (spread - 2.0 * eps);
    double share = std::min(d.cdf(sell), 1.0 - d.cdf(buy)) * spread / n;
    return deviator - share;
}

// all post the single-market prices with price matching
inline double cartel_split(const ValuationDistribution& d, int n)
{
    if (n < 1) throw argument_error("cartel needs at least one designer");
    return solve_baseline(d).profit / n;
}

} // namespace agora
