#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "numerics.hpp"

namespace agora {

// piecewise-constant direct mechanism; segment i is [breakpoints[i], breakpoints[i+1])
struct MechanismRule {
    std::vector<double> breakpoints{0.0};
    std::vector<int> allocations{0};
    std::vector<double> transfers{0.0};

    void validate() const
    {
        if (breakpoints.empty() || breakpoints.size() != allocations.size() ||
            breakpoints.size() != transfers.size())
            throw argument_error("mechanism needs one breakpoint, allocation and transfer per segment");
        if (breakpoints.front() != 0.0) throw argument_error("first breakpoint must be 0");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            if (!(breakpoints[i] >= 0.0 && breakpoints[i] <= 1.0))
                throw argument_error("breakpoints must lie in [0,1]");
            if (i && breakpoints[i] < breakpoints[i - 1])
                throw argument_error("breakpoints must be nondecreasing");
            if (allocations[i] < -1 || allocations[i] > 1)
                throw argument_error("allocations must be -1, 0 or +1");
            if (!std::isfinite(transfers[i])) throw argument_error("transfers must be finite");
        }
    }

    std::size_t segment(double x) const
    {
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
        return it == breakpoints.begin() ? 0 : std::size_t(it - breakpoints.begin()) - 1;
    }
    int allocation(double x) const { return allocations[segment(x)]; }
    double transfer(double x) const { return transfers[segment(x)]; }
    double right_edge(std::size_t i) const { return i + 1 < breakpoints.size() ? breakpoints[i + 1] : 1.0; }
    // duplicate breakpoints leave empty segments nobody lands in
    bool live(std::size_t i) const { return i + 1 == breakpoints.size() || right_edge(i) > breakpoints[i]; }

    bool operator==(const MechanismRule&) const = default;
};

// sellers at or below `sell` receive it, buyers at or above `buy` pay it, the rest sit out
inline MechanismRule posted_price_mechanism(double sell, double buy)
{
    if (!(sell <= buy)) throw argument_error("sell price above buy price");
    MechanismRule m;
    m.breakpoints = {0.0, sell, buy};
    m.allocations = {-1, 0, 1};
    m.transfers = {-sell, 0.0, buy};
    m.validate();
    return m;
}

inline double mechanism_payoff(const MechanismRule& m, double x)
{
    std::size_t i = m.segment(x);
    return x * m.allocations[i] - m.transfers[i];
}

// u(0) + ∫_0^x q, the payoff an incentive-compatible rule must deliver
inline double envelope_payoff(const MechanismRule& m, double x)
{
    double u = -m.transfers[0];
    for (std::size_t i = 0; i < m.breakpoints.size(); ++i) {
        double a = m.breakpoints[i], b = std::min(m.right_edge(i), x);
        if (a >= x) break;
        if (b <= a) continue;
        u += m.allocations[i] * (b - a);
    }
    return u;
}

enum class ViolationClass { monotonicity, transfer, deviation, participation };

inline const char* to_string(ViolationClass v)
{
    switch (v) {
    case ViolationClass::monotonicity: return "monotonicity";
    case ViolationClass::transfer: return "transfer";
    case ViolationClass::deviation: return "deviation";
    case ViolationClass::participation: return "participation";
    }
    return "?";
}

struct Witness {
    double theta;
    double reported;
    double gain;
};

struct IncentiveReport {
    bool passes = true;
    std::optional<Witness> first_violation;
    long checked_pairs = 0;
    std::vector<ViolationClass> violations;
    // participation only
    std::optional<double> theta_star;
    double utility_at_star = 0.0;
    double min_utility = 0.0;

    bool has(ViolationClass v) const
    {
        return std::find(violations.begin(), violations.end(), v) != violations.end();
    }
};

inline constexpr double mechanism_tol = 1e-9;

inline IncentiveReport check_incentive_compatibility(const MechanismRule& m, int grid_n = 200)
{
    if (grid_n < 100) throw argument_error("incentive grid needs at least 100 points");
    m.validate();
    IncentiveReport rep;
    std::optional<Witness> structural;

    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < m.allocations.size(); ++i) {
        if (!m.live(i)) continue;
        if (prev && m.allocations[i] < m.allocations[*prev]) {
            rep.violations.push_back(ViolationClass::monotonicity);
            double x = m.breakpoints[i];
            structural = Witness{x, m.breakpoints[*prev],
                                 x * m.allocations[*prev] - m.transfers[*prev] - mechanism_payoff(m, x)};
            break;
        }
        prev = i;
    }

    // revenue equivalence: t_i = t_0 + b_i q_i - ∫_0^{b_i} q
    for (std::size_t i = 1; i < m.transfers.size(); ++i) {
        if (!m.live(i)) continue;
        double b = m.breakpoints[i];
        double want = m.transfers[0] + b * m.allocations[i] - (envelope_payoff(m, b) + m.transfers[0]);
        if (std::abs(m.transfers[i] - want) > mechanism_tol) {
            rep.violations.push_back(ViolationClass::transfer);
            if (!structural) structural = Witness{b, b, std::abs(m.transfers[i] - want)};
            break;
        }
    }

    auto grid = num::linspace(0.0, 1.0, std::size_t(grid_n) + 1);
    bool deviates = false;
    for (double x : grid) {
        double truth = mechanism_payoff(m, x);
        for (double r : grid) {
            ++rep.checked_pairs;
            double gain = x * m.allocation(r) - m.transfer(r) - truth;
            if (gain > mechanism_tol && !deviates) {
                deviates = true;
                rep.first_violation = Witness{x, r, gain};
            }
        }
    }
    if (deviates) rep.violations.push_back(ViolationClass::deviation);
    if (!rep.first_violation && structural) rep.first_violation = structural;
    rep.passes = rep.violations.empty();
    return rep;
}

inline IncentiveReport check_individual_rationality(const MechanismRule& m, int grid_n = 200)
{
    if (grid_n < 100) throw argument_error("participation grid needs at least 100 points");
    m.validate();
    IncentiveReport rep;
    double star;
    if (m.allocation(0.0) >= 0) {
        star = 0.0;
    } else if (m.allocation(1.0) < 0) {
        star = 1.0;
    } else {
        // first segment whose allocation is no longer negative; q* is zero there or changes sign at its edge
        std::size_t i = 0;
        while (i < m.allocations.size() && (m.allocations[i] < 0 || !m.live(i))) ++i;
        star = m.allocations[i] == 0 ? 0.5 * (m.breakpoints[i] + m.right_edge(i)) : m.breakpoints[i];
    }
    rep.theta_star = star;
    rep.utility_at_star = mechanism_payoff(m, star);
    rep.min_utility = rep.utility_at_star;
    for (double x : num::linspace(0.0, 1.0, std::size_t(grid_n) + 1)) {
        ++rep.checked_pairs;
        rep.min_utility = std::min(rep.min_utility, mechanism_payoff(m, x));
    }
    if (rep.utility_at_star < -mechanism_tol) {
        rep.passes = false;
        rep.violations.push_back(ViolationClass::participation);
        rep.first_violation = Witness{star, star, rep.utility_at_star};
    }
    return rep;
}

struct BaselineSolution {
    double theta_low = 0.0;
    double theta_high = 0.0;
    double sell_price = 0.0;
    double buy_price = 0.0;
    double profit = 0.0;

    MechanismRule mechanism() const { return posted_price_mechanism(sell_price, buy_price); }
};

inline void require_regular(const ValuationDistribution& d)
{
    auto reg = check_regularity(d, 1000);
    if (!reg.is_regular) {
        std::string msg = "distribution " + d.name() + " is not regular; violations at";
        for (std::size_t i = 0; i < reg.violation_points.size() && i < 8; ++i)
            msg += " " + std::to_string(reg.violation_points[i].theta) +
                   (reg.violation_points[i].which == Transform::value ? "(V)" : "(C)");
        throw regularity_error(msg);
    }
}

inline BaselineSolution solve_baseline(const ValuationDistribution& d, double tol = 1e-10)
{
    if (!(tol >= 1e-12 && tol <= 1e-6)) throw argument_error("tol must lie in [1e-12, 1e-6]");
    require_regular(d);
    auto high_of = [&](double lo) { return d.quantile(1.0 - d.cdf(lo)); };
    auto foc = [&](double lo) { return virtual_cost(d, lo) - virtual_value(d, high_of(lo)); };
    double a = d.lower() + endpoint_guard, med = d.median();

    double lo;
    try {
        lo = num::find_root(foc, a, med, 1e-15);
    } catch (const solver_failure&) {
        // no sign change: fall back to maximizing the objective directly
        auto obj = [&](double x) { return d.cdf(x) * (high_of(x) - x); };
        lo = num::maximize(obj, a, med).first;
    }
    double hi = high_of(lo);
    double gap = std::abs(virtual_cost(d, lo) - virtual_value(d, hi));
    if (!(lo > d.lower() && lo < med && gap <= std::max(tol, 1e-9) * (1.0 + std::abs(virtual_cost(d, lo)))))
        throw solver_failure("no interior maximizer for " + d.name());

    BaselineSolution s;
    s.theta_low = lo;
    s.theta_high = hi;
    s.sell_price = lo;
    s.buy_price = hi;
    s.profit = d.cdf(lo) * (hi - lo);
    return s;
}

// buyers' virtual values above hi minus sellers' virtual costs below lo
inline double virtual_surplus(const ValuationDistribution& d, double lo, double hi)
{
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw argument_error("virtual_surplus needs 0 <= lo <= hi <= 1");
    double Fl = d.cdf(lo), Fh = d.cdf(hi);
    double closed = -lo * Fl - hi * Fh + hi;
    // C f = x f + F and V f = x f - (1 - F): no division by the density
    auto knots = d.knots();
    double sellers = num::simpson_pieces([&](double x) { return x * d.pdf(x) + d.cdf(x); }, 0.0, lo, knots, moment_tol);
    double buyers = num::simpson_pieces([&](double x) { return x * d.pdf(x) - (1.0 - d.cdf(x)); }, hi, 1.0, knots, moment_tol);
    double quad = buyers - sellers;
    if (std::abs(quad - closed) > 1e-8) throw solver_failure("virtual surplus quadrature disagrees with closed form");
    return closed;
}

} // namespace agora
