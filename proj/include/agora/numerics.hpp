#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "errors.hpp"

namespace agora::num {

inline constexpr double quad_tol = 1e-10;
inline constexpr int quad_depth = 40;

namespace detail {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth)
{
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// adaptive Simpson on [a,b]; b < a flips the sign
template <class F>
double simpson(F&& f, double a, double b, double tol = quad_tol, int max_depth = quad_depth)
{
    if (a == b) return 0.0;
    if (b < a) return -simpson(f, b, a, tol, max_depth);
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// same, but splits at known kinks/jumps of the integrand first
template <class F>
double simpson_pieces(F&& f, double a, double b, const std::vector<double>& knots,
                      double tol = quad_tol, int max_depth = quad_depth)
{
    if (a == b) return 0.0;
    if (b < a) return -simpson_pieces(f, b, a, knots, tol, max_depth);
    std::vector<double> cuts{a};
    for (double k : knots)
        if (k > a && k < b) cuts.push_back(k);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double piece_tol = tol / double(cuts.size() - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        sum += simpson(f, cuts[i], cuts[i + 1], piece_tol, max_depth);
    return sum;
}

// bracketed root (TOMS 748); throws when the bracket has no sign change
template <class F>
double find_root(F&& f, double a, double b, double xtol = 1e-15, std::uintmax_t max_iter = 200)
{
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0))
        throw solver_failure("root not bracketed");
    auto stop = [xtol](double lo, double hi) { return std::abs(hi - lo) <= xtol; };
    std::uintmax_t it = max_iter;
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, stop, it);
    if (it >= max_iter) throw solver_failure("root finder did not converge");
    return 0.5 * (r.first + r.second);
}

// maximizer of a unimodal f on [a,b] (Brent's golden-section/parabolic search)
template <class F>
std::pair<double, double> maximize(F&& f, double a, double b)
{
    auto neg = [&f](double x) { return -f(x); };
    std::uintmax_t it = 500;
    auto r = boost::math::tools::brent_find_minima(neg, a, b, std::numeric_limits<double>::digits / 2, it);
    return {r.first, -r.second};
}

// n evenly spaced points on [a,b], both ends included
inline std::vector<double> linspace(double a, double b, std::size_t n)
{
    std::vector<double> out(n);
    if (n == 1) { out[0] = a; return out; }
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a + (b - a) * double(i) / double(n - 1);
    out.back() = b;
    return out;
}

} // namespace agora::num
