#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"

namespace agora {

struct Interval {
    double lo;
    double hi;
};

// types trading bilaterally plus the chance p of meeting someone (efficiency m = p/2)
struct SegmentationSpec {
    std::vector<Interval> segments;
    double p = 1.0;

    double efficiency() const { return 0.5 * p; }

    void validate(const ValuationDistribution& d) const
    {
        if (segments.empty() || segments.size() > 2) throw argument_error("segmentation needs one or two intervals");
        if (!(p >= 0.0 && p <= 1.0)) throw argument_error("matching probability must lie in [0,1]");
        double mass = 0.0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const auto& s = segments[i];
            if (!(s.lo >= 0.0 && s.lo <= s.hi && s.hi <= 1.0)) throw argument_error("interval outside [0,1]");
            if (i && s.lo < segments[i - 1].hi) throw argument_error("intervals must be ordered and disjoint");
            mass += d.cdf(s.hi) - d.cdf(s.lo);
        }
        if (!(mass > 0.0)) throw empty_segment_error("decentralized set has zero mass");
    }
};

enum class Side { left, right };

namespace detail {

inline void check_segment(const ValuationDistribution& d, double lo, double hi, double p)
{
    if (!(lo < hi)) throw empty_segment_error("decentralized segment is empty");
    if (!(p >= 0.0 && p <= 1.0)) throw argument_error("matching probability must lie in [0,1]");
    if (!(d.cdf(hi) > d.cdf(lo))) throw empty_segment_error("decentralized segment has zero mass");
}

} // namespace detail

// expected Nash-bargaining payoff of type x facing partners drawn from (lo,hi)
inline double search_payoff(const ValuationDistribution& d, double lo, double hi, double p, double x)
{
    detail::check_segment(d, lo, hi, p);
    if (!(x >= 0.0 && x <= 1.0)) throw argument_error("type outside [0,1]");
    if (p == 0.0) return 0.0;
    double Fl = d.cdf(lo), Fh = d.cdf(hi), mass = Fh - Fl;
    if (x < lo) return 0.5 * p * (partial_moment(d, lo, hi) / mass - x);
    if (x > hi) return 0.5 * p * (x - partial_moment(d, lo, hi) / mass);
    double above = partial_moment(d, x, hi), below = partial_moment(d, lo, x);
    double u = 0.5 * p / mass * (above - below + x * (2.0 * d.cdf(x) - Fh - Fl));
    return std::max(u, 0.0);
}

inline double search_payoff_general(const ValuationDistribution& d, const SegmentationSpec& seg, double x)
{
    seg.validate(d);
    if (!(x >= 0.0 && x <= 1.0)) throw argument_error("type outside [0,1]");
    if (seg.p == 0.0) return 0.0;
    double mass = 0.0, acc = 0.0;
    for (const auto& s : seg.segments) {
        double m = d.cdf(s.hi) - d.cdf(s.lo);
        mass += m;
        double cut = std::clamp(x, s.lo, s.hi);
        double p_above = d.cdf(s.hi) - d.cdf(cut), p_below = d.cdf(cut) - d.cdf(s.lo);
        acc += partial_moment(d, cut, s.hi) - x * p_above + x * p_below - partial_moment(d, s.lo, cut);
    }
    return std::max(0.5 * seg.p / mass * acc, 0.0);
}

// piecewise derivative; at a branch boundary `side` picks the one-sided value
inline double search_payoff_slope(const ValuationDistribution& d, double lo, double hi, double p, double x,
                                  Side side = Side::right)
{
    detail::check_segment(d, lo, hi, p);
    bool below = x < lo || (x == lo && side == Side::left);
    bool above = x > hi || (x == hi && side == Side::right);
    if (below) return -0.5 * p;
    if (above) return 0.5 * p;
    double Fl = d.cdf(lo), Fh = d.cdf(hi);
    return p * (2.0 * d.cdf(x) - Fl - Fh) / (2.0 * (Fh - Fl));
}

} // namespace agora
