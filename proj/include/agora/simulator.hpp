#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "coexistence.hpp"
#include "distributions.hpp"
#include "double_auction.hpp"
#include "errors.hpp"
#include "mechanism.hpp"
#include "numerics.hpp"

namespace agora {

enum class SimMode { coexistence_nash, coexistence_da, search_only, marketplace_only };
// stratified: one draw per quantile stratum, so marketplace masses match the continuum exactly
enum class Sampling { stratified, iid };
enum class Matching { with_replacement, pairwise };

inline const char* to_string(SimMode m)
{
    switch (m) {
    case SimMode::coexistence_nash: return "coexistence-nash";
    case SimMode::coexistence_da: return "coexistence-da";
    case SimMode::search_only: return "search-only";
    case SimMode::marketplace_only: return "marketplace-only";
    }
    return "?";
}
inline const char* to_string(Sampling s) { return s == Sampling::stratified ? "stratified" : "iid"; }
inline const char* to_string(Matching m) { return m == Matching::with_replacement ? "with-replacement" : "pairwise"; }

inline SimMode parse_mode(const std::string& s)
{
    for (auto m : {SimMode::coexistence_nash, SimMode::coexistence_da, SimMode::search_only, SimMode::marketplace_only})
        if (s == to_string(m)) return m;
    throw config_error("unknown simulation mode '" + s + "'");
}
inline Sampling parse_sampling(const std::string& s)
{
    if (s == "stratified") return Sampling::stratified;
    if (s == "iid") return Sampling::iid;
    throw config_error("unknown sampling '" + s + "'");
}
inline Matching parse_matching(const std::string& s)
{
    if (s == "with-replacement") return Matching::with_replacement;
    if (s == "pairwise") return Matching::pairwise;
    throw config_error("unknown matching '" + s + "'");
}

struct SimulationConfig {
    ValuationDistribution dist = dist::uniform();
    SimMode mode = SimMode::coexistence_nash;
    double p = 1.0;
    std::size_t n_agents = 200000;
    std::size_t n_replications = 20;
    std::uint64_t seed = 1;
    std::size_t n_bins = 50;
    Sampling sampling = Sampling::stratified;
    Matching matching = Matching::with_replacement;
    unsigned threads = 0; // 0 = hardware concurrency

    void validate() const
    {
        if (n_agents < 1000) throw config_error("n_agents must be at least 1000");
        if (n_bins < 10) throw config_error("n_bins must be at least 10");
        if (n_replications < 2) throw config_error("need at least 2 replications for a standard error");
        if (!(p >= 0.0 && p <= 1.0)) throw config_error("p must lie in [0,1]");
        if (n_agents > std::numeric_limits<std::uint32_t>::max()) throw config_error("n_agents too large");
    }
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct BinStat {
    double lo = 0.0;
    double hi = 0.0;
    double mid = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t count = 0;
};

struct SimulationReport {
    std::string distribution;
    std::string mode;
    std::string sampling;
    std::string matching;
    double p = 0.0;
    std::uint64_t n_agents = 0;
    std::uint64_t n_replications = 0;
    std::uint64_t seed = 0;
    std::uint64_t n_bins = 0;
    double theta_low = 0.0;
    double theta_high = 0.0;
    double sell_price = 0.0;
    double buy_price = 0.0;
    Estimate empirical_profit;
    Estimate empirical_compensations;
    Estimate empirical_implied_profit;
    Estimate empirical_welfare;
    Estimate empirical_welfare_marketplace;
    Estimate empirical_welfare_decentralized;
    double trades_marketplace = 0.0;
    double trades_decentralized = 0.0;
    std::vector<std::uint64_t> trades_marketplace_per_rep;
    std::vector<std::uint64_t> trades_decentralized_per_rep;
    std::vector<BinStat> bin_payoffs;
    std::vector<BinStat> bin_search_payoffs;
};

namespace sim {

struct Plan {
    const ValuationDistribution* dist = nullptr;
    std::size_t n = 0, bins = 0;
    std::uint64_t seed = 0;
    double p = 0.0;
    Sampling sampling = Sampling::stratified;
    Matching matching = Matching::with_replacement;
    bool market = false, decentral = false, auction = false;
    double lo = 0.0, hi = 1.0, sell = 0.0, buy = 1.0;
    std::optional<DoubleAuctionSpec> da;
};

struct RepResult {
    double profit = 0.0, comp = 0.0, implied = 0.0, welfare = 0.0, welfare_m = 0.0, welfare_d = 0.0;
    std::uint64_t trades_m = 0, trades_d = 0;
    std::vector<double> eq_sum, search_sum, theta_sum;
    std::vector<std::uint64_t> count;
};

// independent stream per (seed, replication)
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t rep)
{
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(rep), std::uint32_t(rep >> 32),
                      0x61676f72u};
    return std::mt19937_64(seq);
}

inline RepResult run_replication(const Plan& pl, std::uint64_t rep)
{
    auto rng = stream(pl.seed, rep);
    auto unif = [&rng] { return double(rng() >> 11) * 0x1.0p-53; };
    auto pick = [&rng](std::size_t m) { return std::size_t((unsigned __int128)rng() * m >> 64); };
    const auto& d = *pl.dist;
    const std::size_t n = pl.n, B = pl.bins;

    std::vector<double> theta(n);
    std::vector<std::uint32_t> bin(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = pl.sampling == Sampling::stratified ? (double(i) + unif()) / double(n) : unif();
        theta[i] = d.quantile(u);
        bin[i] = std::uint32_t(std::min<std::size_t>(std::size_t(u * double(B)), B - 1));
    }

    std::vector<double> eq(n, 0.0), search(n, 0.0);
    std::vector<std::size_t> sellers, buyers, pool;
    for (std::size_t i = 0; i < n; ++i) {
        double x = theta[i];
        if (pl.market && x <= pl.lo) sellers.push_back(i);
        else if (pl.market && x >= pl.hi) buyers.push_back(i);
        else if (pl.decentral) pool.push_back(i);
    }
    RepResult out;

    // marketplace: the long side is rationed uniformly at random
    std::vector<char> traded(n, 0);
    std::size_t k = std::min(sellers.size(), buyers.size());
    auto ration = [&](std::vector<std::size_t> side) {
        for (std::size_t j = 0; j < k; ++j) std::swap(side[j], side[j + pick(side.size() - j)]);
        for (std::size_t j = 0; j < k; ++j) traded[side[j]] = 1;
    };
    ration(sellers);
    ration(buyers);
    double wm = 0.0;
    for (std::size_t i : sellers)
        if (traded[i]) {
            eq[i] = pl.sell - theta[i];
            wm -= theta[i];
        }
    for (std::size_t i : buyers)
        if (traded[i]) {
            eq[i] = theta[i] - pl.buy;
            wm += theta[i];
        }
    out.trades_m = k;

    // decentralized market
    const std::size_t m = pool.size();
    std::vector<double> pv(m), bids;
    for (std::size_t j = 0; j < m; ++j) pv[j] = theta[pool[j]];
    if (pl.auction) {
        bids.resize(m);
        for (std::size_t j = 0; j < m; ++j) bids[j] = da_bid(*pl.da, pv[j]);
    }
    // gain of the agent with value x (bid bx) against partner y (bid by); nullopt when no trade
    auto gain = [&](double x, double bx, double y, double by) -> std::optional<double> {
        if (!pl.auction) {
            if (x == y) return std::nullopt;
            return 0.5 * std::abs(x - y);
        }
        if (bx == by) return std::nullopt;
        double price = 0.5 * (bx + by);
        return bx > by ? x - price : price - x;
    };
    auto bid_of = [&](std::size_t j) { return pl.auction ? bids[j] : 0.0; };
    double wd = 0.0;
    if (pl.matching == Matching::with_replacement) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!(unif() < pl.p)) continue;
            std::size_t o = pick(m);
            if (o == j) continue;
            if (auto g = gain(pv[j], bid_of(j), pv[o], bid_of(o))) {
                eq[pool[j]] = *g;
                // each focal meeting carries half the pair's surplus in expectation
                wd += 0.5 * std::abs(pv[j] - pv[o]);
                ++out.trades_d;
            }
        }
    } else {
        std::vector<std::size_t> active;
        for (std::size_t j = 0; j < m; ++j)
            if (unif() < pl.p) active.push_back(j);
        for (std::size_t j = active.size(); j > 1; --j) std::swap(active[j - 1], active[pick(j)]);
        for (std::size_t t = 0; t + 1 < active.size(); t += 2) {
            std::size_t a = active[t], b = active[t + 1];
            auto ga = gain(pv[a], bid_of(a), pv[b], bid_of(b));
            auto gb = gain(pv[b], bid_of(b), pv[a], bid_of(a));
            if (ga && gb) {
                eq[pool[a]] = *ga;
                eq[pool[b]] = *gb;
                wd += std::abs(pv[a] - pv[b]);
                ++out.trades_d;
            }
        }
    }
    for (std::size_t j = 0; j < m; ++j) search[pool[j]] = eq[pool[j]];

    // marketplace agents probe the bargaining pool: their own outside option and the cutoff type's
    double comp = 0.0;
    if (pl.market && pl.decentral) {
        auto probe = [&](std::size_t i, bool seller) {
            if (m == 0 || !(unif() < pl.p)) return;
            std::size_t o = pick(m);
            double cut = seller ? pl.lo : pl.hi;
            double corner = pl.auction ? (seller ? pl.da->bid_low : pl.da->bid_high) : 0.0;
            if (auto g = gain(theta[i], corner, pv[o], bid_of(o))) search[i] = *g;
            if (traded[i])
                if (auto g = gain(cut, corner, pv[o], bid_of(o))) comp += *g;
        };
        for (std::size_t i : sellers) probe(i, true);
        for (std::size_t i : buyers) probe(i, false);
    }

    double nn = double(n);
    out.profit = (pl.buy - pl.sell) * double(k) / nn;
    out.comp = comp / nn;
    out.implied = (pl.hi - pl.lo) * double(k) / nn - out.comp;
    if (!pl.market) out.implied = 0.0;
    out.welfare_m = wm / nn;
    out.welfare_d = wd / nn;
    out.welfare = (wm + wd) / nn;

    out.eq_sum.assign(B, 0.0);
    out.search_sum.assign(B, 0.0);
    out.theta_sum.assign(B, 0.0);
    out.count.assign(B, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto b = bin[i];
        out.eq_sum[b] += eq[i];
        out.search_sum[b] += search[i];
        out.theta_sum[b] += theta[i];
        ++out.count[b];
    }
    return out;
}

inline Estimate estimate(const std::vector<double>& xs)
{
    Estimate e;
    if (xs.empty()) return e;
    double s = 0.0;
    for (double x : xs) s += x;
    e.mean = s / double(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - e.mean) * (x - e.mean);
        e.std_error = std::sqrt(ss / double(xs.size() - 1)) / std::sqrt(double(xs.size()));
    }
    return e;
}

inline unsigned worker_count(unsigned requested, std::size_t jobs)
{
    unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("AGORA_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) w = std::min<unsigned>(w, unsigned(cap));
    }
    return unsigned(std::max<std::size_t>(1, std::min<std::size_t>(w, jobs)));
}

} // namespace sim

inline SimulationReport run_simulation(const SimulationConfig& cfg, std::optional<EquilibriumReport> eq = std::nullopt)
{
    cfg.validate();
    const auto& d = cfg.dist;
    sim::Plan pl;
    pl.dist = &d;
    pl.n = cfg.n_agents;
    pl.bins = cfg.n_bins;
    pl.seed = cfg.seed;
    pl.p = cfg.p;
    pl.sampling = cfg.sampling;
    pl.matching = cfg.matching;

    switch (cfg.mode) {
    case SimMode::coexistence_nash:
    case SimMode::coexistence_da: {
        bool auction = cfg.mode == SimMode::coexistence_da;
        if (!eq) eq = auction ? solve_da_coexistence(d, cfg.p) : solve_coexistence(d, cfg.p);
        if ((eq->protocol == Protocol::double_auction) != auction)
            throw config_error("equilibrium protocol does not match the simulation mode");
        pl.market = pl.decentral = true;
        pl.auction = auction;
        pl.lo = eq->theta_low;
        pl.hi = eq->theta_high;
        pl.sell = eq->sell_price;
        pl.buy = eq->buy_price;
        if (auction) pl.da = make_da_spec(d, pl.lo, pl.hi, cfg.p);
        break;
    }
    case SimMode::search_only:
        pl.decentral = true;
        pl.lo = d.lower();
        pl.hi = d.upper();
        pl.sell = pl.buy = 0.0;
        break;
    case SimMode::marketplace_only: {
        double lo, hi;
        if (eq) {
            lo = eq->theta_low;
            hi = eq->theta_high;
        } else {
            auto base = solve_baseline(d);
            lo = base.theta_low;
            hi = base.theta_high;
        }
        pl.market = true;
        pl.lo = pl.sell = lo;
        pl.hi = pl.buy = hi;
        break;
    }
    }

    const std::size_t R = cfg.n_replications;
    std::vector<sim::RepResult> results(R);
    std::vector<std::exception_ptr> errors(R);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < R;) {
            try {
                results[r] = sim::run_replication(pl, r);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    unsigned workers = sim::worker_count(cfg.threads, R);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    SimulationReport rep;
    rep.distribution = d.name();
    rep.mode = to_string(cfg.mode);
    rep.sampling = to_string(cfg.sampling);
    rep.matching = to_string(cfg.matching);
    rep.p = cfg.p;
    rep.n_agents = cfg.n_agents;
    rep.n_replications = R;
    rep.seed = cfg.seed;
    rep.n_bins = cfg.n_bins;
    rep.theta_low = pl.lo;
    rep.theta_high = pl.hi;
    rep.sell_price = pl.sell;
    rep.buy_price = pl.buy;

    auto collect = [&](auto field) {
        std::vector<double> xs;
        for (const auto& r : results) xs.push_back(field(r));
        return sim::estimate(xs);
    };
    rep.empirical_profit = collect([](const sim::RepResult& r) { return r.profit; });
    rep.empirical_compensations = collect([](const sim::RepResult& r) { return r.comp; });
    rep.empirical_implied_profit = collect([](const sim::RepResult& r) { return r.implied; });
    rep.empirical_welfare = collect([](const sim::RepResult& r) { return r.welfare; });
    rep.empirical_welfare_marketplace = collect([](const sim::RepResult& r) { return r.welfare_m; });
    rep.empirical_welfare_decentralized = collect([](const sim::RepResult& r) { return r.welfare_d; });
    double tm = 0.0, td = 0.0;
    for (const auto& r : results) {
        rep.trades_marketplace_per_rep.push_back(r.trades_m);
        rep.trades_decentralized_per_rep.push_back(r.trades_d);
        tm += double(r.trades_m);
        td += double(r.trades_d);
    }
    rep.trades_marketplace = tm / double(R);
    rep.trades_decentralized = td / double(R);

    auto bins = [&](auto sum_of) {
        std::vector<BinStat> out(cfg.n_bins);
        for (std::size_t b = 0; b < cfg.n_bins; ++b) {
            BinStat& s = out[b];
            s.lo = d.quantile(double(b) / double(cfg.n_bins));
            s.hi = d.quantile(double(b + 1) / double(cfg.n_bins));
            std::vector<double> means;
            double th = 0.0;
            for (const auto& r : results) {
                if (!r.count[b]) continue;
                means.push_back(sum_of(r)[b] / double(r.count[b]));
                th += r.theta_sum[b];
                s.count += r.count[b];
            }
            auto e = sim::estimate(means);
            s.mean = e.mean;
            s.std_error = e.std_error;
            s.mid = s.count ? th / double(s.count) : 0.5 * (s.lo + s.hi);
        }
        return out;
    };
    rep.bin_payoffs = bins([](const sim::RepResult& r) -> const std::vector<double>& { return r.eq_sum; });
    rep.bin_search_payoffs = bins([](const sim::RepResult& r) -> const std::vector<double>& { return r.search_sum; });
    return rep;
}

enum class BinTarget { midpoint, bin_average };

struct CompareOptions {
    BinTarget target = BinTarget::midpoint;
    const ValuationDistribution* dist = nullptr; // needed for bin averages
    std::vector<double> knots;                   // kinks of the analytic curve
    double z_limit = 4.0;
};

struct DiscrepancyReport {
    std::vector<double> z;
    double max_abs_z = 0.0;
    bool degenerate = false;
    std::vector<std::size_t> degenerate_bins;
    bool passes = true;
};

// zero standard error only passes when the discrepancy is at rounding level
inline double z_score(const Estimate& e, double target, bool* degenerate = nullptr)
{
    double diff = e.mean - target;
    // a standard error at rounding level means the estimate is deterministic
    if (e.std_error > 1e-14 * std::max(1.0, std::abs(target))) return diff / e.std_error;
    if (std::abs(diff) <= 1e-12) return 0.0;
    if (degenerate) *degenerate = true;
    return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

inline DiscrepancyReport compare_to_analytic(const std::vector<BinStat>& bins, const std::function<double(double)>& analytic,
                                             const CompareOptions& opt = {})
{
    if (opt.target == BinTarget::bin_average && !opt.dist)
        throw argument_error("bin averages need the valuation distribution");
    DiscrepancyReport rep;
    std::vector<double> uknots;
    if (opt.dist)
        for (double k : opt.knots) uknots.push_back(opt.dist->cdf(k));
    const double nb = double(bins.size());
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const auto& s = bins[b];
        if (!s.count) {
            rep.z.push_back(0.0);
            continue;
        }
        double target;
        if (opt.target == BinTarget::midpoint) {
            target = analytic(s.mid);
        } else {
            double u0 = double(b) / nb, u1 = double(b + 1) / nb;
            const auto& d = *opt.dist;
            target = num::simpson_pieces([&](double u) { return analytic(d.quantile(u)); }, u0, u1, uknots, 1e-12) * nb;
        }
        bool deg = false;
        double z = z_score(Estimate{s.mean, s.std_error}, target, &deg);
        if (deg) {
            rep.degenerate = true;
            rep.degenerate_bins.push_back(b);
        }
        rep.z.push_back(z);
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
    }
    rep.passes = !rep.degenerate && rep.max_abs_z <= opt.z_limit;
    return rep;
}

inline DiscrepancyReport compare_to_analytic(const SimulationReport& r, const std::function<double(double)>& analytic,
                                             const CompareOptions& opt = {})
{
    return compare_to_analytic(r.bin_payoffs, analytic, opt);
}

// closed-form curves matching the two bin tables of a report
struct AnalyticCurves {
    std::function<double(double)> equilibrium;
    std::function<double(double)> search;
    std::vector<double> knots;
};

inline AnalyticCurves analytic_curves(const ValuationDistribution& d, const SimulationReport& r)
{
    AnalyticCurves c;
    double lo = r.theta_low, hi = r.theta_high, p = r.p;
    auto mech = posted_price_mechanism(r.sell_price, r.buy_price);
    c.knots = {lo, hi, r.sell_price, r.buy_price};
    if (r.mode == "search-only") {
        c.search = [d, p](double x) { return search_payoff(d, 0.0, 1.0, p, x); };
        c.equilibrium = c.search;
    } else if (r.mode == "marketplace-only") {
        c.search = [](double) { return 0.0; };
        c.equilibrium = [mech](double x) { return mechanism_payoff(mech, x); };
    } else {
        if (r.mode == "coexistence-da") {
            auto spec = make_da_spec(d, lo, hi, p);
            c.search = [spec](double x) { return da_payoff(spec, x); };
        } else {
            c.search = [d, lo, hi, p](double x) { return search_payoff(d, lo, hi, p, x); };
        }
        auto s = c.search;
        c.equilibrium = [mech, s, lo, hi](double x) {
            return (x <= lo || x >= hi) ? mechanism_payoff(mech, x) : s(x);
        };
    }
    return c;
}

} // namespace agora
