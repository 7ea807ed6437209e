#include <cmath>

#include <catch_amalgamated.hpp>

#include <agora/json_io.hpp>
#include <agora/simulator.hpp>
#include <agora/welfare.hpp>

using namespace agora;
using Catch::Matchers::WithinAbs;

namespace {

SimulationConfig small(SimMode mode, double p, std::uint64_t seed = 3)
{
    SimulationConfig c;
    c.mode = mode;
    c.p = p;
    c.n_agents = 20000;
    c.n_replications = 8;
    c.seed = seed;
    c.n_bins = 20;
    return c;
}

DiscrepancyReport against(const SimulationReport& r, const std::vector<BinStat>& bins,
                          const std::function<double(double)>& fn, const ValuationDistribution& d)
{
    CompareOptions opt;
    opt.target = BinTarget::bin_average;
    opt.dist = &d;
    opt.knots = analytic_curves(d, r).knots;
    return compare_to_analytic(bins, fn, opt);
}

} // namespace

TEST_CASE("configuration checks")
{
    SimulationConfig c;
    CHECK_NOTHROW(c.validate());
    c.n_agents = 999;
    CHECK_THROWS_AS(c.validate(), config_error);
    c = {};
    c.n_bins = 9;
    CHECK_THROWS_AS(c.validate(), config_error);
    c = {};
    c.p = 1.01;
    CHECK_THROWS_AS(c.validate(), config_error);
    c = {};
    c.n_replications = 1;
    CHECK_THROWS_AS(run_simulation(c), config_error);

    CHECK(parse_mode("coexistence-da") == SimMode::coexistence_da);
    CHECK_THROWS_AS(parse_mode("auction"), config_error);
    CHECK(parse_sampling("iid") == Sampling::iid);
    CHECK(parse_matching("pairwise") == Matching::pairwise);

    // a nash equilibrium cannot drive the auction simulation
    auto c2 = small(SimMode::coexistence_da, 1);
    CHECK_THROWS_AS(run_simulation(c2, solve_coexistence(dist::uniform(), 1)), config_error);
}

TEST_CASE("standard errors")
{
    auto e = sim::estimate({1.0, 2.0, 3.0});
    CHECK(e.mean == 2.0);
    CHECK_THAT(e.std_error, WithinAbs(1.0 / std::sqrt(3.0), 1e-15));
    bool deg = false;
    CHECK(z_score({1.0, 0.0}, 1.0, &deg) == 0.0);
    CHECK_FALSE(deg);
    CHECK(std::isinf(z_score({1.0, 0.0}, 0.5, &deg)));
    CHECK(deg);
    CHECK_THAT(z_score({1.0, 0.5}, 0.0), WithinAbs(2.0, 1e-15));
}

TEST_CASE("no matching means no bargaining")
{
    for (auto mode : {SimMode::coexistence_nash, SimMode::coexistence_da, SimMode::search_only}) {
        INFO(to_string(mode));
        auto r = run_simulation(small(mode, 0.0));
        CHECK(r.trades_decentralized == 0.0);
        for (auto t : r.trades_decentralized_per_rep) CHECK(t == 0);
        for (const auto& b : r.bin_search_payoffs) CHECK(b.mean == 0.0);
        CHECK(r.empirical_welfare_decentralized.mean == 0.0);
        auto zero = compare_to_analytic(r.bin_search_payoffs, [](double) { return 0.0; });
        CHECK(zero.passes);
        CHECK(zero.max_abs_z == 0.0);
    }
}

TEST_CASE("reports are deterministic and independent of scheduling")
{
    auto c = small(SimMode::coexistence_nash, 0.7, 11);
    c.threads = 1;
    auto a = json(run_simulation(c)).dump();
    c.threads = 3;
    auto b = json(run_simulation(c)).dump();
    CHECK(a == b);
    CHECK(json(run_simulation(c)).dump() == a);
    c.seed = 12;
    CHECK(json(run_simulation(c)).dump() != a);

    auto da = small(SimMode::coexistence_da, 1, 5);
    da.threads = 1;
    auto x = json(run_simulation(da)).dump();
    da.threads = 4;
    CHECK(json(run_simulation(da)).dump() == x);
}

TEST_CASE("finite-sample accounting")
{
    for (auto matching : {Matching::with_replacement, Matching::pairwise}) {
        auto c = small(SimMode::coexistence_nash, 0.8);
        c.matching = matching;
        c.sampling = Sampling::iid;
        auto r = run_simulation(c);
        INFO(to_string(matching));
        CHECK_THAT(r.empirical_profit.mean,
                   WithinAbs((r.buy_price - r.sell_price) * r.trades_marketplace / double(r.n_agents), 1e-15));
        CHECK_THAT(r.empirical_welfare.mean,
                   WithinAbs(r.empirical_welfare_marketplace.mean + r.empirical_welfare_decentralized.mean, 1e-15));
        for (std::size_t i = 0; i < r.n_replications; ++i) {
            CHECK(2 * r.trades_marketplace_per_rep[i] <= r.n_agents);
            CHECK(r.trades_decentralized_per_rep[i] <= r.n_agents);
        }
        std::uint64_t counted = 0;
        for (const auto& b : r.bin_payoffs) counted += b.count;
        CHECK(counted == r.n_agents * r.n_replications);
    }
}

TEST_CASE("nash coexistence agrees with the closed forms")
{
    SimulationConfig c;
    c.seed = 1;
    auto r = run_simulation(c);
    auto d = dist::uniform();
    auto eq = solve_coexistence(d, 1);
    auto w = welfare_coexistence(d, eq.theta_low, eq.theta_high, 1);

    CHECK(std::abs(z_score(r.empirical_profit, eq.profit)) <= 4);
    CHECK(std::abs(z_score(r.empirical_implied_profit, eq.profit)) <= 4);
    CHECK(std::abs(z_score(r.empirical_compensations, eq.compensations)) <= 4);
    CHECK(std::abs(z_score(r.empirical_welfare, w.total)) <= 4);
    CHECK(std::abs(z_score(r.empirical_welfare_decentralized, w.decentralized_part)) <= 4);

    auto curves = analytic_curves(d, r);
    auto zeq = against(r, r.bin_payoffs, curves.equilibrium, d);
    auto zs = against(r, r.bin_search_payoffs, curves.search, d);
    INFO("max |z| " << zeq.max_abs_z << " / " << zs.max_abs_z);
    CHECK(zeq.passes);
    CHECK(zs.passes);

    // a curve twice as high is rejected by a wide margin
    auto twice = [&](double x) { return 2 * curves.search(x); };
    auto bad = against(r, r.bin_search_payoffs, twice, d);
    CHECK_FALSE(bad.passes);
    CHECK(bad.max_abs_z > 100);
}

TEST_CASE("search-only welfare")
{
    SimulationConfig c;
    c.mode = SimMode::search_only;
    c.seed = 42;
    auto r = run_simulation(c);
    CHECK(std::abs(z_score(r.empirical_welfare, 1.0 / 6.0)) <= 4);
    CHECK(r.trades_marketplace == 0.0);
    auto curves = analytic_curves(dist::uniform(), r);
    CHECK(against(r, r.bin_payoffs, curves.equilibrium, dist::uniform()).passes);
}

TEST_CASE("double-auction profit separates the candidate closed forms")
{
    SimulationConfig c;
    c.mode = SimMode::coexistence_da;
    c.seed = 42;
    auto r = run_simulation(c);
    auto eq = solve_da_coexistence(dist::uniform(), 1);
    CHECK(std::abs(z_score(r.empirical_implied_profit, eq.profit)) <= 4);
    CHECK(std::abs(z_score(r.empirical_compensations, eq.compensations)) <= 4);
    CHECK(std::abs(z_score(r.empirical_implied_profit, 0.125 / 6)) > 4);
    CHECK(std::abs(z_score(r.empirical_profit, 1.0 / 24.0)) <= 4);
}

TEST_CASE("other populations and options")
{
    auto b = dist::beta(2, 2);
    auto c = small(SimMode::coexistence_nash, 0.6, 9);
    c.dist = b;
    c.n_agents = 50000;
    c.n_replications = 12;
    auto r = run_simulation(c);
    auto eq = solve_coexistence(b, 0.6);
    CHECK(std::abs(z_score(r.empirical_compensations, eq.compensations)) <= 4);
    CHECK(against(r, r.bin_search_payoffs, analytic_curves(b, r).search, b).passes);

    auto pw = small(SimMode::coexistence_nash, 1, 21);
    pw.matching = Matching::pairwise;
    pw.n_agents = 50000;
    pw.n_replications = 12;
    auto rp = run_simulation(pw);
    auto w = welfare_coexistence(dist::uniform(), 0.25, 0.75, 1);
    CHECK(std::abs(z_score(rp.empirical_welfare, w.total)) <= 4);

    auto mk = small(SimMode::marketplace_only, 1);
    auto rm = run_simulation(mk);
    CHECK_THAT(rm.empirical_profit.mean, WithinAbs(0.125, 1e-3));
    CHECK(rm.trades_decentralized == 0.0);
}
