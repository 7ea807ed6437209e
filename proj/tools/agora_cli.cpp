// agora: solve, sweep, simulate and check marketplace/bargaining equilibria
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include <agora/agora.hpp>

using namespace agora;

namespace {

enum Exit { ok = 0, usage = 1, nonregular = 2, check_failed = 3 };

void emit(const std::string& text, const std::string& path)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("cannot write " + path);
    out << text;
    if (!out) throw parse_error("write failed for " + path);
}

std::vector<double> parse_grid(const std::string& s)
{
    std::vector<double> out;
    auto number = [](const std::string& tok) {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(tok, &used);
        } catch (const std::logic_error&) {
            throw parse_error("bad grid value '" + tok + "'");
        }
        if (used != tok.size()) throw parse_error("bad grid value '" + tok + "'");
        return v;
    };
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ':')) parts.push_back(tok);
        if (parts.size() != 3) throw parse_error("range grid is start:step:end");
        double a = number(parts[0]), step = number(parts[1]), b = number(parts[2]);
        if (!(step > 0.0) || b < a) throw parse_error("range grid needs step > 0 and end >= start");
        long n = long(std::floor((b - a) / step + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(round12(a + step * double(i)));
    } else {
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(number(tok));
    }
    if (out.empty()) throw parse_error("empty p grid");
    for (double p : out)
        if (!(p >= 0.0 && p <= 1.0)) throw parse_error("grid values must lie in [0,1]");
    return out;
}

Protocol parse_protocol(const std::string& s)
{
    if (s == "nash") return Protocol::nash;
    if (s == "da") return Protocol::double_auction;
    throw parse_error("protocol must be nash or da");
}

EquilibriumReport solve_for(const ValuationDistribution& d, double p, Protocol proto, bool baseline)
{
    if (baseline || p == 0.0) return solve_coexistence(d, 0.0);
    return proto == Protocol::nash ? solve_coexistence(d, p) : solve_da_coexistence(d, p);
}

int cmd_solve(const std::string& spec, double p, const std::string& protocol, bool baseline, const std::string& out)
{
    auto d = parse_distribution(spec);
    auto r = solve_for(d, p, parse_protocol(protocol), baseline);
    emit(json(r).dump(2) + "\n", out);
    return ok;
}

int cmd_sweep(const std::string& spec, const std::string& grid, const std::string& out)
{
    auto ps = parse_grid(grid);
    auto d = parse_distribution(spec);
    std::ostringstream os;
    os << "p,theta_low,theta_high,p_s,p_b,profit,compensations,ratio,welfare_total,welfare_search_only,"
          "welfare_marketplace_only\n";
    for (double p : ps) {
        auto r = solve_coexistence(d, p);
        auto w = welfare_coexistence(d, r.theta_low, r.theta_high, p);
        for (double v : {p, r.theta_low, r.theta_high, r.sell_price, r.buy_price, r.profit, r.compensations, r.ratio,
                         w.total, w.search_only})
            os << fmt12(v) << ',';
        os << fmt12(w.marketplace_only) << '\n';
    }
    emit(os.str(), out);
    return ok;
}

std::string bins_path(const std::string& out)
{
    std::string base = out;
    if (base.size() > 5 && base.substr(base.size() - 5) == ".json") base.resize(base.size() - 5);
    return base + ".bins.csv";
}

int cmd_simulate(const std::string& spec, const std::string& mode, double p, std::size_t n, std::size_t reps,
                 std::uint64_t seed, std::size_t bins, const std::string& sampling, const std::string& matching,
                 const std::string& out)
{
    SimulationConfig cfg;
    cfg.dist = parse_distribution(spec);
    cfg.mode = parse_mode(mode);
    cfg.p = p;
    cfg.n_agents = n;
    cfg.n_replications = reps;
    cfg.seed = seed;
    cfg.n_bins = bins;
    cfg.sampling = parse_sampling(sampling);
    cfg.matching = parse_matching(matching);
    cfg.validate();
    auto rep = run_simulation(cfg);
    const auto& d = cfg.dist;

    if (!out.empty()) {
        emit(json(rep).dump(2) + "\n", out);
        emit(bins_csv(rep.bin_payoffs), bins_path(out));
    } else {
        std::cout << json(rep).dump(2) << "\n";
    }

    auto curves = analytic_curves(d, rep);
    CompareOptions opt;
    opt.target = BinTarget::bin_average;
    opt.dist = &d;
    opt.knots = curves.knots;
    auto zeq = compare_to_analytic(rep.bin_payoffs, curves.equilibrium, opt);
    auto zs = compare_to_analytic(rep.bin_search_payoffs, curves.search, opt);
    std::FILE* log = out.empty() ? stderr : stdout;
    std::fprintf(log, "mode %s  p=%s  n=%zu  reps=%zu  seed=%llu\n", rep.mode.c_str(), fmt12(p).c_str(), n, reps,
                 (unsigned long long)seed);
    std::fprintf(log, "trades: marketplace %s  decentralized %s (per replication)\n",
                 fmt12(rep.trades_marketplace).c_str(), fmt12(rep.trades_decentralized).c_str());
    std::fprintf(log, "max |z| equilibrium bins: %.3f%s\n", zeq.max_abs_z, zeq.degenerate ? " (degenerate bin)" : "");
    std::fprintf(log, "max |z| search bins:      %.3f%s\n", zs.max_abs_z, zs.degenerate ? " (degenerate bin)" : "");

    bool coexist = cfg.mode == SimMode::coexistence_nash || cfg.mode == SimMode::coexistence_da;
    if (coexist) {
        EquilibriumReport eq = cfg.mode == SimMode::coexistence_da ? solve_da_coexistence(d, p) : solve_coexistence(d, p);
        std::fprintf(log, "profit %s (se %s)  analytic %s  z %.3f\n", fmt12(rep.empirical_profit.mean).c_str(),
                     fmt12(rep.empirical_profit.std_error).c_str(), fmt12(eq.profit).c_str(),
                     z_score(rep.empirical_profit, eq.profit));
        std::fprintf(log, "profit from probed compensations %s (se %s)  z %.3f\n",
                     fmt12(rep.empirical_implied_profit.mean).c_str(),
                     fmt12(rep.empirical_implied_profit.std_error).c_str(),
                     z_score(rep.empirical_implied_profit, eq.profit));
        std::fprintf(log, "compensations %s (se %s)  analytic %s  z %.3f\n",
                     fmt12(rep.empirical_compensations.mean).c_str(),
                     fmt12(rep.empirical_compensations.std_error).c_str(), fmt12(eq.compensations).c_str(),
                     z_score(rep.empirical_compensations, eq.compensations));
        auto w = welfare_coexistence(d, eq.theta_low, eq.theta_high, p);
        std::fprintf(log, "welfare %s (se %s)  analytic %s  z %.3f\n", fmt12(rep.empirical_welfare.mean).c_str(),
                     fmt12(rep.empirical_welfare.std_error).c_str(), fmt12(w.total).c_str(),
                     z_score(rep.empirical_welfare, w.total));
        if (cfg.mode == SimMode::coexistence_da) {
            double base = eq.baseline_profit;
            for (auto [label, ratio] : {std::pair{"1-2p/3", 1.0 - 2.0 * p / 3.0}, std::pair{"1-5p/6", 1.0 - 5.0 * p / 6.0}}) {
                double target = ratio * base;
                double z = z_score(rep.empirical_implied_profit, target);
                std::fprintf(log, "candidate closed form (%s) x baseline = %s  z %.3f  %s\n", label,
                             fmt12(target).c_str(), z, std::abs(z) <= 4.0 ? "consistent" : "rejected");
            }
        }
    } else if (cfg.mode == SimMode::search_only) {
        double w = welfare_search_only(d, p);
        std::fprintf(log, "welfare %s (se %s)  analytic %s  z %.3f\n", fmt12(rep.empirical_welfare.mean).c_str(),
                     fmt12(rep.empirical_welfare.std_error).c_str(), fmt12(w).c_str(),
                     z_score(rep.empirical_welfare, w));
    } else {
        auto base = solve_baseline(d);
        std::fprintf(log, "profit %s  analytic %s\n", fmt12(rep.empirical_profit.mean).c_str(), fmt12(base.profit).c_str());
    }
    return ok;
}

int cmd_check(const std::string& spec)
{
    auto d = parse_distribution(spec);
    bool all = true;
    auto row = [&](const char* name, bool pass, const std::string& detail) {
        all = all && pass;
        std::printf("%-24s %-4s %s\n", name, pass ? "pass" : "FAIL", detail.c_str());
    };
    std::printf("distribution %s\n", d.name().c_str());
    auto reg = check_regularity(d, 1000);
    std::string where;
    for (std::size_t i = 0; i < reg.violation_points.size() && i < 6; ++i)
        where += fmt12(reg.violation_points[i].theta) + (reg.violation_points[i].which == Transform::value ? "(V) " : "(C) ");
    row("regularity", reg.is_regular, reg.is_regular ? "V and C increasing" : "violations at " + where);
    if (!reg.is_regular) {
        std::printf("remaining checks need a regular distribution\n");
        return check_failed;
    }
    auto base = solve_baseline(d);
    auto a2 = check_assumption2(d, base.theta_low, base.theta_high);
    row("bargaining-dominance", a2.satisfied, "margin " + fmt12(a2.margin));
    auto ob = obedience_scan(d, base.theta_low, base.theta_high, 40, 40, 11);
    row("obedience", ob.min_residual > 1e-3,
        "min max|r| " + fmt12(ob.min_residual) + " over " + std::to_string(ob.points) + " points");
    auto ti = two_interval_scan(d, base.theta_low, base.theta_high, 1.0, 50);
    row("two-interval", ti.interval_is_best,
        "best " + fmt12(ti.best_profit) + " at (" + fmt12(ti.best_a) + "," + fmt12(ti.best_b) + ")");
    return all ? ok : check_failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"agora: marketplaces competing with decentralized trade"};
    app.require_subcommand(1);

    std::string spec = "uniform", out, protocol = "nash", grid, mode = "coexistence-nash";
    std::string sampling = "stratified", matching = "with-replacement";
    double p = 1.0;
    bool baseline = false;
    std::size_t n = 200000, reps = 20, bins = 50;
    std::uint64_t seed = 1;

    auto* solve = app.add_subcommand("solve", "equilibrium report as JSON");
    solve->add_option("--dist", spec, "name, inline JSON or @file");
    solve->add_option("--p", p, "matching probability");
    solve->add_option("--protocol", protocol, "nash or da");
    solve->add_flag("--baseline", baseline, "single-market solution");
    solve->add_option("--out", out, "output path (stdout if omitted)");

    auto* sweep = app.add_subcommand("sweep", "CSV over a p grid");
    sweep->add_option("--dist", spec, "name, inline JSON or @file");
    sweep->add_option("--grid", grid, "comma list or start:step:end")->required();
    sweep->add_option("--out", out, "output path (stdout if omitted)");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo market");
    simulate->add_option("--dist", spec, "name, inline JSON or @file");
    simulate->add_option("--mode", mode, "coexistence-nash, coexistence-da, search-only, marketplace-only");
    simulate->add_option("--p", p, "matching probability");
    simulate->add_option("--n", n, "agents per replication");
    simulate->add_option("--reps", reps, "replications");
    simulate->add_option("--seed", seed, "base seed");
    simulate->add_option("--bins", bins, "payoff bins");
    simulate->add_option("--sampling", sampling, "stratified or iid");
    simulate->add_option("--matching", matching, "with-replacement or pairwise");
    simulate->add_option("--out", out, "report path; bins go next to it");

    auto* check = app.add_subcommand("check", "structural checks");
    check->add_option("--dist", spec, "name, inline JSON or @file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        if (solve->parsed()) return cmd_solve(spec, p, protocol, baseline, out);
        if (sweep->parsed()) return cmd_sweep(spec, grid, out);
        if (simulate->parsed())
            return cmd_simulate(spec, mode, p, n, reps, seed, bins, sampling, matching, out);
        if (check->parsed()) return cmd_check(spec);
    } catch (const regularity_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return nonregular;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return usage;
    }
    return usage;
}
