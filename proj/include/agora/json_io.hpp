#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "coexistence.hpp"
#include "distributions.hpp"
#include "errors.hpp"
#include "mechanism.hpp"
#include "simulator.hpp"
#include "welfare.hpp"

namespace agora {

using json = nlohmann::json;

// 12 significant digits everywhere we print
inline double round12(double v)
{
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

inline std::string fmt12(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline std::vector<double> rounded(const std::vector<double>& xs)
{
    std::vector<double> out;
    for (double x : xs) out.push_back(round12(x));
    return out;
}

template <class T>
T field(const json& j, const char* key)
{
    if (!j.contains(key)) throw parse_error(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw parse_error(std::string("bad field '") + key + "': " + e.what());
    }
}

} // namespace detail

inline void to_json(json& j, const MechanismRule& m)
{
    j = json{{"breakpoints", detail::rounded(m.breakpoints)},
             {"allocations", m.allocations},
             {"transfers", detail::rounded(m.transfers)}};
}

inline void from_json(const json& j, MechanismRule& m)
{
    m.breakpoints = detail::field<std::vector<double>>(j, "breakpoints");
    m.allocations = detail::field<std::vector<int>>(j, "allocations");
    m.transfers = detail::field<std::vector<double>>(j, "transfers");
    try {
        m.validate();
    } catch (const argument_error& e) {
        throw parse_error(e.what());
    }
}

inline void to_json(json& j, const EquilibriumReport& r)
{
    j = json{{"distribution", r.distribution},
             {"protocol", to_string(r.protocol)},
             {"p", round12(r.p)},
             {"theta_low", round12(r.theta_low)},
             {"theta_high", round12(r.theta_high)},
             {"sell_price", round12(r.sell_price)},
             {"buy_price", round12(r.buy_price)},
             {"profit", round12(r.profit)},
             {"baseline_profit", round12(r.baseline_profit)},
             {"compensations", round12(r.compensations)},
             {"ratio", round12(r.ratio)},
             {"virtual_surplus", round12(r.virtual_surplus)},
             {"segment_mean", round12(r.segment_mean)},
             {"mech", r.mech}};
}

inline void from_json(const json& j, EquilibriumReport& r)
{
    using detail::field;
    r.distribution = field<std::string>(j, "distribution");
    auto proto = field<std::string>(j, "protocol");
    if (proto != "nash" && proto != "da") throw parse_error("protocol must be nash or da");
    r.protocol = proto == "nash" ? Protocol::nash : Protocol::double_auction;
    r.p = field<double>(j, "p");
    r.theta_low = field<double>(j, "theta_low");
    r.theta_high = field<double>(j, "theta_high");
    r.sell_price = field<double>(j, "sell_price");
    r.buy_price = field<double>(j, "buy_price");
    r.profit = field<double>(j, "profit");
    r.baseline_profit = field<double>(j, "baseline_profit");
    r.compensations = field<double>(j, "compensations");
    r.ratio = field<double>(j, "ratio");
    r.virtual_surplus = field<double>(j, "virtual_surplus");
    r.segment_mean = field<double>(j, "segment_mean");
    r.mech = field<MechanismRule>(j, "mech");
}

inline void to_json(json& j, const WelfareDecomposition& w)
{
    j = json{{"marketplace_part", round12(w.marketplace_part)},
             {"decentralized_part", round12(w.decentralized_part)},
             {"total", round12(w.total)},
             {"search_only", round12(w.search_only)},
             {"marketplace_only", round12(w.marketplace_only)}};
}

inline void from_json(const json& j, WelfareDecomposition& w)
{
    using detail::field;
    w.marketplace_part = field<double>(j, "marketplace_part");
    w.decentralized_part = field<double>(j, "decentralized_part");
    w.total = field<double>(j, "total");
    w.search_only = field<double>(j, "search_only");
    w.marketplace_only = field<double>(j, "marketplace_only");
}

inline void to_json(json& j, const Estimate& e)
{
    j = json{{"mean", round12(e.mean)}, {"std_error", round12(e.std_error)}};
}

inline void from_json(const json& j, Estimate& e)
{
    e.mean = detail::field<double>(j, "mean");
    e.std_error = detail::field<double>(j, "std_error");
}

inline void to_json(json& j, const BinStat& b)
{
    j = json{{"lo", round12(b.lo)},           {"hi", round12(b.hi)},
             {"mid", round12(b.mid)},         {"mean", round12(b.mean)},
             {"std_error", round12(b.std_error)}, {"count", b.count}};
}

inline void from_json(const json& j, BinStat& b)
{
    using detail::field;
    b.lo = field<double>(j, "lo");
    b.hi = field<double>(j, "hi");
    b.mid = field<double>(j, "mid");
    b.mean = field<double>(j, "mean");
    b.std_error = field<double>(j, "std_error");
    b.count = field<std::uint64_t>(j, "count");
}

inline void to_json(json& j, const SimulationReport& r)
{
    j = json{{"distribution", r.distribution},
             {"mode", r.mode},
             {"sampling", r.sampling},
             {"matching", r.matching},
             {"p", round12(r.p)},
             {"n_agents", r.n_agents},
             {"n_replications", r.n_replications},
             {"seed", r.seed},
             {"n_bins", r.n_bins},
             {"theta_low", round12(r.theta_low)},
             {"theta_high", round12(r.theta_high)},
             {"sell_price", round12(r.sell_price)},
             {"buy_price", round12(r.buy_price)},
             {"empirical_profit", r.empirical_profit},
             {"empirical_compensations", r.empirical_compensations},
             {"empirical_implied_profit", r.empirical_implied_profit},
             {"empirical_welfare", r.empirical_welfare},
             {"empirical_welfare_marketplace", r.empirical_welfare_marketplace},
             {"empirical_welfare_decentralized", r.empirical_welfare_decentralized},
             {"trades_marketplace", round12(r.trades_marketplace)},
             {"trades_decentralized", round12(r.trades_decentralized)},
             {"trades_marketplace_per_rep", r.trades_marketplace_per_rep},
             {"trades_decentralized_per_rep", r.trades_decentralized_per_rep},
             {"bin_payoffs", r.bin_payoffs},
             {"bin_search_payoffs", r.bin_search_payoffs}};
}

inline void from_json(const json& j, SimulationReport& r)
{
    using detail::field;
    r.distribution = field<std::string>(j, "distribution");
    r.mode = field<std::string>(j, "mode");
    r.sampling = field<std::string>(j, "sampling");
    r.matching = field<std::string>(j, "matching");
    r.p = field<double>(j, "p");
    r.n_agents = field<std::uint64_t>(j, "n_agents");
    r.n_replications = field<std::uint64_t>(j, "n_replications");
    r.seed = field<std::uint64_t>(j, "seed");
    r.n_bins = field<std::uint64_t>(j, "n_bins");
    r.theta_low = field<double>(j, "theta_low");
    r.theta_high = field<double>(j, "theta_high");
    r.sell_price = field<double>(j, "sell_price");
    r.buy_price = field<double>(j, "buy_price");
    r.empirical_profit = field<Estimate>(j, "empirical_profit");
    r.empirical_compensations = field<Estimate>(j, "empirical_compensations");
    r.empirical_implied_profit = field<Estimate>(j, "empirical_implied_profit");
    r.empirical_welfare = field<Estimate>(j, "empirical_welfare");
    r.empirical_welfare_marketplace = field<Estimate>(j, "empirical_welfare_marketplace");
    r.empirical_welfare_decentralized = field<Estimate>(j, "empirical_welfare_decentralized");
    r.trades_marketplace = field<double>(j, "trades_marketplace");
    r.trades_decentralized = field<double>(j, "trades_decentralized");
    r.trades_marketplace_per_rep = field<std::vector<std::uint64_t>>(j, "trades_marketplace_per_rep");
    r.trades_decentralized_per_rep = field<std::vector<std::uint64_t>>(j, "trades_decentralized_per_rep");
    r.bin_payoffs = field<std::vector<BinStat>>(j, "bin_payoffs");
    r.bin_search_payoffs = field<std::vector<BinStat>>(j, "bin_search_payoffs");
}

inline std::string bins_csv(const std::vector<BinStat>& bins)
{
    std::ostringstream os;
    os << "bin_mid,mean,stderr,count\n";
    for (const auto& b : bins) os << fmt12(b.mid) << ',' << fmt12(b.mean) << ',' << fmt12(b.std_error) << ',' << b.count << '\n';
    return os.str();
}

// {"family": ..., "params": [...], "table_path": ...}
inline ValuationDistribution distribution_from_spec(const json& j)
{
    if (!j.is_object()) throw parse_error("distribution spec must be a JSON object");
    auto family = detail::field<std::string>(j, "family");
    std::vector<double> ps;
    if (j.contains("params")) ps = detail::field<std::vector<double>>(j, "params");
    auto arg = [&](std::size_t i, double fallback) { return i < ps.size() ? ps[i] : fallback; };
    try {
        if (family == "uniform") return dist::uniform();
        if (family == "power") return dist::power(arg(0, 2.0));
        if (family == "beta") return dist::beta(arg(0, 2.0), arg(1, 2.0));
        if (family == "trunc_exp") return dist::trunc_exp(arg(0, 1.0));
        if (family == "trunc_normal") return dist::trunc_normal(arg(0, 0.5), arg(1, 0.25));
        if (family == "trunc_logistic") return dist::trunc_logistic(arg(0, 0.5), arg(1, 0.125));
        if (family == "piecewise") {
            if (ps.size() < 3 || ps.size() % 2 == 0)
                throw parse_error("piecewise params are k-1 breakpoints followed by k densities");
            std::size_t k = (ps.size() + 1) / 2;
            return dist::piecewise({ps.begin(), ps.begin() + long(k - 1)}, {ps.begin() + long(k - 1), ps.end()});
        }
        if (family == "table") return dist::load_table(detail::field<std::string>(j, "table_path"));
    } catch (const argument_error& e) {
        throw parse_error(e.what());
    }
    throw parse_error("unknown distribution family '" + family + "'");
}

inline json distribution_spec(const ValuationDistribution& d)
{
    json j{{"family", d.family()}, {"params", d.params()}};
    if (!d.table_path().empty()) j["table_path"] = d.table_path();
    return j;
}

// "uniform", "beta:2,2", "beta(2,2)", inline JSON, or @file.json
inline ValuationDistribution parse_distribution(const std::string& arg)
{
    std::string text = arg;
    if (!text.empty() && text[0] == '@') {
        std::ifstream in(text.substr(1));
        if (!in) throw parse_error("cannot open " + text.substr(1));
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw parse_error(std::string("invalid distribution JSON: ") + e.what());
        }
        return distribution_from_spec(j);
    }
    auto cut = text.find_first_of(":(");
    json j{{"family", text.substr(0, cut)}};
    if (cut != std::string::npos) {
        std::string rest = text.substr(cut + 1);
        if (!rest.empty() && rest.back() == ')') rest.pop_back();
        std::vector<double> ps;
        std::stringstream ss(rest);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                ps.push_back(std::stod(tok));
            } catch (const std::logic_error&) {
                throw parse_error("bad distribution parameter '" + tok + "'");
            }
        }
        j["params"] = ps;
    }
    return distribution_from_spec(j);
}

} // namespace agora
