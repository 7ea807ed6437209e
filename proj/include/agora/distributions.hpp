#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "errors.hpp"
#include "numerics.hpp"

namespace agora {

inline constexpr double endpoint_guard = 1e-6;
inline constexpr double density_floor = 1e-12;
// partial moments feed finite-difference checks, so they get a tighter budget than quad_tol
inline constexpr double moment_tol = 1e-12;

class ValuationDistribution {
public:
    struct Model {
        virtual ~Model() = default;
        // only called with x strictly inside the support / u strictly inside (0,1)
        virtual double cdf(double x) const = 0;
        virtual double pdf(double x) const = 0;
        virtual double quantile(double u) const = 0;
        virtual std::vector<double> knots() const { return {}; }
    };

    ValuationDistribution(std::string family, std::vector<double> params,
                          std::shared_ptr<const Model> model, double lo = 0.0, double hi = 1.0)
        : family_(std::move(family)), params_(std::move(params)), model_(std::move(model)),
          lo_(lo), hi_(hi)
    {
    }

    double cdf(double x) const
    {
        if (x <= lo_) return 0.0;
        if (x >= hi_) return 1.0;
        return std::clamp(model_->cdf(x), 0.0, 1.0);
    }
    double pdf(double x) const
    {
        if (x < lo_ || x > hi_) return 0.0;
        return model_->pdf(x);
    }
    double quantile(double u) const
    {
        if (u <= 0.0) return lo_;
        if (u >= 1.0) return hi_;
        return std::clamp(model_->quantile(u), lo_, hi_);
    }
    double median() const { return quantile(0.5); }

    double lower() const { return lo_; }
    double upper() const { return hi_; }
    const std::string& family() const { return family_; }
    const std::vector<double>& params() const { return params_; }
    const std::string& table_path() const { return table_path_; }
    void set_table_path(std::string p) { table_path_ = std::move(p); }

    std::vector<double> knots() const
    {
        std::vector<double> k;
        for (double x : model_->knots())
            if (x > lo_ && x < hi_) k.push_back(x);
        return k;
    }

    std::string name() const
    {
        if (params_.empty() || family_ == "table" || family_ == "uniform") return family_;
        std::string s = family_ + "(";
        char buf[32];
        for (std::size_t i = 0; i < params_.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%g", params_[i]);
            s += (i ? "," : "") + std::string(buf);
        }
        return s + ")";
    }

private:
    std::string family_;
    std::vector<double> params_;
    std::shared_ptr<const Model> model_;
    double lo_, hi_;
    std::string table_path_;
};

namespace dist {

namespace detail {

struct Uniform : ValuationDistribution::Model {
    double cdf(double x) const override { return x; }
    double pdf(double) const override { return 1.0; }
    double quantile(double u) const override { return u; }
};

struct Power : ValuationDistribution::Model {
    double k;
    explicit Power(double k_) : k(k_) {}
    double cdf(double x) const override { return std::pow(x, k); }
    double pdf(double x) const override { return k * std::pow(x, k - 1.0); }
    double quantile(double u) const override { return std::pow(u, 1.0 / k); }
};

struct Beta : ValuationDistribution::Model {
    boost::math::beta_distribution<double> d;
    Beta(double a, double b) : d(a, b) {}
    double cdf(double x) const override { return boost::math::cdf(d, x); }
    double pdf(double x) const override { return boost::math::pdf(d, x); }
    double quantile(double u) const override { return boost::math::quantile(d, u); }
};

// exponential with rate r cut to [0,1]; r < 0 gives an increasing density
struct TruncExp : ValuationDistribution::Model {
    double r, norm;
    explicit TruncExp(double r_) : r(r_), norm(std::expm1(-r_)) {}
    double cdf(double x) const override { return std::expm1(-r * x) / norm; }
    double pdf(double x) const override { return -r * std::exp(-r * x) / norm; }
    double quantile(double u) const override { return -std::log1p(u * norm) / r; }
};

struct TruncNormal : ValuationDistribution::Model {
    boost::math::normal_distribution<double> d;
    double c0, mass;
    TruncNormal(double mu, double sigma) : d(mu, sigma)
    {
        c0 = boost::math::cdf(d, 0.0);
        mass = boost::math::cdf(d, 1.0) - c0;
    }
    double cdf(double x) const override { return (boost::math::cdf(d, x) - c0) / mass; }
    double pdf(double x) const override { return boost::math::pdf(d, x) / mass; }
    double quantile(double u) const override { return boost::math::quantile(d, c0 + u * mass); }
};

struct TruncLogistic : ValuationDistribution::Model {
    double mu, s, c0, mass;
    TruncLogistic(double mu_, double s_) : mu(mu_), s(s_)
    {
        c0 = raw(0.0);
        mass = raw(1.0) - c0;
    }
    double raw(double x) const { return 1.0 / (1.0 + std::exp(-(x - mu) / s)); }
    double cdf(double x) const override { return (raw(x) - c0) / mass; }
    double pdf(double x) const override
    {
        double e = std::exp(-std::abs(x - mu) / s);
        return e / (s * (1.0 + e) * (1.0 + e)) / mass;
    }
    double quantile(double u) const override
    {
        double v = c0 + u * mass;
        return mu + s * std::log(v / (1.0 - v));
    }
};

// step density: cell i spans [edges[i], edges[i+1]]
struct Piecewise : ValuationDistribution::Model {
    std::vector<double> edges, dens, cum;
    Piecewise(std::vector<double> e, std::vector<double> d) : edges(std::move(e)), dens(std::move(d))
    {
        cum.assign(edges.size(), 0.0);
        for (std::size_t i = 0; i < dens.size(); ++i)
            cum[i + 1] = cum[i] + dens[i] * (edges[i + 1] - edges[i]);
    }
    std::size_t cell(double x) const
    {
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        std::size_t i = std::size_t(it - edges.begin());
        return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, dens.size() - 1);
    }
    double cdf(double x) const override
    {
        std::size_t i = cell(x);
        return cum[i] + dens[i] * (x - edges[i]);
    }
    double pdf(double x) const override { return dens[cell(x)]; }
    double quantile(double u) const override
    {
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        std::size_t i = std::clamp<std::size_t>(std::size_t(it - cum.begin()), 1, dens.size()) - 1;
        return edges[i] + (u - cum[i]) / dens[i];
    }
    std::vector<double> knots() const override { return {edges.begin() + 1, edges.end() - 1}; }
};

struct Table : ValuationDistribution::Model {
    std::vector<double> xs, ys;
    boost::math::interpolators::pchip<std::vector<double>> spline;
    Table(std::vector<double> x, std::vector<double> y)
        : xs(x), ys(y), spline(std::move(x), std::move(y))
    {
    }
    double cdf(double x) const override { return spline(x); }
    double pdf(double x) const override { return std::max(0.0, spline.prime(x)); }
    double quantile(double u) const override
    {
        auto it = std::upper_bound(ys.begin(), ys.end(), u);
        std::size_t i = std::clamp<std::size_t>(std::size_t(it - ys.begin()), 1, ys.size() - 1);
        double a = xs[i - 1], b = xs[i];
        if (u <= ys[i - 1]) return a;
        return num::find_root([&](double x) { return spline(x) - u; }, a, b, 1e-15);
    }
    std::vector<double> knots() const override { return {xs.begin() + 1, xs.end() - 1}; }
};

struct Truncated : ValuationDistribution::Model {
    ValuationDistribution base;
    double fa, mass;
    Truncated(ValuationDistribution b, double a, double hi) : base(std::move(b))
    {
        fa = base.cdf(a);
        mass = base.cdf(hi) - fa;
    }
    double cdf(double x) const override { return (base.cdf(x) - fa) / mass; }
    double pdf(double x) const override { return base.pdf(x) / mass; }
    double quantile(double u) const override { return base.quantile(fa + u * mass); }
    std::vector<double> knots() const override { return base.knots(); }
};

inline void require(bool ok, const std::string& msg)
{
    if (!ok) throw argument_error(msg);
}

} // namespace detail

inline ValuationDistribution uniform()
{
    return {"uniform", {}, std::make_shared<detail::Uniform>()};
}

// F(x) = x^k
inline ValuationDistribution power(double k)
{
    detail::require(std::isfinite(k) && k >= 1.0, "power family needs k >= 1");
    return {"power", {k}, std::make_shared<detail::Power>(k)};
}

inline ValuationDistribution beta(double a, double b)
{
    detail::require(std::isfinite(a) && std::isfinite(b) && a >= 1.0 && b >= 1.0,
                    "beta family needs both shapes >= 1");
    return {"beta", {a, b}, std::make_shared<detail::Beta>(a, b)};
}

inline ValuationDistribution trunc_exp(double rate = 1.0)
{
    detail::require(std::isfinite(rate) && rate != 0.0, "trunc_exp needs a nonzero rate");
    return {"trunc_exp", {rate}, std::make_shared<detail::TruncExp>(rate)};
}

inline ValuationDistribution trunc_normal(double mu = 0.5, double sigma = 0.25)
{
    detail::require(std::isfinite(mu) && std::isfinite(sigma) && sigma > 0.0,
                    "trunc_normal needs sigma > 0");
    return {"trunc_normal", {mu, sigma}, std::make_shared<detail::TruncNormal>(mu, sigma)};
}

inline ValuationDistribution trunc_logistic(double mu = 0.5, double scale = 0.125)
{
    detail::require(std::isfinite(mu) && std::isfinite(scale) && scale > 0.0,
                    "trunc_logistic needs scale > 0");
    return {"trunc_logistic", {mu, scale}, std::make_shared<detail::TruncLogistic>(mu, scale)};
}

// interior breakpoints plus one density per cell; densities are rescaled to unit mass
inline ValuationDistribution piecewise(std::vector<double> breaks, std::vector<double> dens)
{
    detail::require(dens.size() == breaks.size() + 1, "piecewise needs one more density than breakpoints");
    std::vector<double> edges{0.0};
    for (double b : breaks) {
        detail::require(b > edges.back() && b < 1.0, "piecewise breakpoints must increase inside (0,1)");
        edges.push_back(b);
    }
    edges.push_back(1.0);
    double mass = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) {
        detail::require(std::isfinite(dens[i]) && dens[i] > 0.0, "piecewise densities must be positive");
        mass += dens[i] * (edges[i + 1] - edges[i]);
    }
    for (double& d : dens) d /= mass;
    std::vector<double> params = breaks;
    params.insert(params.end(), dens.begin(), dens.end());
    return {"piecewise", params, std::make_shared<detail::Piecewise>(edges, dens)};
}

inline ValuationDistribution tabulated(std::vector<double> theta, std::vector<double> cdf)
{
    if (theta.size() != cdf.size() || theta.size() < 4)
        throw parse_error("table needs at least 4 (theta,cdf) rows");
    for (std::size_t i = 1; i < theta.size(); ++i)
        if (!(theta[i] > theta[i - 1]) || !(cdf[i] > cdf[i - 1]))
            throw parse_error("table must be strictly increasing in both columns");
    if (std::abs(theta.front()) > 1e-12 || std::abs(theta.back() - 1.0) > 1e-12 ||
        std::abs(cdf.front()) > 1e-12 || std::abs(cdf.back() - 1.0) > 1e-12)
        throw parse_error("table must run from (0,0) to (1,1)");
    theta.front() = cdf.front() = 0.0;
    theta.back() = cdf.back() = 1.0;
    return {"table", {}, std::make_shared<detail::Table>(std::move(theta), std::move(cdf))};
}

inline ValuationDistribution load_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open table " + path);
    std::string line;
    auto trim = [](std::string s) {
        auto ws = [](unsigned char c) { return std::isspace(c); };
        s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
        s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
        return s;
    };
    if (!std::getline(in, line)) throw parse_error("empty table " + path);
    std::string head = trim(line);
    head.erase(std::remove(head.begin(), head.end(), ' '), head.end());
    if (head != "theta,cdf") throw parse_error("table header must be theta,cdf");
    std::vector<double> xs, ys;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw parse_error("row " + std::to_string(row) + ": missing comma");
        try {
            std::size_t used = 0;
            std::string a = trim(line.substr(0, comma)), b = trim(line.substr(comma + 1));
            xs.push_back(std::stod(a, &used));
            if (used != a.size()) throw std::invalid_argument(a);
            ys.push_back(std::stod(b, &used));
            if (used != b.size()) throw std::invalid_argument(b);
        } catch (const std::logic_error&) {
            throw parse_error("row " + std::to_string(row) + ": not a number");
        }
    }
    auto d = tabulated(std::move(xs), std::move(ys));
    d.set_table_path(path);
    return d;
}

} // namespace dist

// G(x) = (F(x) - F(a)) / (F(b) - F(a)) on [a,b]
inline ValuationDistribution truncate(const ValuationDistribution& d, double a, double b)
{
    if (!(a >= d.lower() && a < b && b <= d.upper()))
        throw argument_error("truncate needs lower <= a < b <= upper");
    if (!(d.cdf(b) > d.cdf(a))) throw empty_segment_error("truncation interval has zero mass");
    std::vector<double> params{a, b};
    return {"truncated:" + d.name(), params, std::make_shared<dist::detail::Truncated>(d, a, b), a, b};
}

namespace detail {

inline double guarded(const ValuationDistribution& d, double x, const char* what)
{
    if (!(x >= d.lower() && x <= d.upper()))
        throw argument_error(std::string(what) + ": type outside the support");
    return std::clamp(x, d.lower() + endpoint_guard, d.upper() - endpoint_guard);
}

inline double density_at(const ValuationDistribution& d, double x)
{
    double f = d.pdf(x);
    if (!(f >= density_floor)) throw degenerate_density_error("density vanishes at " + std::to_string(x));
    return f;
}

} // namespace detail

inline double virtual_value(const ValuationDistribution& d, double x)
{
    x = detail::guarded(d, x, "virtual_value");
    return x - (1.0 - d.cdf(x)) / detail::density_at(d, x);
}

inline double virtual_cost(const ValuationDistribution& d, double x)
{
    x = detail::guarded(d, x, "virtual_cost");
    return x + d.cdf(x) / detail::density_at(d, x);
}

enum class Transform { value, cost };

struct RegularityViolation {
    double theta;
    Transform which;
};

struct RegularityReport {
    bool is_regular = true;
    std::vector<RegularityViolation> violation_points;
    int grid_size = 0;
};

inline RegularityReport check_regularity(const ValuationDistribution& d, int grid_n = 1000)
{
    if (grid_n < 100) throw argument_error("regularity grid needs at least 100 points");
    RegularityReport rep;
    rep.grid_size = grid_n;
    auto grid = num::linspace(d.lower() + endpoint_guard, d.upper() - endpoint_guard, std::size_t(grid_n));
    std::vector<double> v(grid.size()), c(grid.size());
    std::vector<bool> ok(grid.size(), true);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double f = d.pdf(grid[i]);
        if (!(f >= density_floor)) {
            ok[i] = false;
            rep.violation_points.push_back({grid[i], Transform::value});
            rep.violation_points.push_back({grid[i], Transform::cost});
            continue;
        }
        double F = d.cdf(grid[i]);
        v[i] = grid[i] - (1.0 - F) / f;
        c[i] = grid[i] + F / f;
    }
    auto drops = [](double prev, double next) { return next < prev - 1e-12 * (1.0 + std::abs(prev)); };
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!ok[i] || !ok[i - 1]) continue;
        if (drops(v[i - 1], v[i])) rep.violation_points.push_back({grid[i], Transform::value});
        if (drops(c[i - 1], c[i])) rep.violation_points.push_back({grid[i], Transform::cost});
    }
    rep.is_regular = rep.violation_points.empty();
    return rep;
}

// ∫_a^b x f(x) dx
inline double partial_moment(const ValuationDistribution& d, double a, double b)
{
    a = std::max(a, d.lower());
    b = std::min(b, d.upper());
    if (b <= a) return 0.0;
    return num::simpson_pieces([&](double x) { return x * d.pdf(x); }, a, b, d.knots(), moment_tol);
}

inline double conditional_mean(const ValuationDistribution& d, double a, double b)
{
    if (!(a >= d.lower() && a < b && b <= d.upper()))
        throw argument_error("conditional_mean needs lower <= a < b <= upper");
    double mass = d.cdf(b) - d.cdf(a);
    if (!(mass > 0.0)) throw empty_segment_error("conditional_mean over a zero-mass segment");
    return partial_moment(d, a, b) / mass;
}

} // namespace agora
