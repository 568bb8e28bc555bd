#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gfrag/error.hpp"
#include "gfrag/kappa.hpp"
#include "gfrag/levy_sim.hpp"
#include "gfrag/pssmp.hpp"
#include "gfrag/stats.hpp"

namespace gfrag {

// ---------------------------------------------------------------------------
// Test functions

/// x^q
struct Power {
    double q = 0.0;
};
/// 1 on [lo, hi]
struct Indicator {
    double lo = 0.0;
    double hi = 1.0;
};
/// min(x, cap)^q
struct ClippedPower {
    double q = 1.0;
    double cap = 1.0;
};
/// Linear interpolation through (x[i], y[i]), constant outside.
struct PiecewiseLinear {
    std::vector<double> x;
    std::vector<double> y;
};

using TestFunction = std::variant<Power, Indicator, ClippedPower, PiecewiseLinear>;

namespace detail {

inline double interpolate(const PiecewiseLinear& f, double x) {
    if (x <= f.x.front()) return f.y.front();
    if (x >= f.x.back()) return f.y.back();
    const auto it = std::upper_bound(f.x.begin(), f.x.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - f.x.begin()) - 1;
    const double w = (x - f.x[i]) / (f.x[i + 1] - f.x[i]);
    return f.y[i] + w * (f.y[i + 1] - f.y[i]);
}

inline std::vector<double> parse_numbers(std::string_view text, char sep) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find(sep, pos), text.size());
        const auto item = text.substr(pos, end - pos);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size())
            fail(ErrorCode::InvalidArgument, "bad number '" + std::string(item) + "'");
        out.push_back(v);
        pos = end + 1;
    }
    return out;
}

}  // namespace detail

inline void validate_test_function(const TestFunction& f) {
    std::visit(
        [](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Power>) {
                if (!std::isfinite(g.q)) fail(ErrorCode::InvalidArgument, "power exponent must be finite");
            } else if constexpr (std::is_same_v<T, Indicator>) {
                if (!(g.lo >= 0.0 && g.hi > g.lo && std::isfinite(g.hi)))
                    fail(ErrorCode::InvalidArgument, "indicator needs 0 <= lo < hi < inf");
            } else if constexpr (std::is_same_v<T, ClippedPower>) {
                if (!(g.q >= 0.0 && g.cap > 0.0 && std::isfinite(g.cap)))
                    fail(ErrorCode::InvalidArgument, "clipped power needs q >= 0 and cap > 0");
            } else {
                if (g.x.size() < 2 || g.x.size() != g.y.size() || !std::is_sorted(g.x.begin(), g.x.end()) ||
                    std::adjacent_find(g.x.begin(), g.x.end()) != g.x.end() || g.x.front() < 0.0)
                    fail(ErrorCode::InvalidArgument, "piecewise linear needs >= 2 increasing nonnegative knots");
            }
        },
        f);
}

inline double evaluate(const TestFunction& f, double x) {
    return std::visit(
        [x](const auto& g) -> double {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Power>) return g.q == 0.0 ? 1.0 : std::pow(x, g.q);
            else if constexpr (std::is_same_v<T, Indicator>) return x >= g.lo && x <= g.hi ? 1.0 : 0.0;
            else if constexpr (std::is_same_v<T, ClippedPower>) return g.q == 0.0 ? 1.0 : std::pow(std::min(x, g.cap), g.q);
            else return detail::interpolate(g, x);
        },
        f);
}

/// f(e^v) e^(-w v), computed in log space where f is a power.
inline double weighted_at_log(const TestFunction& f, double v, double w) {
    if (const auto* p = std::get_if<Power>(&f)) return std::exp((p->q - w) * v);
    if (const auto* c = std::get_if<ClippedPower>(&f)) return std::exp(c->q * std::min(v, std::log(c->cap)) - w * v);
    const double fx = evaluate(f, std::exp(v));
    return fx == 0.0 ? 0.0 : fx * std::exp(-w * v);
}

inline bool is_bounded(const TestFunction& f) {
    if (const auto* p = std::get_if<Power>(&f)) return p->q == 0.0;
    return true;
}

/// Text form: power:q | indicator:lo:hi | clipped:q:cap | linear:x0,y0;x1,y1;...
inline TestFunction parse_test_function(std::string_view text) {
    const auto colon = text.find(':');
    const auto kind = text.substr(0, colon);
    const auto args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    TestFunction f;
    if (kind == "power") {
        const auto v = detail::parse_numbers(args, ':');
        if (v.size() != 1) fail(ErrorCode::InvalidArgument, "power takes one argument");
        f = Power{v[0]};
    } else if (kind == "indicator") {
        const auto v = detail::parse_numbers(args, ':');
        if (v.size() != 2) fail(ErrorCode::InvalidArgument, "indicator takes lo:hi");
        f = Indicator{v[0], v[1]};
    } else if (kind == "clipped") {
        const auto v = detail::parse_numbers(args, ':');
        if (v.size() != 2) fail(ErrorCode::InvalidArgument, "clipped takes q:cap");
        f = ClippedPower{v[0], v[1]};
    } else if (kind == "linear") {
        PiecewiseLinear g;
        std::size_t pos = 0;
        while (pos <= args.size()) {
            const std::size_t end = std::min(args.find(';', pos), args.size());
            const auto v = detail::parse_numbers(args.substr(pos, end - pos), ',');
            if (v.size() != 2) fail(ErrorCode::InvalidArgument, "linear knots are x,y pairs");
            g.x.push_back(v[0]);
            g.y.push_back(v[1]);
            pos = end + 1;
        }
        f = std::move(g);
    } else {
        fail(ErrorCode::InvalidArgument, "unknown test function '" + std::string(kind) + "'");
    }
    validate_test_function(f);
    return f;
}

inline std::string describe(const TestFunction& f) {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Power>) os << "power:" << g.q;
            else if constexpr (std::is_same_v<T, Indicator>) os << "indicator:" << g.lo << ':' << g.hi;
            else if constexpr (std::is_same_v<T, ClippedPower>) os << "clipped:" << g.q << ':' << g.cap;
            else {
                os << "linear:";
                for (std::size_t i = 0; i < g.x.size(); ++i) os << (i ? ";" : "") << g.x[i] << ',' << g.y[i];
            }
        },
        f);
    return os.str();
}

/// int_0^inf f(x) x^(s-1) dx for compactly supported f.
inline double mellin_integral(const TestFunction& f, double s) {
    if (const auto* ind = std::get_if<Indicator>(&f)) {
        if (s == 0.0) {
            if (ind->lo <= 0.0) fail(ErrorCode::InvalidArgument, "integral diverges at 0");
            return std::log(ind->hi / ind->lo);
        }
        if (s < 0.0 && ind->lo <= 0.0) fail(ErrorCode::InvalidArgument, "integral diverges at 0");
        return (std::pow(ind->hi, s) - std::pow(ind->lo, s)) / s;
    }
    if (const auto* pl = std::get_if<PiecewiseLinear>(&f)) {
        if (pl->y.back() != 0.0 || (pl->x.front() == 0.0 && pl->y.front() != 0.0 && s <= 0.0))
            fail(ErrorCode::InvalidArgument, "test function must have compact support");
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        double sum = 0.0;
        if (pl->y.front() != 0.0) {
            if (pl->x.front() == 0.0 || s <= 0.0) fail(ErrorCode::InvalidArgument, "test function must vanish near 0");
            sum += pl->y.front() * std::pow(pl->x.front(), s) / s;
        }
        for (std::size_t i = 0; i + 1 < pl->x.size(); ++i)
            sum += GK::integrate([&](double x) { return detail::interpolate(*pl, x) * std::pow(x, s - 1.0); }, pl->x[i],
                                 pl->x[i + 1], 10, 1e-13);
        return sum;
    }
    fail(ErrorCode::InvalidArgument, "test function must have compact support");
}

// ---------------------------------------------------------------------------
// Homogeneous case (alpha = 0)

/// <mu_t, x^q> = exp(t kappa(q)).
inline double homogeneous_mellin(const ModelParams& p, double q, double t) {
    validate_model(p);
    if (p.alpha != 0.0) fail(ErrorCode::NotHomogeneous, "homogeneous solution needs alpha = 0");
    if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "t must be nonnegative");
    if (!(q >= 0.0) || !in_domain(p, q)) fail(ErrorCode::OutsideDomain, "q outside dom kappa");
    if (t == 0.0) return 1.0;
    return std::exp(t * kappa_at(p, q));
}

/// <mu_t, f> = exp(t kappa(omega)) E[f(e^xi(t)) e^(-omega xi(t))], xi driven by
/// the omega-tilted characteristics.
inline MCEstimate spine_estimator(const ModelParams& p, double omega, const TestFunction& f, double t, std::size_t n,
                                  const RngStream& rng, unsigned threads = 0, double eps = 1e-4) {
    validate_model(p);
    validate_test_function(f);
    if (p.alpha != 0.0) fail(ErrorCode::NotHomogeneous, "spine estimator needs alpha = 0");
    if (!(omega >= 0.0) || !in_domain(p, omega)) fail(ErrorCode::OutsideDomain, "omega outside dom kappa");
    if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "t must be nonnegative");
    if (t == 0.0) return {evaluate(f, 1.0), 0.0, n, std::nullopt};
    const auto ch = levy_characteristics(p, omega, false, eps);
    auto est = monte_carlo(
        n, rng,
        [&](const RngStream& r) {
            const double xi = simulate_levy(ch, 0.0, t, t, r).values.back();
            return weighted_at_log(f, xi, omega);
        },
        threads);
    const double scale = std::exp(t * kappa_at(p, omega));
    est.mean *= scale;
    est.std_error *= scale;
    if (ch.density_jumps && ch.density_jumps->u_min > 0.0) est.bias_note = "small jumps truncated at eps";
    return est;
}

// ---------------------------------------------------------------------------
// Self-similar case, alpha < 0

namespace detail {

inline double omega_plus_for_moments(const ModelParams& p) {
    validate_model(p);
    if (!(p.alpha < 0.0)) fail(ErrorCode::WrongSign, "moment formulas need alpha < 0");
    const auto roots = malthus_roots(p);
    if (!roots.omega_plus) fail(ErrorCode::HypothesisFailed, "no Malthusian exponent omega_+");
    return *roots.omega_plus;
}

}  // namespace detail

/// <mu_t, x^(omega_+ - k alpha)> = 1 + sum_{l=1..k} t^l / l! prod_{j=k-l+1..k} kappa(omega_+ - j alpha).
inline double t2_moment(const ModelParams& p, int k, double t) {
    const double w = detail::omega_plus_for_moments(p);
    if (k < 0) fail(ErrorCode::InvalidArgument, "k must be nonnegative");
    if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "t must be nonnegative");
    double sum = 1.0, term = 1.0;
    for (int l = 1; l <= k; ++l) {
        term *= kappa_at(p, w - (k - l + 1) * p.alpha) * t / l;
        sum += term;
    }
    return sum;
}

/// <gamma_t, x^(omega_+ - k alpha)> = t^k / k! prod_{j=1..k} kappa(omega_+ - j alpha).
inline double gamma_moment(const ModelParams& p, int k, double t) {
    const double w = detail::omega_plus_for_moments(p);
    if (k < 0) fail(ErrorCode::InvalidArgument, "k must be nonnegative");
    if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "t must be nonnegative");
    double prod = 1.0;
    for (int j = 1; j <= k; ++j) prod *= kappa_at(p, w - j * p.alpha) * t / j;
    return prod;
}

struct MomentRow {
    int k = 0;
    double t = 0.0;
    double formula = 0.0;
    MCEstimate mc;
    double z = 0.0;
};

/// E_1[X_+(t)^(k|alpha|)] against t2_moment for k = 0..k_max and each t.
inline std::vector<MomentRow> verify_t2(const ModelParams& p, int k_max, std::span<const double> times, std::size_t n,
                                        double grid_step, const RngStream& rng, unsigned threads = 0) {
    const double w = detail::omega_plus_for_moments(p);
    if (k_max < 0 || times.empty()) fail(ErrorCode::InvalidArgument, "need k_max >= 0 and at least one t");
    const std::size_t nt = times.size(), width = nt * static_cast<std::size_t>(k_max + 1);
    const auto stats = replicate(
        n, width, rng,
        [&](const RngStream& r, std::span<double> out) {
            const auto path = simulate_pssmp(p, w, 1.0, times, grid_step, r);
            if (path.values.size() != nt) fail(ErrorCode::DomainTooSmall, "Levy horizon did not cover t");
            for (std::size_t i = 0; i < nt; ++i)
                for (int k = 0; k <= k_max; ++k)
                    out[i * static_cast<std::size_t>(k_max + 1) + static_cast<std::size_t>(k)] =
                        std::pow(path.values[i], -k * p.alpha);
        },
        threads);
    std::vector<MomentRow> rows;
    for (std::size_t i = 0; i < nt; ++i) {
        for (int k = 0; k <= k_max; ++k) {
            MomentRow row{k, times[i], t2_moment(p, k, times[i]),
                          MCEstimate::from(stats[i * static_cast<std::size_t>(k_max + 1) + static_cast<std::size_t>(k)]), 0.0};
            row.mc.bias_note = "time-change quadrature, grid_step " + std::to_string(grid_step);
            row.z = z_score(row.mc.mean, row.formula, row.mc.std_error);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

/// E[X_+(t)^(k|alpha|)] from x_small (entrance approximation) against gamma_moment.
inline std::vector<MomentRow> verify_entrance_moments(const ModelParams& p, int k_max, double t, double x_small,
                                                      std::size_t n, double grid_step, const RngStream& rng,
                                                      unsigned threads = 0) {
    detail::omega_plus_for_moments(p);
    const auto stats = replicate(
        n, static_cast<std::size_t>(k_max + 1), rng,
        [&](const RngStream& r, std::span<double> out) {
            const double x = entrance_sample(p, t, x_small, grid_step, r);
            for (int k = 0; k <= k_max; ++k) out[static_cast<std::size_t>(k)] = std::pow(x, -k * p.alpha);
        },
        threads);
    std::vector<MomentRow> rows;
    for (int k = 0; k <= k_max; ++k) {
        MomentRow row{k, t, k == 0 ? 1.0 : gamma_moment(p, k, t), MCEstimate::from(stats[static_cast<std::size_t>(k)]), 0.0};
        row.mc.bias_note = "entrance approximated from x_small = " + std::to_string(x_small);
        row.z = z_score(row.mc.mean, row.formula, row.mc.std_error);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct RescalingRow {
    double t = 0.0;
    MCEstimate left;  ///< E_1[f(t^(-1/|alpha|) X_+(t))]
    double gap = 0.0;
    double gap_stderr = 0.0;
};

struct RescalingReport {
    MCEstimate target;  ///< E_0[f(X_+(1))] from the entrance approximation
    double x_small = 0.0;
    std::vector<RescalingRow> rows;
    bool gap_decreasing = false;
    bool final_within_3se = false;
};

inline RescalingReport rescaling_check(const ModelParams& p, std::span<const double> times, const TestFunction& f,
                                       std::size_t n, double x_small, double grid_step, const RngStream& rng,
                                       unsigned threads = 0) {
    const double w = detail::omega_plus_for_moments(p);
    validate_test_function(f);
    if (!is_bounded(f)) fail(ErrorCode::InvalidArgument, "rescaling check needs a bounded f");
    if (times.empty()) fail(ErrorCode::InvalidArgument, "need at least one t");
    RescalingReport rep;
    rep.x_small = x_small;
    rep.target = monte_carlo(
        n, rng.substream(0), [&](const RngStream& r) { return evaluate(f, entrance_sample(p, 1.0, x_small, grid_step, r)); },
        threads);
    rep.target.bias_note = "entrance approximated from x_small = " + std::to_string(x_small);
    const double inv = 1.0 / std::abs(p.alpha);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        RescalingRow row;
        row.t = t;
        row.left = monte_carlo(
            n, rng.substream(i + 1),
            [&](const RngStream& r) {
                return evaluate(f, std::pow(t, -inv) * pssmp_value_at(p, w, 1.0, t, grid_step, r));
            },
            threads);
        row.gap = row.left.mean - rep.target.mean;
        row.gap_stderr = combined_stderr(row.left.std_error, rep.target.std_error);
        rep.rows.push_back(std::move(row));
    }
    rep.gap_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(std::abs(rep.rows[i].gap) < std::abs(rep.rows[i - 1].gap))) rep.gap_decreasing = false;
    rep.final_within_3se = std::abs(rep.rows.back().gap) <= 3.0 * rep.rows.back().gap_stderr;
    return rep;
}

// ---------------------------------------------------------------------------
// Large deviations and local CLT (alpha = 0)

struct TailEstimate {
    MCEstimate estimate;  ///< of t^-1 ln mu_t((e^(tr), inf))
    double target = 0.0;  ///< -kappa*(r)
    double theta = 0.0;
    double omega = 0.0;  ///< tilt used by the sampler
    double hit_fraction = 0.0;
};

/// Importance-sampled tail: mu_t((e^(tr), inf)) = e^(t kappa(w)) E[1{xi_w(t) > tr} e^(-w xi_w(t))]
/// with w = theta(r), under which xi_w(t)/t has mean r.
inline TailEstimate tail_estimate(const ModelParams& p, double r, double t, std::size_t n, const RngStream& rng,
                                  unsigned threads = 0) {
    validate_model(p);
    if (p.alpha != 0.0) fail(ErrorCode::NotHomogeneous, "tail estimate needs alpha = 0");
    if (!(t > 0.0)) fail(ErrorCode::InvalidArgument, "t must be positive");
    const auto lf = legendre(p, r);
    TailEstimate out;
    out.theta = lf.theta;
    out.omega = lf.theta;
    out.target = -lf.kappa_star;
    const auto ch = levy_characteristics(p, out.omega, false);
    const double level = t * r;
    const auto stats = replicate(
        n, 2, rng,
        [&](const RngStream& s, std::span<double> o) {
            const double xi = simulate_levy(ch, 0.0, t, t, s).values.back();
            if (xi > level) {
                o[0] = std::exp(-out.omega * (xi - level));
                o[1] = 1.0;
            }
        },
        threads);
    const double m = stats[0].mean();
    if (!(m > 0.0)) fail(ErrorCode::DomainTooSmall, "no sample reached the tail");
    // ln of the weight mean plus the factored-out e^(-w t r)
    out.estimate.mean = kappa_at(p, out.omega) + (std::log(m) - out.omega * level) / t;
    out.estimate.std_error = stats[0].stderr_of_mean() / (m * t);
    out.estimate.n = n;
    out.estimate.bias_note = "finite-t value; the limit holds as t -> inf";
    out.hit_fraction = stats[1].mean();
    return out;
}

struct CltCheck {
    MCEstimate spine;
    double asymptotic = 0.0;
    double relative_error = 0.0;
    CltProfile profile;
};

/// <mu_t, f> against e^(t kappa(theta0)) / sqrt(2 pi t kappa''(theta0)) int f(x) x^(theta0-1) dx.
inline CltCheck clt_check(const ModelParams& p, const TestFunction& f, double t, std::size_t n, const RngStream& rng,
                          unsigned threads = 0) {
    CltCheck out;
    out.profile = clt_profile(p);
    const auto& pr = out.profile;
    out.asymptotic = std::exp(t * pr.kappa_at_theta0) / std::sqrt(2.0 * std::numbers::pi * t * pr.kappa_pp) *
                     mellin_integral(f, pr.theta0);
    out.spine = spine_estimator(p, pr.theta0, f, t, n, rng, threads);
    out.relative_error = std::abs(out.spine.mean - out.asymptotic) / out.asymptotic;
    return out;
}

}  // namespace gfrag
