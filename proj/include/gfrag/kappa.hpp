#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gfrag/error.hpp"
#include "gfrag/ext_real.hpp"
#include "gfrag/model.hpp"
#include "gfrag/roots.hpp"

namespace gfrag {

/// kappa(q) with its first two derivatives; derivatives are absent where the
/// value is +inf.
struct CumulantReport {
    double q = 0.0;
    ExtReal value;
    std::optional<double> first_derivative;
    std::optional<double> second_derivative;
};

namespace detail {

struct Triple {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
};

/// Contribution of C (1-y)^(-beta) dy to kappa, kappa', kappa'' at q (u = 1 - y):
///   C int_0^{1/2} g_m(u) u^(-beta) du  +  C int_0^{1/2} u^(q-beta) ln^m(u) du
/// with g_0 = (1-u)^q - 1 + q u, g_1 = (1-u)^q ln(1-u) + u, g_2 = (1-u)^q ln^2(1-u).
/// Each g_m is O(u^2) at 0: on [0, delta] its Taylor series is integrated term
/// by term, on [delta, 1/2] adaptive Gauss-Kronrod takes over. The second
/// integral is elementary. Caller guarantees q - beta + 1 > 0.
inline Triple density_terms(double C, double beta, double q) {
    constexpr int n_terms = 48;
    constexpr double half = 0.5;
    const double delta = std::min(0.05, 0.25 / std::max(q, 1.0));

    // Taylor coefficients in u of (1-u)^q, ln(1-u) and ln^2(1-u).
    std::array<double, n_terms + 1> pow_c{}, log_c{}, log2_c{};
    pow_c[0] = 1.0;
    for (int n = 1; n <= n_terms; ++n) pow_c[n] = pow_c[n - 1] * (-(q - (n - 1)) / n);
    for (int k = 1; k <= n_terms; ++k) log_c[k] = -1.0 / k;
    for (int n = 2; n <= n_terms; ++n)
        for (int k = 1; k < n; ++k) log2_c[n] += log_c[k] * log_c[n - k];

    Triple near;
    for (int n = 2; n <= n_terms; ++n) {
        double c1 = 0.0, c2 = 0.0;
        for (int k = 1; k <= n; ++k) c1 += log_c[k] * pow_c[n - k];
        for (int k = 2; k <= n; ++k) c2 += log2_c[k] * pow_c[n - k];
        const double e = n + 1.0 - beta;
        const double w = std::pow(delta, e) / e;
        near.v += pow_c[n] * w;
        near.d1 += c1 * w;
        near.d2 += c2 * w;
    }

    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    constexpr unsigned depth = 15;
    constexpr double tol = 1e-13;
    auto weight = [beta](double u) { return std::pow(u, -beta); };
    const double far_v = GK::integrate(
        [&](double u) { return (std::expm1(q * std::log1p(-u)) + q * u) * weight(u); }, delta, half, depth, tol);
    const double far_d1 = GK::integrate(
        [&](double u) {
            const double l = std::log1p(-u);
            return (std::exp(q * l) * l + u) * weight(u);
        },
        delta, half, depth, tol);
    const double far_d2 = GK::integrate(
        [&](double u) {
            const double l = std::log1p(-u);
            return std::exp(q * l) * l * l * weight(u);
        },
        delta, half, depth, tol);

    const double s = q - beta + 1.0;
    const double l = std::log(half);
    const double hs = std::pow(half, s);
    const double p0 = hs / s;
    const double p1 = hs * (l / s - 1.0 / (s * s));
    const double p2 = hs * (l * l / s - 2.0 * l / (s * s) + 2.0 / (s * s * s));

    return {C * (near.v + far_v + p0), C * (near.d1 + far_d1 + p1), C * (near.d2 + far_d2 + p2)};
}

}  // namespace detail

/// Left end of dom kappa: 0 (closed) unless the density diverges there, in
/// which case dom kappa = (beta - 1, inf).
struct DomainBound {
    double lower = 0.0;
    bool closed = true;
};

inline DomainBound domain_bound(const ModelParams& p) {
    if (p.K.has_density() && p.K.density->beta >= 1.0) return {p.K.density->beta - 1.0, false};
    return {0.0, true};
}

inline bool in_domain(const ModelParams& p, double q) {
    const auto d = domain_bound(p);
    return q >= 0.0 && (d.closed ? q >= d.lower : q > d.lower);
}

inline CumulantReport kappa(const ModelParams& p, double q) {
    if (!(q >= 0.0)) fail(ErrorCode::NegativeOrder, "kappa needs q >= 0");
    CumulantReport r;
    r.q = q;
    if (!in_domain(p, q)) {
        r.value = ExtReal::infinity();
        return r;
    }
    double v = p.a * q * q + (p.b - p.a) * q;
    double d1 = 2.0 * p.a * q + (p.b - p.a);
    double d2 = 2.0 * p.a;
    for (const auto& atom : p.K.atoms) {
        const double ly = std::log(atom.y), lu = std::log1p(-atom.y);
        const double yq = std::exp(q * ly), uq = std::exp(q * lu);
        const double u = 1.0 - atom.y;
        v += atom.w * (yq + uq - 1.0 + q * u);
        d1 += atom.w * (yq * ly + uq * lu + u);
        d2 += atom.w * (yq * ly * ly + uq * lu * lu);
    }
    if (p.K.has_density()) {
        const auto t = detail::density_terms(p.K.density->C, p.K.density->beta, q);
        v += t.v;
        d1 += t.d1;
        d2 += t.d2;
    }
    r.value = v;
    r.first_derivative = d1;
    r.second_derivative = d2;
    return r;
}

/// IEEE shorthands used by the solvers (+inf outside the domain).
inline double kappa_at(const ModelParams& p, double q) { return kappa(p, q).value.to_double(); }
inline double kappa_d1(const ModelParams& p, double q) {
    auto r = kappa(p, q);
    return r.first_derivative.value_or(-std::numeric_limits<double>::infinity());
}
inline double kappa_d2(const ModelParams& p, double q) {
    auto r = kappa(p, q);
    return r.second_derivative.value_or(std::numeric_limits<double>::infinity());
}

/// d = b + int (1-y)K when a = 0 and that integral is finite; +inf otherwise.
inline ExtReal drift_d(const ModelParams& p) {
    const ExtReal m1 = p.K.first_moment();
    if (p.a != 0.0 || m1.is_infinite()) return ExtReal::infinity();
    return p.b + m1.value();
}

struct MalthusRoots {
    std::optional<double> omega_minus;
    std::optional<double> omega_plus;
    double inf_value = 0.0;
    double argmin = 0.0;
    bool degenerate_root = false;
};

namespace detail {

/// A point of dom kappa strictly inside (lower, hi) where `pred` holds,
/// approached geometrically towards the open left end.
template <class Pred>
double approach_left_end(double lower, double hi, Pred&& pred) {
    for (int j = 1; j < 200; ++j) {
        const double x = lower + (hi - lower) * std::ldexp(1.0, -j);
        if (x <= lower) break;
        if (pred(x)) return x;
    }
    fail(ErrorCode::DomainTooSmall, "could not bracket near the left end of dom kappa");
}

/// First point lo + step * 2^j where `pred` holds.
template <class Pred>
double search_right(double lo, Pred&& pred, double max_q = 1e9) {
    for (double step = 1.0; lo + step <= max_q; step *= 2.0)
        if (pred(lo + step)) return lo + step;
    fail(ErrorCode::DomainTooSmall, "no bracket found up to q = 1e9");
}

inline double find_argmin(const ModelParams& p) {
    const auto dom = domain_bound(p);
    if (dom.closed && kappa_d1(p, dom.lower) >= 0.0) return dom.lower;
    const double hi = search_right(dom.lower, [&](double q) { return kappa_d1(p, q) > 0.0; });
    const double lo =
        dom.closed ? dom.lower : approach_left_end(dom.lower, hi, [&](double q) { return kappa_d1(p, q) < 0.0; });
    return roots::bisect_newton([&](double q) { return kappa_d1(p, q); }, [&](double q) { return kappa_d2(p, q); },
                                lo, hi);
}

}  // namespace detail

/// Roots of kappa and its infimum over [0, inf).
inline MalthusRoots malthus_roots(const ModelParams& p) {
    validate_model(p);
    MalthusRoots out;
    out.argmin = detail::find_argmin(p);
    out.inf_value = kappa_at(p, out.argmin);

    constexpr double tie_tol = 1e-12;
    if (std::abs(out.inf_value) <= tie_tol) {
        out.omega_minus = out.omega_plus = out.argmin;
        out.degenerate_root = true;
        return out;
    }
    if (out.inf_value > 0.0) return out;

    auto f = [&](double q) { return kappa_at(p, q); };
    auto df = [&](double q) { return kappa_d1(p, q); };

    const double hi = detail::search_right(out.argmin, [&](double q) { return f(q) > 0.0; });
    out.omega_plus = roots::bisect_newton(f, df, out.argmin, hi);

    const auto dom = domain_bound(p);
    if (dom.closed) {
        const double k0 = f(dom.lower);
        if (k0 == 0.0) out.omega_minus = dom.lower;
        else if (k0 > 0.0) out.omega_minus = roots::bisect_newton(f, df, dom.lower, out.argmin);
    } else {
        const double lo = detail::approach_left_end(dom.lower, out.argmin, [&](double q) { return f(q) > 0.0; });
        out.omega_minus = roots::bisect_newton(f, df, lo, out.argmin);
    }
    return out;
}

struct LegendreResult {
    double theta = 0.0;
    double kappa_star = 0.0;
};

/// theta(r) solving kappa'(theta) = r and kappa*(r) = r theta - kappa(theta).
inline LegendreResult legendre(const ModelParams& p, double r) {
    validate_model(p);
    const auto dom = domain_bound(p);
    const double slope_lo = dom.closed ? kappa_d1(p, dom.lower) : -std::numeric_limits<double>::infinity();
    const ExtReal slope_hi = drift_d(p);  // sup kappa' = d, not attained, when finite
    if (r < slope_lo || (slope_hi.is_finite() && r >= slope_hi.value()))
        fail(ErrorCode::SlopeUnattainable, "kappa'(q) = r has no solution in dom kappa");

    double theta;
    if (r == slope_lo) {
        theta = dom.lower;
    } else {
        auto g = [&](double q) { return kappa_d1(p, q) - r; };
        const double hi = detail::search_right(dom.lower, [&](double q) { return g(q) > 0.0; }, 1e12);
        const double lo =
            dom.closed ? dom.lower : detail::approach_left_end(dom.lower, hi, [&](double q) { return g(q) < 0.0; });
        theta = roots::bisect_newton(g, [&](double q) { return kappa_d2(p, q); }, lo, hi);
    }
    return {theta, r * theta - kappa_at(p, theta)};
}

struct CltProfile {
    double theta0 = 0.0;
    double kappa_at_theta0 = 0.0;
    double kappa_pp = 0.0;
};

/// Location and curvature of the minimum of kappa for the local limit
/// asymptotics; requires unbounded kappa' (a > 0 or int (1-y)K = inf) and a
/// negative slope somewhere.
inline CltProfile clt_profile(const ModelParams& p) {
    validate_model(p);
    if (p.a == 0.0 && p.K.first_moment().is_finite())
        fail(ErrorCode::HypothesisFailed, "needs a > 0 or int (1-y) K(dy) = inf");
    const auto dom = domain_bound(p);
    if (dom.closed && kappa_d1(p, dom.lower) >= 0.0)
        fail(ErrorCode::HypothesisFailed, "kappa' never takes negative values");
    const auto leg = legendre(p, 0.0);
    return {leg.theta, kappa_at(p, leg.theta), kappa_d2(p, leg.theta)};
}

}  // namespace gfrag
