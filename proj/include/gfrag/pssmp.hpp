#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gfrag/error.hpp"
#include "gfrag/kappa.hpp"
#include "gfrag/levy.hpp"
#include "gfrag/levy_sim.hpp"
#include "gfrag/rng.hpp"

namespace gfrag {

enum class AbsorbedState { zero, infinity };

constexpr std::string_view to_string(AbsorbedState s) noexcept { return s == AbsorbedState::zero ? "zero" : "infinity"; }

struct Absorption {
    double time = 0.0;
    AbsorbedState state = AbsorbedState::zero;
};

/// Positive self-similar Markov process sampled on a time grid. After
/// absorption the recorded values are 0 or +inf. The driving Levy path and
/// its clock A (at the driver's sample times) are kept for path functionals.
struct PssmpPath {
    std::vector<double> times;
    std::vector<double> values;
    std::optional<Absorption> absorbed;
    bool horizon_exhausted = false;
    double alpha = 0.0;
    LevyPath driver;
    std::vector<double> clock;
};

namespace detail {

/// expm1(z)/z, continuous at 0.
inline double exprel(double z) noexcept { return std::abs(z) < 1e-8 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

/// log1p(x)/x, continuous at 0.
inline double log1prel(double x) noexcept { return std::abs(x) < 1e-8 ? 1.0 - 0.5 * x : std::log1p(x) / x; }

/// int over panel i of exp(c xi), xi linear between xi(t_i) and xi(t_{i+1}-).
inline double panel_integral(const LevyPath& p, std::size_t i, double c) {
    const double h = p.times[i + 1] - p.times[i];
    const double a = c * p.values[i];
    const double b = c * p.left_limit(i + 1);
    return h * std::exp(a) * exprel(b - a);
}

/// Extends `clock` (A at the driver's sample times) to cover all of `path`.
inline void extend_clock(const LevyPath& path, double alpha, std::vector<double>& clock) {
    if (clock.empty()) clock.push_back(0.0);
    clock.reserve(path.size());
    for (std::size_t i = clock.size() - 1; i + 1 < path.size(); ++i)
        clock.push_back(clock[i] + (alpha == 0.0 ? path.times[i + 1] - path.times[i] : panel_integral(path, i, -alpha)));
}

/// Levy time S(t) and xi(S(t)) inside panel i, where clock[i] <= t <= clock[i+1].
inline std::pair<double, double> invert_in_panel(const LevyPath& p, const std::vector<double>& clock, std::size_t i,
                                                 double t, double alpha) {
    const double h = p.times[i + 1] - p.times[i];
    const double xi0 = p.values[i], xi1 = p.left_limit(i + 1);
    double v;
    if (alpha == 0.0) {
        v = t - clock[i];
    } else {
        const double a = -alpha * xi0, z = -alpha * (xi1 - xi0);
        const double w = (t - clock[i]) * std::exp(-a);
        v = w * log1prel(z * w / h);
    }
    v = std::clamp(v, 0.0, h);
    return {p.times[i] + v, xi0 + (xi1 - xi0) * (v / h)};
}

inline AbsorbedState kill_state(double alpha) noexcept { return alpha > 0.0 ? AbsorbedState::infinity : AbsorbedState::zero; }

inline PssmpPath lamperti_impl(LevyPath levy, std::vector<double> clock, double alpha, std::span<const double> t_grid,
                               std::optional<Absorption> end_state) {
    PssmpPath out;
    out.alpha = alpha;
    extend_clock(levy, alpha, clock);
    const double a_end = clock.back();
    if (!end_state && levy.kill_time) end_state = Absorption{a_end, kill_state(alpha)};
    out.absorbed = end_state;

    std::size_t i = 0;
    for (const double t : t_grid) {
        if (end_state && t >= end_state->time) {
            out.times.push_back(t);
            out.values.push_back(end_state->state == AbsorbedState::zero ? 0.0
                                                                         : std::numeric_limits<double>::infinity());
            continue;
        }
        if (t > a_end) {
            out.horizon_exhausted = true;
            break;
        }
        while (i + 2 < clock.size() && clock[i + 1] < t) ++i;
        const auto [s, xi] = invert_in_panel(levy, clock, i, t, alpha);
        (void)s;
        out.times.push_back(t);
        out.values.push_back(std::exp(xi));
    }
    out.driver = std::move(levy);
    out.clock = std::move(clock);
    return out;
}

}  // namespace detail

/// Lamperti time change of `levy` with index -alpha: X(t) = exp(xi(S(t))),
/// S the inverse of A(s) = int_0^s exp(-alpha xi(u)) du. A is integrated
/// exactly for the piecewise-linear interpolation of xi between sample
/// times, with left limits at jump instants.
inline PssmpPath lamperti_forward(const LevyPath& levy, double alpha, std::span<const double> t_grid) {
    if (!std::is_sorted(t_grid.begin(), t_grid.end())) fail(ErrorCode::InvalidArgument, "t_grid must be increasing");
    return detail::lamperti_impl(levy, {}, alpha, t_grid, std::nullopt);
}

/// A(S(t)) for checking the inversion.
inline double clock_at_levy_time(const PssmpPath& path, double s) {
    const auto& p = path.driver;
    const auto it = std::upper_bound(p.times.begin(), p.times.end(), s);
    if (it == p.times.begin()) return 0.0;
    std::size_t i = static_cast<std::size_t>(it - p.times.begin()) - 1;
    if (i + 1 >= p.size()) return path.clock.back();
    const double h = p.times[i + 1] - p.times[i];
    const double v = s - p.times[i];
    if (path.alpha == 0.0) return path.clock[i] + v;
    const double a = -path.alpha * p.values[i], z = -path.alpha * (p.left_limit(i + 1) - p.values[i]);
    return path.clock[i] + v * std::exp(a) * detail::exprel(z * v / h);
}

/// Levy time S(t) for t inside the covered clock range.
inline double levy_time_at(const PssmpPath& path, double t) {
    const auto& c = path.clock;
    if (t >= c.back()) return path.driver.end_time();
    const auto it = std::upper_bound(c.begin(), c.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - c.begin()) - 1;
    return detail::invert_in_panel(path.driver, c, i, t, path.alpha).first;
}

struct PssmpOptions {
    double eps = 1e-4;              ///< truncation of infinite-activity jumps
    bool bridge_maxima = false;     ///< record exact maxima between samples (for path_sup)
    bool run_to_absorption = false; ///< simulate the killed driver up to its killing time
    int max_chunks = 64;
};

/// pssMp with index -alpha driven by xi_omega, started at x0 and sampled on
/// t_grid. The driver is killed at rate -kappa(omega) when kappa(omega) < 0.
/// The driver is simulated in chunks (substream k for chunk k) until the
/// clock covers max(t_grid), the driver is killed, or the clock saturates.
inline PssmpPath simulate_pssmp(const ModelParams& p, double omega, double x0, std::span<const double> t_grid,
                                double grid_step, const RngStream& rng, PssmpOptions opts = {}) {
    validate_model(p);
    if (!(x0 > 0.0) || !std::isfinite(x0)) fail(ErrorCode::InvalidArgument, "x0 must be positive and finite");
    if (!(omega >= 0.0) || !in_domain(p, omega)) fail(ErrorCode::OutsideDomain, "omega outside dom kappa");
    if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() < 0.0)
        fail(ErrorCode::InvalidArgument, "t_grid must be nonempty, nonnegative and increasing");
    const bool killed = kappa_at(p, omega) < -1e-10;
    const auto ch = levy_characteristics(p, omega, killed, opts.eps);
    const double alpha = p.alpha;
    const double t_max = t_grid.back();
    const LevySimOptions lopts{opts.bridge_maxima};

    if (opts.run_to_absorption && killed) {
        auto levy = simulate_levy(ch, std::log(x0), std::numeric_limits<double>::infinity(), grid_step,
                                  rng.substream(0), lopts);
        return detail::lamperti_impl(std::move(levy), {}, alpha, t_grid, std::nullopt);
    }

    LevyPath levy;
    std::vector<double> clock;
    std::optional<Absorption> saturated;
    double horizon = std::max(64.0 * grid_step, std::min(1.0, 1.25 * t_max * std::pow(x0, alpha)));
    for (int k = 0; k < opts.max_chunks; ++k) {
        const double start_t = levy.size() ? levy.end_time() : 0.0;
        const double start_xi = levy.size() ? levy.values.back() : std::log(x0);
        auto chunk = simulate_levy(ch, start_xi, horizon, grid_step, rng.substream(static_cast<std::uint64_t>(k)), lopts);
        if (levy.size() == 0) {
            levy = std::move(chunk);
        } else {
            for (std::size_t i = 1; i < chunk.size(); ++i) {
                levy.times.push_back(start_t + chunk.times[i]);
                levy.values.push_back(chunk.values[i]);
                levy.jump_flags.push_back(chunk.jump_flags[i]);
                levy.jump_sizes.push_back(chunk.jump_sizes[i]);
            }
            levy.bridge_max.insert(levy.bridge_max.end(), chunk.bridge_max.begin(), chunk.bridge_max.end());
            if (chunk.kill_time) levy.kill_time = start_t + *chunk.kill_time;
        }
        const double before = clock.empty() ? 0.0 : clock.back();
        detail::extend_clock(levy, alpha, clock);
        const double a_end = clock.back();
        if (levy.kill_time || (a_end >= t_max && !opts.run_to_absorption)) break;
        if (alpha != 0.0 && a_end - before <= 1e-12 * a_end) {
            saturated = Absorption{a_end, alpha < 0.0 ? AbsorbedState::zero : AbsorbedState::infinity};
            break;
        }
        const double remaining = std::max(t_max - a_end, 0.0);
        const double rate_guess = std::exp(alpha * levy.values.back());
        horizon = std::clamp(1.25 * remaining * rate_guess, 64.0 * grid_step, 2.0 * horizon);
        if (opts.run_to_absorption) horizon = 2.0 * horizon;
    }
    return detail::lamperti_impl(std::move(levy), std::move(clock), alpha, t_grid, saturated);
}

/// Samples at a single time.
inline double pssmp_value_at(const ModelParams& p, double omega, double x0, double t, double grid_step,
                             const RngStream& rng, PssmpOptions opts = {}) {
    const double grid[] = {t};
    const auto path = simulate_pssmp(p, omega, x0, grid, grid_step, rng, opts);
    if (path.values.empty()) fail(ErrorCode::DomainTooSmall, "Levy horizon did not cover t");
    return path.values.front();
}

/// One draw of the approximate entrance law at time t: X_+ (driver at omega_+)
/// started from x_small when alpha < 0; X_- (driver at omega_-) started from
/// 1/x_small when alpha > 0.
inline double entrance_sample(const ModelParams& p, double t, double x_small, double grid_step, const RngStream& rng) {
    validate_model(p);
    if (!(x_small > 0.0 && x_small < 1.0)) fail(ErrorCode::InvalidArgument, "x_small must lie in (0, 1)");
    if (p.alpha == 0.0) fail(ErrorCode::HypothesisFailed, "entrance laws need alpha != 0");
    const auto roots = malthus_roots(p);
    if (p.alpha < 0.0) {
        if (!roots.omega_plus) fail(ErrorCode::HypothesisFailed, "no Malthusian exponent omega_+");
        return pssmp_value_at(p, *roots.omega_plus, x_small, t, grid_step, rng);
    }
    if (!roots.omega_minus || !roots.omega_plus || roots.degenerate_root)
        fail(ErrorCode::HypothesisFailed, "needs two distinct roots omega_- < omega_+");
    const auto dom = domain_bound(p);
    if (!dom.closed && *roots.omega_minus <= dom.lower)
        fail(ErrorCode::HypothesisFailed, "kappa'(omega_-) is not finite");
    return pssmp_value_at(p, *roots.omega_minus, 1.0 / x_small, t, grid_step, rng);
}

/// Supremum of X over its sampled life: up to absorption, or up to the last
/// grid time otherwise. Uses bridge maxima when they were recorded.
inline double path_sup(const PssmpPath& path) {
    const auto& d = path.driver;
    if (d.size() == 0) fail(ErrorCode::InvalidArgument, "path has no driver");
    const bool whole = path.absorbed.has_value();
    const double s_end = whole ? d.end_time() : levy_time_at(path, path.times.empty() ? 0.0 : path.times.back());
    double m = d.values[0];
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        if (d.times[i + 1] <= s_end) {
            m = std::max({m, d.values[i], d.left_limit(i + 1)});
            if (!d.bridge_max.empty()) m = std::max(m, d.bridge_max[i]);
        } else {
            const double h = d.times[i + 1] - d.times[i];
            const double xi_end = d.values[i] + (d.left_limit(i + 1) - d.values[i]) * ((s_end - d.times[i]) / h);
            m = std::max({m, d.values[i], xi_end});
            break;
        }
    }
    return std::exp(m);
}

/// int_0^{absorption} X(u)^p du = int_0^zeta exp((p - alpha) xi(s)) ds.
inline double path_power_integral(const PssmpPath& path, double p) {
    if (!path.absorbed) fail(ErrorCode::NotAbsorbed, "path was not absorbed; the integral is over an infinite horizon");
    const auto& d = path.driver;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) sum += detail::panel_integral(d, i, p - path.alpha);
    return sum;
}

}  // namespace gfrag
