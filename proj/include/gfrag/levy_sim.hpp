#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "gfrag/error.hpp"
#include "gfrag/levy.hpp"
#include "gfrag/rng.hpp"
#include "gfrag/stats.hpp"

namespace gfrag {

/// Sampled trajectory of a spectrally negative Levy process. `values[i]` is
/// xi(times[i]); at a jump instant it is the post-jump value and
/// `jump_sizes[i]` the (negative) jump, so xi(times[i]-) = values[i] -
/// jump_sizes[i]. `bridge_max[i]`, when present, is the supremum of the
/// continuous part on [times[i], times[i+1]).
struct LevyPath {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<std::uint8_t> jump_flags;
    std::vector<double> jump_sizes;
    std::optional<double> kill_time;
    std::vector<double> bridge_max;

    std::size_t size() const noexcept { return times.size(); }
    double left_limit(std::size_t i) const noexcept { return values[i] - jump_sizes[i]; }
    double end_time() const noexcept { return times.back(); }
    std::size_t jump_count() const noexcept {
        return static_cast<std::size_t>(std::count(jump_flags.begin(), jump_flags.end(), std::uint8_t{1}));
    }
};

struct LevySimOptions {
    bool bridge_maxima = false;
};

namespace detail {

/// Engine lanes: the jump skeleton and killing time use lane 0 only, so they
/// do not depend on the grid.
inline constexpr std::uint32_t lane_skeleton = 0;
inline constexpr std::uint32_t lane_gauss = 1;
inline constexpr std::uint32_t lane_bridge = 2;

class JumpSampler {
public:
    explicit JumpSampler(const LevyCharacteristics& ch) : ch_(ch) {
        double acc = 0.0;
        for (const auto& j : ch.jump_table) {
            acc += j.rate;
            cumulative_.push_back(acc);
        }
        if (ch.density_jumps) {
            left_end_ = acc + ch.density_jumps->left_rate;
            total_ = left_end_ + ch.density_jumps->right_rate;
        } else {
            left_end_ = total_ = acc;
        }
    }

    double total_rate() const noexcept { return total_; }

    template <class Engine>
    double draw(Engine& eng) const {
        const double v = uniform_open0(eng) * total_;
        const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), v);
        if (it != cumulative_.end()) return ch_.jump_table[static_cast<std::size_t>(it - cumulative_.begin())].log_size;
        const auto& d = *ch_.density_jumps;
        if (v <= left_end_) {
            const double s = d.omega - d.beta + 1.0;
            return std::log(0.5) + std::log(uniform_open0(eng)) / s;
        }
        for (;;) {
            const double u = propose_right(d, uniform_open0(eng));
            if (d.omega == 0.0 || uniform_open0(eng) <= std::exp(d.omega * std::log1p(-u))) return std::log1p(-u);
        }
    }

private:
    /// Inverse CDF of u^(-beta) on [u_min, 1/2].
    static double propose_right(const DensityJumps& d, double v) {
        const double h = 0.5, l = d.u_min;
        if (d.beta == 1.0) return l * std::pow(h / l, v);
        const double g = 1.0 - d.beta;
        const double lg = l > 0.0 ? std::pow(l, g) : 0.0;
        return std::pow(lg + v * (std::pow(h, g) - lg), 1.0 / g);
    }

    const LevyCharacteristics& ch_;
    std::vector<double> cumulative_;
    double left_end_ = 0.0;
    double total_ = 0.0;
};

}  // namespace detail

/// Exact-in-distribution path on the union of the regular grid, the jump
/// instants and the end point (horizon, or the killing time when earlier).
/// `horizon` may be +inf only when the killing rate is positive.
inline LevyPath simulate_levy(const LevyCharacteristics& ch, double x0_log, double horizon, double grid_step,
                              const RngStream& rng, LevySimOptions opts = {}) {
    if (!(grid_step > 0.0) || !(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "horizon and grid_step must be > 0");
    if (std::isinf(horizon) && !(ch.killing_rate > 0.0))
        fail(ErrorCode::InvalidArgument, "infinite horizon needs a positive killing rate");

    auto skeleton = rng.engine(detail::lane_skeleton);
    double end = horizon;
    std::optional<double> kill;
    if (ch.killing_rate > 0.0) {
        const double zeta = standard_exponential(skeleton) / ch.killing_rate;
        if (zeta < horizon) {
            kill = zeta;
            end = zeta;
        }
    }

    const detail::JumpSampler sampler(ch);
    std::vector<double> jump_times, jump_sizes;
    if (sampler.total_rate() > 0.0) {
        for (double t = standard_exponential(skeleton) / sampler.total_rate(); t < end;
             t += standard_exponential(skeleton) / sampler.total_rate()) {
            jump_times.push_back(t);
            jump_sizes.push_back(sampler.draw(skeleton));
        }
    }

    LevyPath path;
    const auto n_grid = static_cast<std::size_t>(std::ceil(end / grid_step));
    path.times.reserve(n_grid + jump_times.size() + 2);
    path.times.push_back(0.0);
    path.values.push_back(x0_log);
    path.jump_flags.push_back(0);
    path.jump_sizes.push_back(0.0);

    auto gauss_eng = rng.engine(detail::lane_gauss);
    auto bridge_eng = rng.engine(detail::lane_bridge);
    std::normal_distribution<double> normal;
    const double sigma2 = ch.gaussian_variance;
    const double sigma = std::sqrt(sigma2);
    const double drift = ch.drift();

    auto step_to = [&](double t, double jump, bool is_jump) {
        const double dt = t - path.times.back();
        double left = path.values.back() + drift * dt;
        if (sigma > 0.0) left += sigma * std::sqrt(dt) * normal(gauss_eng);
        if (opts.bridge_maxima) {
            const double a = path.values.back(), b = left;
            double m = std::max(a, b);
            if (sigma > 0.0) {
                const double d = b - a;
                m = 0.5 * (a + b + std::sqrt(d * d - 2.0 * sigma2 * dt * std::log(uniform_open0(bridge_eng))));
            }
            path.bridge_max.push_back(m);
        }
        path.times.push_back(t);
        path.values.push_back(left + jump);
        path.jump_flags.push_back(is_jump ? 1 : 0);
        path.jump_sizes.push_back(jump);
    };

    std::size_t j = 0, k = 1;
    for (;;) {
        const double grid_t = static_cast<double>(k) * grid_step;
        const bool grid_left = grid_t < end;
        const bool jumps_left = j < jump_times.size();
        if (!grid_left && !jumps_left) break;
        if (jumps_left && (!grid_left || jump_times[j] <= grid_t)) {
            if (grid_left && jump_times[j] == grid_t) ++k;
            step_to(jump_times[j], jump_sizes[j], true);
            ++j;
        } else {
            step_to(grid_t, 0.0, false);
            ++k;
        }
    }
    if (end > path.times.back()) step_to(end, 0.0, false);
    path.kill_time = kill;
    return path;
}

/// Monte Carlo mean of exp(q xi(t)) started at 0, with 0 after the killing time.
inline MCEstimate estimate_exp_moment(const LevyCharacteristics& ch, double q, double t, std::size_t n,
                                      const RngStream& rng, unsigned threads = 0) {
    if (!(t > 0.0)) fail(ErrorCode::InvalidArgument, "t must be positive");
    return monte_carlo(
        n, rng,
        [&](const RngStream& r) {
            const auto path = simulate_levy(ch, 0.0, t, t, r);
            if (path.kill_time) return 0.0;
            return std::exp(q * path.values.back());
        },
        threads);
}

}  // namespace gfrag
