#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/heap/d_ary_heap.hpp>

#include "gfrag/error.hpp"
#include "gfrag/kappa.hpp"
#include "gfrag/model.hpp"
#include "gfrag/rng.hpp"

namespace gfrag {

namespace detail {

/// x^e with exact shortcuts for e = +-1.
inline double pow_e(double x, double e) noexcept {
    if (e == 1.0) return x;
    if (e == -1.0) return 1.0 / x;
    return std::pow(x, e);
}

}  // namespace detail

/// Solution of x' = c x^(alpha+1) from x0 after time t. `size` is +inf from
/// the blow-up time on (alpha > 0, c > 0) and 0 once a shrinking flow
/// (alpha < 0, c < 0) reaches zero.
struct GrowthFlow {
    double size = 0.0;
    std::optional<double> blowup_time;
};

inline std::optional<double> blowup_time(double x0, double c, double alpha) {
    if (alpha > 0.0 && c > 0.0) return detail::pow_e(x0, -alpha) / (c * alpha);
    return std::nullopt;
}

inline GrowthFlow growth_flow(double x0, double t, double c, double alpha) {
    GrowthFlow g;
    g.blowup_time = blowup_time(x0, c, alpha);
    if (alpha == 0.0) {
        g.size = x0 * std::exp(c * t);
        return g;
    }
    const double u = c * alpha * t * detail::pow_e(x0, alpha);
    if (u >= 1.0) {
        g.size = alpha > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        return g;
    }
    g.size = alpha == -1.0 ? x0 * (1.0 - u) : x0 * std::exp(-std::log1p(-u) / alpha);
    return g;
}

/// Time for the integrated split rate |K| int_0^t x(s)^alpha ds to reach
/// `exp_draw`; nullopt when it never does.
inline std::optional<double> next_split_time(double x0, double c, double alpha, double total_rate, double exp_draw) {
    if (!(total_rate > 0.0) || !(exp_draw >= 0.0) || !std::isfinite(total_rate)) return std::nullopt;
    const double e = exp_draw / total_rate;
    if (alpha == 0.0) return e;
    if (c == 0.0) return e * detail::pow_e(x0, -alpha);
    const double ca = c * alpha;
    return detail::pow_e(x0, -alpha) * (-std::expm1(-ca * e)) / ca;
}

enum class EndReason : std::uint8_t { split, horizon, frozen_small, capped };

constexpr std::string_view to_string(EndReason r) noexcept {
    switch (r) {
        case EndReason::split: return "split";
        case EndReason::horizon: return "horizon";
        case EndReason::frozen_small: return "frozen_small";
        case EndReason::capped: return "capped";
    }
    return "?";
}

/// Children of particle i, when it split, are first_child and first_child + 1
/// (sizes y x and (1 - y) x).
struct ParticleRecord {
    std::int64_t id = 0;
    std::int64_t parent_id = -1;
    double birth_time = 0.0;
    double birth_size = 0.0;
    double end_time = 0.0;
    std::int64_t first_child = -1;
    EndReason end_reason = EndReason::horizon;

    bool has_children() const noexcept { return first_child >= 0; }
};

struct SimCaps {
    std::uint64_t max_events = 10'000'000;
    double min_size = 1e-8;
    double horizon = 1.0;
};

enum class RunEnd : std::uint8_t { horizon, capped, blowup, observer_stop };

constexpr std::string_view to_string(RunEnd r) noexcept {
    switch (r) {
        case RunEnd::horizon: return "horizon";
        case RunEnd::capped: return "capped";
        case RunEnd::blowup: return "blowup";
        case RunEnd::observer_stop: return "observer_stop";
    }
    return "?";
}

struct RunSummary {
    RunEnd end = RunEnd::horizon;
    std::uint64_t events = 0;
    std::uint64_t particles = 0;
    std::uint64_t frozen = 0;
    std::optional<double> truncated_at;  ///< time of the first unprocessed event
};

struct PopulationTrace {
    std::vector<ParticleRecord> particles;
    ModelParams model;
    SimCaps caps;
    RngStream rng;
    double x0 = 1.0;
    double growth_rate = 0.0;  ///< c = b + int (1-y)K
    RunSummary summary;

    bool truncated() const noexcept { return summary.truncated_at.has_value(); }
    bool has_frozen() const noexcept { return summary.frozen > 0; }
};

namespace detail {

/// Split fractions y ~ K / |K| on [1/2, 1).
class FractionSampler {
public:
    explicit FractionSampler(const DislocationMeasure& K) : K_(K) {
        double acc = 0.0;
        for (const auto& a : K.atoms) cumulative_.push_back(acc += a.w);
        if (K.has_density()) {
            const double g = 1.0 - K.density->beta;
            density_mass_ = K.density->C * std::pow(0.5, g) / g;
        }
        total_ = acc + density_mass_;
    }

    double total() const noexcept { return total_; }

    template <class Engine>
    double draw(Engine& eng) const {
        const double v = uniform_open0(eng) * total_;
        const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), v);
        if (it != cumulative_.end()) return K_.atoms[static_cast<std::size_t>(it - cumulative_.begin())].y;
        const double g = 1.0 - K_.density->beta;
        return 1.0 - 0.5 * std::pow(uniform_open0(eng), 1.0 / g);
    }

private:
    const DislocationMeasure& K_;
    std::vector<double> cumulative_;
    double density_mass_ = 0.0;
    double total_ = 0.0;
};

struct PendingSplit {
    double time;
    std::int64_t id;
    double birth_time;
    double birth_size;

    bool operator>(const PendingSplit& o) const noexcept { return time != o.time ? time > o.time : id > o.id; }
};

}  // namespace detail

/// Observer that ignores everything.
struct NullObserver {
    void on_birth(const ParticleRecord&) {}
    bool advance_to(double) { return true; }
    void on_end(const RunSummary&) {}
};

/// Event-driven simulation of the self-similar growth-fragmentation particle
/// system (a = 0, |K| < inf): sizes grow by x' = c x^(alpha+1), a particle of
/// size x splits at rate x^alpha |K| into y x and (1-y) x with y ~ K/|K|.
/// `observer.on_birth` sees each particle once, with its planned end time
/// and reason; `observer.advance_to(t)` is called before each split at time
/// t and may stop the run by returning false.
template <class Observer>
RunSummary simulate_population_observed(const ModelParams& p, double x0, const SimCaps& caps, const RngStream& rng,
                                        Observer& observer) {
    validate_model(p);
    if (p.a != 0.0) fail(ErrorCode::UnsupportedRegime, "particle system needs a = 0");
    if (p.K.total_mass().is_infinite()) fail(ErrorCode::UnsupportedRegime, "particle system needs |K| < inf");
    if (!(x0 > 0.0)) fail(ErrorCode::InvalidArgument, "x0 must be positive");
    if (!(caps.horizon > 0.0) || !(caps.min_size > 0.0) || caps.max_events == 0)
        fail(ErrorCode::InvalidArgument, "caps must be positive");

    const double c = drift_d(p).value();
    const double alpha = p.alpha;
    const detail::FractionSampler fractions(p.K);
    const double total_rate = fractions.total();
    auto eng = rng.engine(0);

    RunSummary summary;
    boost::heap::d_ary_heap<detail::PendingSplit, boost::heap::arity<8>, boost::heap::compare<std::greater<>>> queue;

    auto birth = [&](std::int64_t parent, double t, double size) {
        ParticleRecord r;
        r.id = static_cast<std::int64_t>(summary.particles++);
        r.parent_id = parent;
        r.birth_time = t;
        r.birth_size = size;
        if (size < caps.min_size) {
            r.end_time = caps.horizon;
            r.end_reason = EndReason::frozen_small;
            ++summary.frozen;
        } else {
            const auto dt = next_split_time(size, c, alpha, total_rate, standard_exponential(eng));
            const double split_at = dt ? t + *dt : std::numeric_limits<double>::infinity();
            if (split_at < caps.horizon) {
                r.end_time = split_at;
                r.end_reason = EndReason::split;
                queue.push({split_at, r.id, t, size});
            } else {
                r.end_time = caps.horizon;
                r.end_reason = EndReason::horizon;
            }
        }
        observer.on_birth(r);
    };

    birth(-1, 0.0, x0);
    while (!queue.empty()) {
        const auto ev = queue.top();
        if (summary.events >= caps.max_events) {
            summary.end = RunEnd::capped;
            summary.truncated_at = ev.time;
            break;
        }
        if (!observer.advance_to(ev.time)) {
            summary.end = RunEnd::observer_stop;
            summary.truncated_at = ev.time;
            break;
        }
        queue.pop();
        const auto flow = growth_flow(ev.birth_size, ev.time - ev.birth_time, c, alpha);
        if (std::isinf(flow.size)) {
            summary.end = RunEnd::blowup;
            summary.truncated_at = ev.time;
            break;
        }
        ++summary.events;
        const double y = fractions.draw(eng);
        birth(ev.id, ev.time, y * flow.size);
        birth(ev.id, ev.time, (1.0 - y) * flow.size);
    }
    if (summary.end == RunEnd::horizon) observer.advance_to(caps.horizon);
    observer.on_end(summary);
    return summary;
}

namespace detail {

struct TraceRecorder {
    std::vector<ParticleRecord>& out;

    void on_birth(const ParticleRecord& r) {
        if (r.parent_id >= 0) {
            auto& parent = out[static_cast<std::size_t>(r.parent_id)];
            if (parent.first_child < 0) parent.first_child = r.id;
        }
        out.push_back(r);
    }
    bool advance_to(double) { return true; }
    void on_end(const RunSummary& s) {
        if (!s.truncated_at) return;
        for (auto& r : out) {
            if (r.end_reason == EndReason::split && !r.has_children() && r.end_time >= *s.truncated_at) {
                r.end_reason = EndReason::capped;
                r.end_time = *s.truncated_at;
            }
        }
    }
};

}  // namespace detail

inline PopulationTrace simulate_population(const ModelParams& p, double x0, const SimCaps& caps, const RngStream& rng) {
    PopulationTrace trace;
    trace.model = p;
    trace.caps = caps;
    trace.rng = rng;
    trace.x0 = x0;
    detail::TraceRecorder rec{trace.particles};
    trace.summary = simulate_population_observed(p, x0, caps, rng, rec);
    trace.growth_rate = drift_d(p).value();
    return trace;
}

/// Sizes of the particles alive at t (birth <= t < end; particles that
/// reach the horizon or are frozen stay alive through the horizon).
inline std::vector<double> snapshot(const PopulationTrace& trace, double t) {
    if (!(t >= 0.0) || t > trace.caps.horizon) fail(ErrorCode::InvalidArgument, "t outside [0, horizon]");
    if (trace.summary.truncated_at && t >= *trace.summary.truncated_at)
        fail(ErrorCode::TruncatedTrace, "trace was truncated before t");
    std::vector<double> sizes;
    for (const auto& r : trace.particles) {
        if (r.birth_time > t) continue;
        const bool open_end = r.end_reason == EndReason::horizon || r.end_reason == EndReason::frozen_small;
        if (!(t < r.end_time || (open_end && t <= r.end_time))) continue;
        if (r.end_reason == EndReason::frozen_small) sizes.push_back(r.birth_size);
        else sizes.push_back(growth_flow(r.birth_size, t - r.birth_time, trace.growth_rate, trace.model.alpha).size);
    }
    return sizes;
}

inline std::size_t count_in_interval(const PopulationTrace& trace, double t, double lo, double hi) {
    const auto s = snapshot(trace, t);
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double x) { return x >= lo && x <= hi; }));
}

inline double empirical_moment(const PopulationTrace& trace, double t, double q) {
    double sum = 0.0;
    for (const double x : snapshot(trace, t)) sum += std::pow(x, q);
    return sum;
}

/// Exact number of particles with size in [lo, hi], maintained online: each
/// particle's stay in the interval is known at birth, so it contributes a +1
/// and a -1 event. Records the running maximum and the first time the count
/// exceeds each threshold; optionally asks to stop once all are exceeded.
class OccupancyCounter {
public:
    OccupancyCounter(double lo, double hi, double c, double alpha, std::vector<std::size_t> thresholds,
                     bool stop_when_done)
        : lo_(lo), hi_(hi), c_(c), alpha_(alpha), thresholds_(std::move(thresholds)),
          first_(thresholds_.size()), stop_when_done_(stop_when_done) {}

    void on_birth(const ParticleRecord& r) {
        double from = 0.0, to = r.end_time - r.birth_time;
        const double x = r.birth_size;
        if (r.end_reason == EndReason::frozen_small || c_ == 0.0) {
            if (x < lo_ || x > hi_) return;
        } else {
            from = std::max(from, time_to(x, c_ > 0.0 ? lo_ : hi_));
            if (!(from < to)) return;
            to = std::min(to, time_to(x, c_ > 0.0 ? hi_ : lo_));
            if (!(from < to)) return;
        }
        events_.push({r.birth_time + from, +1});
        events_.push({r.birth_time + to, -1});
    }

    bool advance_to(double t) {
        while (!events_.empty() && events_.top().time <= t) {
            const auto e = events_.top();
            events_.pop();
            count_ += e.delta;
            if (count_ > max_count_) {
                max_count_ = count_;
                max_time_ = e.time;
            }
            for (std::size_t k = 0; k < thresholds_.size(); ++k)
                if (!first_[k] && count_ > static_cast<std::int64_t>(thresholds_[k])) first_[k] = e.time;
        }
        return !(stop_when_done_ && !first_.empty() && first_.back().has_value());
    }

    void on_end(const RunSummary&) {}

    std::int64_t max_count() const noexcept { return max_count_; }
    double max_time() const noexcept { return max_time_; }
    const std::vector<std::optional<double>>& first_exceed() const noexcept { return first_; }

private:
    struct Event {
        double time;
        int delta;
        bool operator>(const Event& o) const noexcept { return time != o.time ? time > o.time : delta > o.delta; }
    };

    /// Time for the growth flow to take x to y (negative when y lies behind).
    double time_to(double x, double y) const {
        if (alpha_ == 0.0) return std::log(y / x) / c_;
        return (detail::pow_e(x, -alpha_) - detail::pow_e(y, -alpha_)) / (c_ * alpha_);
    }

    double lo_, hi_, c_, alpha_;
    std::vector<std::size_t> thresholds_;
    std::vector<std::optional<double>> first_;
    bool stop_when_done_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::int64_t count_ = 0, max_count_ = 0;
    double max_time_ = 0.0;
};

struct ExplosionConfig {
    ModelParams model;
    double lo = 1.0;
    double hi = 2.0;
    std::vector<std::size_t> thresholds{10, 100};
    SimCaps caps;
    std::size_t runs = 100;
    double x0 = 1.0;
};

struct ExplosionRun {
    std::int64_t max_count = 0;
    double max_time = 0.0;
    std::vector<std::optional<double>> first_exceed;
    RunSummary summary;
};

struct ExplosionReport {
    double inf_kappa = 0.0;
    double argmin = 0.0;
    double growth_rate = 0.0;
    double mean_log_small = 0.0;  ///< E log(1-Y) + c
    double mean_log_large = 0.0;  ///< E log Y + c
    std::vector<ExplosionRun> runs;
    std::size_t runs_exceeding_top = 0;
};

/// Drift condition E log(1-Y) + c < 0 < E log Y + c for Y ~ K.
inline std::pair<double, double> explosion_drifts(const ModelParams& p) {
    const double c = drift_d(p).value();
    const double mass = p.K.total_mass().value();
    double small = 0.0, large = 0.0;
    for (const auto& a : p.K.atoms) {
        small += a.w * std::log1p(-a.y);
        large += a.w * std::log(a.y);
    }
    if (p.K.has_density()) fail(ErrorCode::UnsupportedRegime, "explosion experiment supports atomic K only");
    return {small / mass + c, large / mass + c};
}

/// Runs `runs` independent populations (substream i) and tracks the number
/// of particles in [lo, hi]; each run stops once the top threshold is exceeded.
inline ExplosionReport explosion_experiment(const ExplosionConfig& cfg, const RngStream& rng) {
    const auto& p = validate_model(cfg.model);
    if (!(p.alpha < 0.0)) fail(ErrorCode::InvalidArgument, "explosion experiment needs alpha < 0");
    if (p.a != 0.0 || p.K.total_mass().is_infinite())
        fail(ErrorCode::UnsupportedRegime, "particle system needs a = 0 and |K| < inf");
    if (std::abs(p.K.total_mass().value() - 1.0) > 1e-12) fail(ErrorCode::InvalidArgument, "K must be a probability");
    if (!(cfg.lo > 0.0 && cfg.hi > cfg.lo)) fail(ErrorCode::InvalidArgument, "need 0 < lo < hi");
    if (cfg.thresholds.empty() || !std::is_sorted(cfg.thresholds.begin(), cfg.thresholds.end()))
        fail(ErrorCode::InvalidArgument, "thresholds must be nonempty and increasing");

    ExplosionReport rep;
    std::tie(rep.mean_log_small, rep.mean_log_large) = explosion_drifts(p);
    if (!(rep.mean_log_small < 0.0 && 0.0 < rep.mean_log_large))
        fail(ErrorCode::DriftConditionFailed, "needs E log(1-Y) + c < 0 < E log Y + c");
    const auto roots = malthus_roots(p);
    rep.inf_kappa = roots.inf_value;
    rep.argmin = roots.argmin;
    rep.growth_rate = drift_d(p).value();

    for (std::size_t i = 0; i < cfg.runs; ++i) {
        OccupancyCounter counter(cfg.lo, cfg.hi, rep.growth_rate, p.alpha, cfg.thresholds, true);
        ExplosionRun run;
        run.summary = simulate_population_observed(p, cfg.x0, cfg.caps, rng.substream(i), counter);
        run.max_count = counter.max_count();
        run.max_time = counter.max_time();
        run.first_exceed = counter.first_exceed();
        if (run.first_exceed.back()) ++rep.runs_exceeding_top;
        rep.runs.push_back(std::move(run));
    }
    return rep;
}

}  // namespace gfrag
