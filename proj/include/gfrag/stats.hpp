#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gfrag/error.hpp"
#include "gfrag/rng.hpp"

namespace gfrag {

/// Streaming mean/variance (Welford) with the pairwise merge of Chan et al.
class RunningStats {
public:
    void add(double x) noexcept {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other) noexcept {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double n = static_cast<double>(n_ + other.n_);
        const double delta = other.mean_ - mean_;
        mean_ += delta * static_cast<double>(other.n_) / n;
        m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / n;
        n_ += other.n_;
    }

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stderr_of_mean() const noexcept {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::optional<std::string> bias_note;

    static MCEstimate from(const RunningStats& s) {
        return {s.mean(), s.stderr_of_mean(), s.count(), std::nullopt};
    }
};

/// Standardised discrepancy between an estimate and a reference. Differences
/// at rounding level count as agreement even when the stderr is zero.
inline double z_score(double estimate, double reference, double std_error) {
    const double diff = estimate - reference;
    if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(reference))) return 0.0;
    if (std_error <= 0.0) return diff > 0 ? HUGE_VAL : -HUGE_VAL;
    return diff / std_error;
}

inline double combined_stderr(double a, double b) { return std::hypot(a, b); }

/// Worker count: explicit value, else GFRAG_THREADS, else 1.
inline unsigned resolve_threads(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("GFRAG_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

/// Runs `n` replicas of `sample(RngStream, std::span<double> out)` producing
/// `width` values each, on substreams 0..n-1 of `rng`. Replicas are grouped
/// in fixed-size chunks merged in index order, so the result does not depend
/// on the number of threads.
template <class Sampler>
std::vector<RunningStats> replicate(std::size_t n, std::size_t width, const RngStream& rng, Sampler&& sample,
                                    unsigned threads = 0) {
    constexpr std::size_t chunk = 2048;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<std::vector<RunningStats>> partial(n_chunks, std::vector<RunningStats>(width));

    auto run_chunk = [&](std::size_t c) {
        std::vector<double> out(width);
        const std::size_t end = std::min(n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
            std::fill(out.begin(), out.end(), 0.0);
            sample(rng.substream(i), std::span<double>(out));
            for (std::size_t j = 0; j < width; ++j) partial[c][j].add(out[j]);
        }
    };

    const unsigned workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n_chunks, 1));
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<RunningStats> total(width);
    for (const auto& part : partial)
        for (std::size_t j = 0; j < width; ++j) total[j].merge(part[j]);
    return total;
}

template <class Sampler>
MCEstimate monte_carlo(std::size_t n, const RngStream& rng, Sampler&& sample, unsigned threads = 0) {
    if (n < 2) fail(ErrorCode::InvalidArgument, "Monte Carlo needs n >= 2");
    auto stats = replicate(
        n, 1, rng, [&](const RngStream& r, std::span<double> out) { out[0] = sample(r); }, threads);
    return MCEstimate::from(stats[0]);
}

}  // namespace gfrag
