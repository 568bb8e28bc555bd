#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include "gfrag/error.hpp"

namespace gfrag {

/// A value in (-inf, +inf]: either a finite double or +infinity.
class ExtReal {
public:
    constexpr ExtReal() = default;
    constexpr ExtReal(double v) : value_(v) {}  // NOLINT: implicit from finite values

    static constexpr ExtReal infinity() {
        ExtReal r;
        r.infinite_ = true;
        return r;
    }

    constexpr bool is_finite() const noexcept { return !infinite_; }
    constexpr bool is_infinite() const noexcept { return infinite_; }

    double value() const {
        if (infinite_) fail(ErrorCode::OutsideDomain, "value is +inf");
        return value_;
    }

    /// IEEE view, for comparisons and arithmetic where +inf is harmless.
    constexpr double to_double() const noexcept {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    friend constexpr bool operator==(const ExtReal& l, const ExtReal& r) noexcept {
        return l.infinite_ == r.infinite_ && (l.infinite_ || l.value_ == r.value_);
    }

    friend ExtReal operator+(const ExtReal& l, const ExtReal& r) noexcept {
        if (l.infinite_ || r.infinite_) return infinity();
        return ExtReal(l.value_ + r.value_);
    }

    friend std::ostream& operator<<(std::ostream& os, const ExtReal& x) {
        if (x.infinite_) return os << "+inf";
        return os << x.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

}  // namespace gfrag
