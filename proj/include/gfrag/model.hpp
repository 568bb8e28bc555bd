#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "gfrag/error.hpp"
#include "gfrag/ext_real.hpp"

namespace gfrag {

/// Point mass `w` at split fraction `y` in [1/2, 1).
struct Atom {
    double y = 0.5;
    double w = 1.0;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Density C (1-y)^(-beta) on [1/2, 1).
struct PowerDensity {
    double C = 0.0;
    double beta = 0.0;

    bool active() const noexcept { return C > 0.0; }
    friend bool operator==(const PowerDensity&, const PowerDensity&) = default;
};

/// Dislocation measure on [1/2, 1): finitely many atoms plus an optional
/// power-law density. With u = 1 - y every moment of the density reduces to
/// C * int_0^{1/2} u^(s-1) du, which is what the closed forms below use.
struct DislocationMeasure {
    std::vector<Atom> atoms;
    std::optional<PowerDensity> density;

    bool has_density() const noexcept { return density && density->active(); }

    /// int (1-y)^p K(dy); +inf when the density makes it diverge.
    ExtReal power_moment(double p) const {
        double sum = 0.0;
        for (const auto& a : atoms) sum += a.w * std::pow(1.0 - a.y, p);
        if (has_density()) {
            const double s = p - density->beta + 1.0;
            if (s <= 0.0) return ExtReal::infinity();
            sum += density->C * std::pow(0.5, s) / s;
        }
        return sum;
    }

    /// |K|
    ExtReal total_mass() const { return power_moment(0.0); }

    /// int (1-y) K(dy)
    ExtReal first_moment() const { return power_moment(1.0); }

    bool empty() const noexcept { return atoms.empty() && !has_density(); }

    friend bool operator==(const DislocationMeasure&, const DislocationMeasure&) = default;
};

/// Coefficients (a, b, alpha, K) of the growth-fragmentation operator.
struct ModelParams {
    double a = 0.0;
    double b = 0.0;
    double alpha = 0.0;
    DislocationMeasure K;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// True when kappa is non-increasing (a = 0, int (1-y)K finite, b + int (1-y)K <= 0).
inline bool is_pure_fragmentation(const ModelParams& p) {
    if (p.a != 0.0) return false;
    const ExtReal m1 = p.K.first_moment();
    return m1.is_finite() && p.b + m1.value() <= 0.0;
}

inline const ModelParams& validate_model(const ModelParams& p) {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(p.a) || !finite(p.b) || !finite(p.alpha))
        fail(ErrorCode::InvalidArgument, "a, b and alpha must be finite");
    if (p.a < 0.0) fail(ErrorCode::InvalidArgument, "a must be nonnegative");
    for (const auto& atom : p.K.atoms) {
        if (!finite(atom.y) || atom.y < 0.5 || atom.y >= 1.0) {
            std::ostringstream os;
            os << "atom location " << atom.y << " outside [1/2, 1)";
            fail(ErrorCode::InvalidDislocation, os.str());
        }
        if (!finite(atom.w) || atom.w <= 0.0) {
            std::ostringstream os;
            os << "atom mass " << atom.w << " must be strictly positive";
            fail(ErrorCode::InvalidDislocation, os.str());
        }
    }
    if (p.K.density) {
        const auto& d = *p.K.density;
        if (!finite(d.C) || d.C < 0.0) fail(ErrorCode::InvalidDislocation, "density coefficient C must be >= 0");
        if (!finite(d.beta) || d.beta >= 3.0)
            fail(ErrorCode::InvalidDislocation, "density exponent beta must be < 3 for int (1-y)^2 K(dy) < inf");
    }
    if (p.alpha != 0.0 && is_pure_fragmentation(p))
        fail(ErrorCode::PureFragmentationExcluded,
             "kappa is non-increasing (a = 0 and b + int (1-y)K <= 0); pure fragmentation is not handled for alpha != 0");
    return p;
}

}  // namespace gfrag
