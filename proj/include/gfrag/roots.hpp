#pragma once

#include <cmath>
#include <utility>

#include "gfrag/error.hpp"

namespace gfrag::roots {

/// Root of `f` on [lo, hi] where f(lo) and f(hi) have opposite signs:
/// bisection down to `bisect_width`, then Newton with `df`, falling back to
/// bisection whenever a Newton step leaves the current bracket. Stops when a
/// step is below `abs_tol`.
template <class F, class DF>
double bisect_newton(F&& f, DF&& df, double lo, double hi, double bisect_width = 1e-6, double abs_tol = 1e-12,
                     int max_iter = 200) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) fail(ErrorCode::DomainTooSmall, "root is not bracketed");
    const bool rising = flo < 0.0;

    int iter = 0;
    while (hi - lo > bisect_width && iter++ < max_iter) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == rising) lo = mid;
        else hi = mid;
    }

    double x = 0.5 * (lo + hi);
    for (iter = 0; iter < max_iter; ++iter) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx < 0.0) == rising) lo = x;
        else hi = x;
        const double slope = df(x);
        double next = (slope != 0.0 && std::isfinite(slope)) ? x - fx / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= abs_tol || hi - lo <= abs_tol) break;
    }
    return x;
}

}  // namespace gfrag::roots
