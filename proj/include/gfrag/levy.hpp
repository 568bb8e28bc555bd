#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gfrag/error.hpp"
#include "gfrag/kappa.hpp"
#include "gfrag/model.hpp"

namespace gfrag {

struct JumpEntry {
    double log_size = 0.0;  ///< strictly negative
    double rate = 0.0;

    friend bool operator==(const JumpEntry&, const JumpEntry&) = default;
};

/// Jumps coming from a density C (1-y)^(-beta) dy, in u = 1 - y.
///   left:  jump ln(u),   intensity C u^(omega-beta) du on (0, 1/2]
///   right: jump ln(1-u), intensity C (1-u)^omega u^(-beta) du on [u_min, 1/2]
/// u_min = 1 - e^(-eps) when the right piece has infinite activity, else 0.
struct DensityJumps {
    double C = 0.0;
    double beta = 0.0;
    double omega = 0.0;
    double u_min = 0.0;
    double left_rate = 0.0;
    double right_rate = 0.0;

    double total_rate() const noexcept { return left_rate + right_rate; }
};

/// Characteristics of the spectrally negative Levy process xi_omega, whose
/// Laplace exponent is kappa(omega + q) - kappa(omega), or kappa(omega + q)
/// when killed at rate -kappa(omega).
struct LevyCharacteristics {
    double gaussian_variance = 0.0;
    double linear_drift = 0.0;
    std::vector<JumpEntry> jump_table;
    double truncation_drift = 0.0;
    double killing_rate = 0.0;
    std::optional<DensityJumps> density_jumps;

    double drift() const noexcept { return linear_drift + truncation_drift; }

    double total_jump_rate() const noexcept {
        double r = density_jumps ? density_jumps->total_rate() : 0.0;
        for (const auto& j : jump_table) r += j.rate;
        return r;
    }
};

namespace detail {

using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;

/// int_{u_min}^{1/2} h(u) u^(-beta) du for smooth h: in ln u when u_min > 0,
/// in w = u^(1-beta) when u_min = 0 (beta < 1).
template <class H>
double right_integral(H&& h, double beta, double u_min) {
    if (u_min > 0.0) {
        return GK15::integrate(
            [&](double v) {
                const double u = std::exp(v);
                return h(u) * std::pow(u, 1.0 - beta);
            },
            std::log(u_min), std::log(0.5), 15, 1e-13);
    }
    const double g = 1.0 - beta;
    return GK15::integrate([&](double w) { return h(std::pow(w, 1.0 / g)); }, 0.0, std::pow(0.5, g), 15, 1e-13) / g;
}

}  // namespace detail

/// Characteristics of xi_omega. Density jumps of log size above -eps are
/// dropped when the density has infinite activity, with their first-order
/// effect kept in `truncation_drift`.
inline LevyCharacteristics levy_characteristics(const ModelParams& p, double omega, bool killed, double eps = 1e-4) {
    validate_model(p);
    if (!(omega >= 0.0) || !in_domain(p, omega)) fail(ErrorCode::OutsideDomain, "omega outside dom kappa");
    if (!(eps > 0.0)) fail(ErrorCode::InvalidArgument, "truncation eps must be positive");

    LevyCharacteristics ch;
    ch.gaussian_variance = 2.0 * p.a;
    ch.linear_drift = p.b - p.a + 2.0 * p.a * omega;

    std::vector<JumpEntry> raw;
    for (const auto& atom : p.K.atoms) {
        const double u = 1.0 - atom.y;
        ch.linear_drift += atom.w * u;
        raw.push_back({std::log(atom.y), atom.w * std::pow(atom.y, omega)});
        raw.push_back({std::log1p(-atom.y), atom.w * std::pow(u, omega)});
    }
    std::sort(raw.begin(), raw.end(), [](const JumpEntry& l, const JumpEntry& r) { return l.log_size > r.log_size; });
    for (const auto& e : raw) {
        if (!ch.jump_table.empty() && ch.jump_table.back().log_size == e.log_size) ch.jump_table.back().rate += e.rate;
        else ch.jump_table.push_back(e);
    }

    if (p.K.has_density()) {
        const double C = p.K.density->C, beta = p.K.density->beta;
        DensityJumps dj;
        dj.C = C;
        dj.beta = beta;
        dj.omega = omega;
        const double s = omega - beta + 1.0;
        dj.left_rate = C * std::pow(0.5, s) / s;
        if (beta >= 1.0) {
            dj.u_min = -std::expm1(-eps);
            const double um = dj.u_min;
            // integrand is O(u^(2-beta)) at 0
            ch.truncation_drift = C * detail::GK15::integrate(
                                          [&](double u) {
                                              if (u <= 0.0) return 0.0;
                                              const double l = std::log1p(-u);
                                              return (std::exp(omega * l) * l + u) * std::pow(u, -beta);
                                          },
                                          0.0, um, 15, 1e-14);
            ch.linear_drift += C * (beta == 2.0 ? std::log(0.5 / um)
                                                : (std::pow(0.5, 2.0 - beta) - std::pow(um, 2.0 - beta)) / (2.0 - beta));
        } else {
            ch.linear_drift += C * std::pow(0.5, 2.0 - beta) / (2.0 - beta);
        }
        dj.right_rate =
            C * detail::right_integral([&](double u) { return std::exp(omega * std::log1p(-u)); }, beta, dj.u_min);
        ch.density_jumps = dj;
    }

    if (killed) {
        const double k = kappa_at(p, omega);
        if (k > 1e-10) fail(ErrorCode::KillRateNegative, "killing requested with kappa(omega) > 0");
        ch.killing_rate = std::max(0.0, -k);
    }
    return ch;
}

/// Laplace exponent log E[exp(q xi(1)); 1 < zeta] read off the characteristics.
inline double laplace_exponent(const LevyCharacteristics& ch, double q) {
    double v = 0.5 * ch.gaussian_variance * q * q + ch.drift() * q - ch.killing_rate;
    for (const auto& j : ch.jump_table) v += j.rate * std::expm1(q * j.log_size);
    if (ch.density_jumps) {
        const auto& d = *ch.density_jumps;
        const double s = d.omega - d.beta + 1.0;
        v += d.C * (std::pow(0.5, s + q) / (s + q) - std::pow(0.5, s) / s);
        auto h = [&](double u) {
            const double l = std::log1p(-u);
            return std::exp(d.omega * l) * std::expm1(q * l);
        };
        v += d.C * detail::right_integral(h, d.beta, d.u_min);
    }
    return v;
}

}  // namespace gfrag
