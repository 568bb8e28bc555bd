#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gfrag/branching.hpp"
#include "gfrag/json_io.hpp"
#include "gfrag/kappa.hpp"
#include "gfrag/levy.hpp"
#include "gfrag/levy_sim.hpp"
#include "gfrag/pssmp.hpp"
#include "gfrag/rng.hpp"
#include "gfrag/solutions.hpp"
#include "gfrag/stats.hpp"
#include "gfrag/version.hpp"

namespace gfrag {

namespace detail {

inline std::string format_limit(double x) {
    Json j = x;
    return j.dump();
}

inline std::string num(double x) { return format_limit(x); }

/// Golden-section minimiser, independent of the derivative-based argmin.
template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, int iters = 200) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

inline Json estimate_json(const MCEstimate& e) { return to_json(e); }

}  // namespace detail

/// One verified claim. Deterministic checks leave `z` empty and use
/// `mc_mean` for the computed value.
struct Check {
    std::string claim;
    std::string paper_ref;
    double formula_value = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
    std::optional<double> z;
    bool pass = false;
    std::string rule;
};

struct SuiteReport {
    std::string suite;
    std::uint64_t seed = 0;
    Json model = Json::object();
    Json parameters = Json::object();
    std::vector<Check> checks;
    Json details = Json::object();

    bool pass() const {
        if (checks.empty()) return false;
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline Json to_json(const Check& c) {
    return {{"claim", c.claim},
            {"paper_ref", c.paper_ref},
            {"formula_value", json_number(c.formula_value)},
            {"mc_mean", json_number(c.mc_mean)},
            {"mc_stderr", json_number(c.mc_stderr)},
            {"z", c.z ? json_number(*c.z) : Json(nullptr)},
            {"pass", c.pass},
            {"rule", c.rule}};
}

inline Json to_json(const SuiteReport& r) {
    Json checks = Json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return {{"tool", std::string(tool_name)},
            {"version", std::string(tool_version)},
            {"suite", r.suite},
            {"seed", r.seed},
            {"model", r.model},
            {"parameters", r.parameters},
            {"pass", r.pass()},
            {"checks", checks},
            {"details", r.details}};
}

inline std::string report_text(const SuiteReport& r) { return to_json(r).dump(2) + "\n"; }

inline Check z_check(std::string claim, std::string ref, double formula, const MCEstimate& est, double limit = 3.0) {
    Check c{std::move(claim), std::move(ref), formula, est.mean, est.std_error, std::nullopt, false, ""};
    c.z = z_score(est.mean, formula, est.std_error);
    c.pass = std::abs(*c.z) <= limit;
    c.rule = "|z| <= " + detail::format_limit(limit);
    return c;
}

inline Check tolerance_check(std::string claim, std::string ref, double expected, double actual, double tol,
                             bool relative = false) {
    Check c{std::move(claim), std::move(ref), expected, actual, 0.0, std::nullopt, false, ""};
    const double scale = relative ? std::max(std::abs(expected), 1e-300) : 1.0;
    c.pass = std::abs(actual - expected) <= tol * scale;
    c.rule = std::string(relative ? "relative" : "absolute") + " error <= " + detail::format_limit(tol);
    return c;
}

inline Check flag_check(std::string claim, std::string ref, bool ok, std::string rule) {
    return {std::move(claim), std::move(ref), 1.0, ok ? 1.0 : 0.0, 0.0, std::nullopt, ok, std::move(rule)};
}


struct NamedModel {
    std::string name;
    ModelParams model;
};

inline Json models_echo(const std::vector<NamedModel>& models) {
    Json j = Json::object();
    for (const auto& m : models) j[m.name] = to_json(m.model);
    return j;
}

// ---------------------------------------------------------------------------

/// kappa calculus on each model: values at 0 and 1, convexity, root
/// certificates, Legendre duality and agreement with the Levy triplet.
inline SuiteReport verify_kappa(const std::vector<NamedModel>& models) {
    SuiteReport rep;
    rep.suite = "kappa";
    rep.model = models_echo(models);
    rep.parameters = {{"grid_points", 100}, {"laplace_q", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0}}};
    const std::string ref = "kappa-calculus";
    for (const auto& [name, p] : models) {
        validate_model(p);
        rep.checks.push_back(
            tolerance_check(name + ": kappa(0) = |K|", ref, p.K.total_mass().to_double(), kappa_at(p, 0.0), 1e-12));
        rep.checks.push_back(tolerance_check(name + ": kappa(1) = b + int (1-y) K(dy)", ref,
                                             p.b + p.K.first_moment().to_double(), kappa_at(p, 1.0), 1e-12));

        const auto dom = domain_bound(p);
        const auto roots = malthus_roots(p);
        const double lo = dom.closed ? dom.lower : dom.lower + 0.05;
        const double hi = std::max(lo + 4.0, roots.omega_plus.value_or(roots.argmin) + 2.0);
        const auto grid = detail::linspace(lo, hi, 100);
        double worst = HUGE_VAL;
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const double k0 = kappa_at(p, grid[i - 1]), k1 = kappa_at(p, grid[i]), k2 = kappa_at(p, grid[i + 1]);
            const double scale = std::max({std::abs(k0), std::abs(k1), std::abs(k2), 1.0});
            worst = std::min(worst, (k0 - 2.0 * k1 + k2) / scale);
        }
        Check conv{name + ": second differences on a 100-point grid are >= 0", ref, 0.0, worst, 0.0, std::nullopt,
                   worst >= -1e-8, "min relative second difference >= -1e-8"};
        rep.checks.push_back(conv);

        for (const auto& [label, root] : {std::pair{"omega_-", roots.omega_minus}, std::pair{"omega_+", roots.omega_plus}}) {
            if (!root) continue;
            rep.checks.push_back(
                tolerance_check(name + ": kappa(" + label + ") = 0", ref, 0.0, kappa_at(p, *root), 1e-10));
        }

        for (const double dq : {0.5, 1.5}) {
            const double q = roots.argmin + dq;
            const double r = kappa_d1(p, q);
            const auto leg = legendre(p, r);
            rep.checks.push_back(tolerance_check(name + ": r q - kappa*(r) = kappa(q) at q = " + detail::num(q), ref,
                                                 kappa_at(p, q), r * q - leg.kappa_star, 1e-9));
            rep.checks.push_back(
                tolerance_check(name + ": theta(kappa'(q)) = q at q = " + detail::num(q), ref, q, leg.theta, 1e-9));
        }

        const double omega = in_domain(p, 2.0) ? 2.0 : lo + 1.0;
        const auto ch = levy_characteristics(p, omega, false);
        double worst_rel = 0.0;
        for (const double q : rep.parameters["laplace_q"]) {
            const double want = kappa_at(p, omega + q) - kappa_at(p, omega);
            worst_rel = std::max(worst_rel, std::abs(laplace_exponent(ch, q) - want) / std::max(std::abs(want), 1e-300));
        }
        rep.checks.push_back({name + ": Levy triplet reproduces kappa(omega+q) - kappa(omega), omega = " +
                                  detail::num(omega),
                              ref, 0.0, worst_rel, 0.0, std::nullopt, worst_rel <= 1e-10, "max relative error <= 1e-10"});
        if (roots.inf_value < 0.0) {
            const double wk = roots.argmin;
            const auto killed = levy_characteristics(p, wk, true);
            double worst_k = 0.0;
            for (const double q : rep.parameters["laplace_q"]) {
                const double want = kappa_at(p, wk + q);
                worst_k = std::max(worst_k, std::abs(laplace_exponent(killed, q) - want) / std::max(std::abs(want), 1e-300));
            }
            rep.checks.push_back({name + ": killed triplet reproduces kappa(omega+q), omega = " + detail::num(wk), ref,
                                  0.0, worst_k, 0.0, std::nullopt, worst_k <= 1e-10, "max relative error <= 1e-10"});
        }
        rep.details[name] = {{"argmin", roots.argmin},
                             {"inf_kappa", roots.inf_value},
                             {"omega_minus", roots.omega_minus ? Json(*roots.omega_minus) : Json(nullptr)},
                             {"omega_plus", roots.omega_plus ? Json(*roots.omega_plus) : Json(nullptr)}};
    }
    return rep;
}

/// E[exp(q xi(t))] = exp(t Phi(q)) for the omega-tilted characteristics.
inline SuiteReport verify_levy(const std::vector<NamedModel>& models, double omega, const std::vector<double>& qs,
                               double t, std::size_t n, std::uint64_t seed, unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "levy";
    rep.seed = seed;
    rep.model = models_echo(models);
    rep.parameters = {{"omega", omega}, {"q", qs}, {"t", t}, {"n", n}};
    const RngStream rng{seed, 0};
    std::uint64_t stream = 0;
    for (const auto& [name, p] : models) {
        const auto ch = levy_characteristics(p, omega, false);
        for (const double q : qs) {
            const double phi = kappa_at(p, omega + q) - kappa_at(p, omega);
            const auto est = estimate_exp_moment(ch, q, t, n, rng.substream(stream++), threads);
            rep.checks.push_back(z_check(name + ": E exp(q xi(t)) = exp(t Phi(q)), q = " + detail::num(q),
                                         "levy-exponential-moment", std::exp(t * phi), est));
        }
    }
    return rep;
}

/// Branching estimator, spine estimator and exp(t kappa(q)) pairwise.
inline SuiteReport verify_homogeneous(const ModelParams& p, double t, const std::vector<double>& qs,
                                      std::size_t n_branching, std::size_t n_spine, double omega, std::uint64_t seed,
                                      unsigned threads = 0, SimCaps caps = {}) {
    SuiteReport rep;
    rep.suite = "homogeneous";
    rep.seed = seed;
    rep.model = to_json(p);
    caps.horizon = t;
    rep.parameters = {{"t", t},
                      {"q", qs},
                      {"n_branching", n_branching},
                      {"n_spine", n_spine},
                      {"spine_omega", omega},
                      {"max_events", caps.max_events},
                      {"min_size", caps.min_size}};
    const RngStream rng{seed, 0};
    const auto branch = replicate(
        n_branching, qs.size(), rng.substream(0),
        [&](const RngStream& r, std::span<double> out) {
            const auto trace = simulate_population(p, 1.0, caps, r);
            const auto sizes = snapshot(trace, t);
            for (std::size_t i = 0; i < qs.size(); ++i)
                for (const double x : sizes) out[i] += std::pow(x, qs[i]);
        },
        threads);
    const std::string ref = "homogeneous-mellin";
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const double q = qs[i];
        const double exact = homogeneous_mellin(p, q, t);
        const auto b = MCEstimate::from(branch[i]);
        const auto s = spine_estimator(p, omega, Power{q}, t, n_spine, rng.substream(1 + i), threads);
        const std::string tag = ", q = " + detail::num(q);
        rep.checks.push_back(z_check("branching vs exp(t kappa(q))" + tag, ref, exact, b));
        rep.checks.push_back(z_check("spine vs exp(t kappa(q))" + tag, ref, exact, s));
        MCEstimate diff{b.mean - s.mean, combined_stderr(b.std_error, s.std_error), n_branching, std::nullopt};
        auto c = z_check("branching vs spine" + tag, ref, 0.0, diff);
        c.rule += " (combined stderr)";
        rep.checks.push_back(c);
        rep.details["q=" + detail::num(q)] = {
            {"exact", exact}, {"branching", detail::estimate_json(b)}, {"spine", detail::estimate_json(s)}};
    }
    return rep;
}

/// Every particle size at every event time is at most x0 exp(d t).
inline SuiteReport verify_support(const ModelParams& p, std::size_t runs, double horizon, std::uint64_t seed,
                                  SimCaps caps = {}) {
    SuiteReport rep;
    rep.suite = "support";
    rep.seed = seed;
    rep.model = to_json(p);
    caps.horizon = horizon;
    rep.parameters = {{"runs", runs}, {"horizon", horizon}, {"relative_slack", 1e-12}};
    const ExtReal dd = drift_d(p);
    if (dd.is_infinite()) fail(ErrorCode::HypothesisFailed, "support bound needs a finite drift d");
    const double d = dd.value();
    const RngStream rng{seed, 0};
    std::uint64_t violations = 0, checked = 0, truncated = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < runs; ++i) {
        const auto trace = simulate_population(p, 1.0, caps, rng.substream(i));
        if (trace.truncated()) ++truncated;
        for (const auto& r : trace.particles) {
            const double end_size = r.end_reason == EndReason::frozen_small
                                        ? r.birth_size
                                        : growth_flow(r.birth_size, r.end_time - r.birth_time, trace.growth_rate, p.alpha).size;
            for (const auto& [s, tt] : {std::pair{r.birth_size, r.birth_time}, std::pair{end_size, r.end_time}}) {
                const double ratio = s / std::exp(d * tt);
                worst = std::max(worst, ratio);
                ++checked;
                if (ratio > 1.0 + 1e-12) ++violations;
            }
        }
    }
    rep.checks.push_back({"particles above exp(d t)", "support-bound", 0.0, static_cast<double>(violations), 0.0,
                          std::nullopt, violations == 0, "zero violations"});
    rep.details = {{"events_checked", checked}, {"max_ratio", worst}, {"truncated_runs", truncated}, {"d", d}};
    return rep;
}

/// E_1[X_+(t)^(k|alpha|)] against the moment polynomial, with a grid-halving
/// bias check on an independent stream.
inline SuiteReport verify_t2_suite(const ModelParams& p, const std::vector<double>& times, int k_max, std::size_t n,
                                   double grid_step, std::uint64_t seed, unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "t2";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"t", times}, {"k_max", k_max}, {"n", n}, {"grid_step", grid_step}, {"halved_grid_step", grid_step / 2}};
    const RngStream rng{seed, 0};
    const auto rows = verify_t2(p, k_max, times, n, grid_step, rng.substream(0), threads);
    const auto halved = verify_t2(p, k_max, times, n, grid_step / 2, rng.substream(1), threads);
    Json table = Json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.k == 0) continue;
        const std::string tag = "k = " + std::to_string(r.k) + ", t = " + detail::num(r.t);
        rep.checks.push_back(z_check("E_1[X_+(t)^(k|alpha|)] = moment polynomial, " + tag, "t2-moments", r.formula, r.mc));
        const auto& h = halved[i];
        MCEstimate diff{h.mc.mean - r.mc.mean, combined_stderr(h.mc.std_error, r.mc.std_error), n, std::nullopt};
        auto c = z_check("grid-halving bias, " + tag, "t2-moments", 0.0, diff);
        c.rule += " (combined stderr)";
        rep.checks.push_back(c);
        table.push_back({{"k", r.k}, {"t", r.t}, {"formula", r.formula}, {"mc", detail::estimate_json(r.mc)},
                         {"mc_halved", detail::estimate_json(h.mc)}});
    }
    rep.details["rows"] = table;
    return rep;
}

/// Entrance law from x_small, alpha < 0: E[X(t)^|alpha|] approaches the
/// gamma moment as x_small decreases.
inline SuiteReport verify_entrance_negative(const ModelParams& p, const std::vector<double>& x_smalls, double t,
                                            std::size_t n, double grid_step, std::uint64_t seed,
                                            double relative_slack = 0.05, unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "entrance";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"x_small", x_smalls}, {"t", t}, {"n", n}, {"grid_step", grid_step},
                      {"relative_slack", relative_slack}};
    if (x_smalls.empty()) fail(ErrorCode::InvalidArgument, "need at least one x_small");
    const RngStream rng{seed, 0};
    const double target = gamma_moment(p, 1, t);
    std::vector<MCEstimate> est;
    Json rows = Json::array();
    for (std::size_t i = 0; i < x_smalls.size(); ++i) {
        const auto r = verify_entrance_moments(p, 1, t, x_smalls[i], n, grid_step, rng.substream(i), threads);
        est.push_back(r[1].mc);
        rows.push_back({{"x_small", x_smalls[i]}, {"mc", detail::estimate_json(r[1].mc)}, {"gap", r[1].mc.mean - target}});
    }
    bool monotone = true;
    for (std::size_t i = 1; i < est.size(); ++i)
        if (!(std::abs(est[i].mean - target) < std::abs(est[i - 1].mean - target))) monotone = false;
    const std::string ref = "entrance-moments";
    rep.checks.push_back(flag_check("gap to the gamma moment decreases with x_small", ref, monotone,
                                    "|gap| strictly decreasing along x_small"));
    const auto& last = est.back();
    const double allowed = std::max(3.0 * last.std_error, relative_slack * std::abs(target));
    Check fin{"final gap to the gamma moment, x_small = " + detail::num(x_smalls.back()), ref, target, last.mean,
              last.std_error, z_score(last.mean, target, last.std_error), std::abs(last.mean - target) <= allowed,
              "|gap| <= max(3 stderr, " + detail::num(relative_slack) + " |target|)"};
    rep.checks.push_back(fin);
    rep.details["target"] = target;
    rep.details["rows"] = rows;
    if (est.size() >= 2) {
        // linear extrapolation in x_small to 0
        const std::size_t a = est.size() - 2, b = est.size() - 1;
        const double xa = x_smalls[a], xb = x_smalls[b];
        rep.details["extrapolated_to_zero"] = est[b].mean - xb * (est[a].mean - est[b].mean) / (xa - xb);
    }
    return rep;
}

/// alpha > 0: E[X(t)^(alpha(1-eps))] from the approximate entrance law scales
/// like t^(eps-1).
inline SuiteReport verify_entrance_slope(const ModelParams& p, double eps, const std::vector<double>& times,
                                         double x_small, std::size_t n, double grid_step, std::uint64_t seed,
                                         double tolerance = 0.15, unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "entrance-slope";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"eps", eps}, {"t", times}, {"x_small", x_small}, {"n", n}, {"grid_step", grid_step},
                      {"tolerance", tolerance}};
    if (!(p.alpha > 0.0)) fail(ErrorCode::WrongSign, "slope check needs alpha > 0");
    if (times.size() < 2) fail(ErrorCode::InvalidArgument, "need at least two times");
    const double power = p.alpha * (1.0 - eps);
    const RngStream rng{seed, 0};
    std::vector<double> lx, ly;
    Json rows = Json::array();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const auto est = monte_carlo(
            n, rng.substream(i), [&](const RngStream& r) { return std::pow(entrance_sample(p, t, x_small, grid_step, r), power); },
            threads);
        lx.push_back(std::log(t));
        ly.push_back(std::log(est.mean));
        rows.push_back({{"t", t}, {"mc", detail::estimate_json(est)}});
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    rep.checks.push_back(tolerance_check("slope of log E[X(t)^(alpha(1-eps))] against log t", "entrance-scaling",
                                         eps - 1.0, slope, tolerance));
    rep.details["rows"] = rows;
    rep.details["slope"] = slope;
    return rep;
}

/// Killed pssMp started at 1: P(sup X > x) = x^-(omega_+ - omega) and
/// E int X^p = 1 / -kappa(p - alpha + omega).
inline SuiteReport verify_suplaw(const ModelParams& p, double omega, const std::vector<double>& levels, double power,
                                 std::size_t n, double grid_step, std::uint64_t seed, unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "suplaw";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"omega", omega}, {"levels", levels}, {"p", power}, {"n", n}, {"grid_step", grid_step}};
    const auto roots = malthus_roots(p);
    if (!roots.omega_plus || !(kappa_at(p, omega) < 0.0))
        fail(ErrorCode::HypothesisFailed, "needs kappa(omega) < 0 and a root omega_+");
    const double k_int = kappa_at(p, power - p.alpha + omega);
    if (!(k_int < 0.0)) fail(ErrorCode::HypothesisFailed, "needs kappa(p - alpha + omega) < 0");
    const RngStream rng{seed, 0};
    const double grid0[] = {0.0};
    PssmpOptions opts;
    opts.bridge_maxima = true;
    opts.run_to_absorption = true;
    const auto stats = replicate(
        n, levels.size() + 1, rng,
        [&](const RngStream& r, std::span<double> out) {
            const auto path = simulate_pssmp(p, omega, 1.0, grid0, grid_step, r, opts);
            const double sup = path_sup(path);
            for (std::size_t i = 0; i < levels.size(); ++i) out[i] = sup > levels[i] ? 1.0 : 0.0;
            out[levels.size()] = path_power_integral(path, power);
        },
        threads);
    const double expo = *roots.omega_plus - omega;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double prob = std::pow(levels[i], -expo);
        MCEstimate est{stats[i].mean(), std::sqrt(prob * (1.0 - prob) / static_cast<double>(n)), n, std::nullopt};
        auto c = z_check("P(sup X > x) = x^-(omega_+ - omega), x = " + detail::num(levels[i]), "killed-sup-law", prob, est);
        c.rule += " (binomial stderr)";
        rep.checks.push_back(c);
    }
    rep.checks.push_back(z_check("E int X^p dt = 1 / -kappa(p - alpha + omega)", "killed-occupation", -1.0 / k_int,
                                 MCEstimate::from(stats[levels.size()])));
    rep.details["omega_plus"] = *roots.omega_plus;
    return rep;
}

/// Number of particles in [lo, hi] exceeds the top threshold before the caps.
inline SuiteReport verify_explosion(const ModelParams& p, double lo, double hi, std::vector<std::size_t> thresholds,
                                    const SimCaps& caps, std::size_t runs, double required_fraction,
                                    std::uint64_t seed) {
    SuiteReport rep;
    rep.suite = "explode";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"interval", {lo, hi}}, {"thresholds", thresholds},   {"runs", runs},
                      {"max_events", caps.max_events}, {"min_size", caps.min_size}, {"horizon", caps.horizon},
                      {"required_fraction", required_fraction}};
    ExplosionConfig cfg;
    cfg.model = p;
    cfg.lo = lo;
    cfg.hi = hi;
    cfg.thresholds = std::move(thresholds);
    cfg.caps = caps;
    cfg.runs = runs;
    const auto res = explosion_experiment(cfg, RngStream{seed, 0});

    const std::string ref = "explosion";
    rep.checks.push_back(flag_check("drift condition E log(1-Y) + c < 0 < E log Y + c", ref, true,
                                    "checked before simulation"));
    const auto [xo, vo] = detail::golden_min([&](double q) { return kappa_at(p, q); }, 0.0, 20.0);
    rep.checks.push_back(tolerance_check("inf kappa against a golden-section oracle", ref, vo, res.inf_kappa, 1e-3));
    rep.checks.push_back(flag_check("inf kappa > 0", ref, res.inf_kappa > 0.0, "inf kappa > 0"));
    const double needed = std::ceil(required_fraction * static_cast<double>(runs));
    rep.checks.push_back({"runs whose count exceeds " + std::to_string(cfg.thresholds.back()) + " before the caps", ref,
                          needed, static_cast<double>(res.runs_exceeding_top), 0.0, std::nullopt,
                          static_cast<double>(res.runs_exceeding_top) >= needed,
                          "count >= " + detail::num(needed)});

    Json run_rows = Json::array();
    std::size_t capped = 0;
    for (const auto& r : res.runs) {
        Json fe = Json::array();
        for (const auto& f : r.first_exceed) fe.push_back(f ? Json(*f) : Json(nullptr));
        if (r.summary.end == RunEnd::capped) ++capped;
        run_rows.push_back({{"max_count", r.max_count},
                            {"max_count_time", r.max_time},
                            {"first_exceed", fe},
                            {"end", std::string(to_string(r.summary.end))},
                            {"events", r.summary.events},
                            {"frozen", r.summary.frozen},
                            {"truncated_at", r.summary.truncated_at ? Json(*r.summary.truncated_at) : Json(nullptr)}});
    }
    rep.details = {{"inf_kappa", res.inf_kappa},
                   {"argmin", res.argmin},
                   {"oracle_argmin", xo},
                   {"growth_rate", res.growth_rate},
                   {"mean_log_small", res.mean_log_small},
                   {"mean_log_large", res.mean_log_large},
                   {"capped_runs", capped},
                   {"runs", run_rows}};
    return rep;
}

/// t^-1 ln mu_t((e^(tr), inf)) within `tolerance` of -kappa*(r).
inline SuiteReport verify_tails(const ModelParams& p, double r, double t, std::size_t n, std::uint64_t seed,
                                double tolerance = 0.2, unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "tails";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"r", r}, {"t", t}, {"n", n}, {"tolerance", tolerance}};
    const auto est = tail_estimate(p, r, t, n, RngStream{seed, 0}, threads);
    auto c = tolerance_check("t^-1 ln mu_t(e^(tr), inf) against -kappa*(r)", "large-deviations", est.target,
                             est.estimate.mean, tolerance);
    c.mc_stderr = est.estimate.std_error;
    rep.checks.push_back(c);
    rep.details = {{"theta", est.theta}, {"tilt_omega", est.omega}, {"hit_fraction", est.hit_fraction},
                   {"estimate", detail::estimate_json(est.estimate)}};
    return rep;
}

/// Spine estimate of <mu_t, f> against the local limit asymptotic.
inline SuiteReport verify_clt(const ModelParams& p, const TestFunction& f, double t, std::size_t n, std::uint64_t seed,
                              double tolerance = 0.25, unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "clt";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"f", describe(f)}, {"t", t}, {"n", n}, {"tolerance", tolerance}};
    const auto res = clt_check(p, f, t, n, RngStream{seed, 0}, threads);
    auto c = tolerance_check("spine estimate of <mu_t, f> against the local limit asymptotic", "local-clt",
                             res.asymptotic, res.spine.mean, tolerance, true);
    c.mc_stderr = res.spine.std_error;
    rep.checks.push_back(c);
    rep.details = {{"theta0", res.profile.theta0},
                   {"kappa_theta0", res.profile.kappa_at_theta0},
                   {"kappa_pp", res.profile.kappa_pp},
                   {"relative_error", res.relative_error},
                   {"spine", detail::estimate_json(res.spine)}};
    return rep;
}

/// E_1[f(t^(-1/|alpha|) X_+(t))] approaches E_0[f(X_+(1))].
inline SuiteReport verify_rescaling(const ModelParams& p, const std::vector<double>& times, const TestFunction& f,
                                    std::size_t n, double x_small, double grid_step, std::uint64_t seed,
                                    unsigned threads = 0) {
    SuiteReport rep;
    rep.suite = "rescaling";
    rep.seed = seed;
    rep.model = to_json(p);
    rep.parameters = {{"t", times}, {"f", describe(f)}, {"n", n}, {"x_small", x_small}, {"grid_step", grid_step}};
    const auto res = rescaling_check(p, times, f, n, x_small, grid_step, RngStream{seed, 0}, threads);
    const std::string ref = "rescaling-limit";
    rep.checks.push_back(flag_check("|gap| to the entrance target decreases in t", ref, res.gap_decreasing,
                                    "|gap| strictly decreasing along t"));
    const auto& last = res.rows.back();
    MCEstimate diff{last.gap, last.gap_stderr, n, std::nullopt};
    auto c = z_check("final gap, t = " + detail::num(last.t), ref, 0.0, diff);
    c.rule += " (combined stderr)";
    rep.checks.push_back(c);
    Json rows = Json::array();
    for (const auto& r : res.rows)
        rows.push_back({{"t", r.t}, {"left", detail::estimate_json(r.left)}, {"gap", r.gap}, {"gap_stderr", r.gap_stderr}});
    rep.details = {{"target", detail::estimate_json(res.target)}, {"rows", rows}};
    return rep;
}

}  // namespace gfrag
