#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfrag/gfrag.hpp"

namespace {

using namespace gfrag;

constexpr int exit_ok = 0;
constexpr int exit_invalid = 2;
constexpr int exit_failed = 3;

struct Flags {
    std::string model;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> n;
    std::vector<double> t, q, x_small, levels;
    std::vector<int> k;
    std::optional<double> r, omega, x0, grid_step, horizon, min_size, alpha_override, eps, power;
    std::optional<std::uint64_t> max_events, runs;
    std::optional<std::string> f, out;
    std::optional<unsigned> threads;
    std::string suite;
};

void add_common(CLI::App* app, Flags& fl) {
    app->add_option("--model", fl.model, "model JSON file");
    app->add_option("--config", fl.config, "run configuration JSON file");
    app->add_option("--seed", fl.seed, "RNG seed");
    app->add_option("--n", fl.n, "number of replicas");
    app->add_option("--t", fl.t, "time(s), comma separated")->delimiter(',');
    app->add_option("--alpha-override", fl.alpha_override, "replace the model's alpha");
    app->add_option("--out", fl.out, "output file (default: standard output)");
    app->add_option("--threads", fl.threads, "worker threads (default: GFRAG_THREADS or 1)");
    app->add_option("--grid-step", fl.grid_step, "simulation grid step");
}

/// Resolved configuration: --config first, explicit flags on top.
RunConfig resolve(const Flags& fl) {
    RunConfig c;
    bool have_model = false;
    if (!fl.config.empty()) {
        const auto path = std::filesystem::path(fl.config);
        c = parse_config(read_text_file(fl.config), path.has_parent_path() ? path.parent_path() : ".");
        have_model = true;
    } else {
        c.seed = 0;
    }
    if (!fl.model.empty()) {
        c.model = load_model_file(fl.model);
        c.model_path = fl.model;
        have_model = true;
    }
    if (!have_model) fail(ErrorCode::ConfigError, "no model given (use --model or --config)");
    if (fl.seed) c.seed = *fl.seed;
    if (fl.n) c.n = *fl.n;
    if (!fl.t.empty()) c.t = fl.t;
    if (!fl.q.empty()) c.q = fl.q;
    if (!fl.k.empty()) c.k = fl.k;
    if (!fl.x_small.empty()) c.x_small = fl.x_small;
    if (fl.r) c.r = fl.r;
    if (fl.omega) c.omega = fl.omega;
    if (fl.x0) c.x0 = fl.x0;
    if (fl.grid_step) c.grid_step = *fl.grid_step;
    if (fl.horizon) c.horizon = fl.horizon;
    if (fl.min_size) c.min_size = *fl.min_size;
    if (fl.max_events) c.max_events = *fl.max_events;
    if (fl.f) c.f = fl.f;
    if (fl.out) c.out = fl.out;
    if (fl.threads) c.threads = *fl.threads;
    if (fl.alpha_override) c.model.alpha = *fl.alpha_override;
    validate_model(c.model);
    if (!(c.grid_step > 0.0)) fail(ErrorCode::InvalidArgument, "grid step must be positive");
    return c;
}

std::uint64_t require_seed(const Flags& fl, const RunConfig& c) {
    if (!fl.seed && fl.config.empty()) fail(ErrorCode::ConfigError, "a seed is required (--seed)");
    return c.seed;
}

void emit(const RunConfig& c, const std::string& content) {
    if (c.out) write_file_atomic(*c.out, content);
    else std::cout << content;
}

CsvTable csv_with_header(const RunConfig& c, std::vector<std::string> columns, std::optional<std::uint64_t> seed) {
    CsvTable t(std::move(columns));
    t.comment("tool", std::string(tool_name) + " " + std::string(tool_version));
    t.comment("model", to_json(c.model).dump());
    t.comment("seed", seed ? std::to_string(*seed) : "none");
    return t;
}

Json json_header(const RunConfig& c, std::optional<std::uint64_t> seed) {
    return {{"tool", std::string(tool_name)},
            {"version", std::string(tool_version)},
            {"seed", seed ? Json(*seed) : Json(nullptr)},
            {"model", to_json(c.model)}};
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

int cmd_kappa(const Flags& fl) {
    const auto c = resolve(fl);
    const auto qs = c.q.empty() ? std::vector<double>{0.0, 1.0, 2.0} : c.q;
    auto table = csv_with_header(c, {"q", "kappa", "kappa_d1", "kappa_d2"}, std::nullopt);
    for (const double q : qs) {
        const auto r = kappa(c.model, q);
        table.row({format_double(q), format_double(r.value.to_double()), optional_cell(r.first_derivative),
                   optional_cell(r.second_derivative)});
    }
    emit(c, table.str());
    return exit_ok;
}

int cmd_roots(const Flags& fl) {
    const auto c = resolve(fl);
    const auto r = malthus_roots(c.model);
    Json j = json_header(c, std::nullopt);
    j["omega_minus"] = r.omega_minus ? Json(*r.omega_minus) : Json(nullptr);
    j["omega_plus"] = r.omega_plus ? Json(*r.omega_plus) : Json(nullptr);
    j["inf_value"] = r.inf_value;
    j["argmin"] = r.argmin;
    j["degenerate_root"] = r.degenerate_root;
    emit(c, j.dump(2) + "\n");
    return exit_ok;
}

int cmd_legendre(const Flags& fl) {
    const auto c = resolve(fl);
    if (!c.r) fail(ErrorCode::InvalidArgument, "legendre needs --r");
    const auto l = legendre(c.model, *c.r);
    Json j = json_header(c, std::nullopt);
    j["r"] = *c.r;
    j["theta"] = l.theta;
    j["kappa_star"] = l.kappa_star;
    emit(c, j.dump(2) + "\n");
    return exit_ok;
}

double default_omega(const RunConfig& c) {
    if (c.omega) return *c.omega;
    const auto r = malthus_roots(c.model);
    if (c.model.alpha > 0.0 && r.omega_minus) return *r.omega_minus;
    if (r.omega_plus) return *r.omega_plus;
    fail(ErrorCode::HypothesisFailed, "no Malthusian exponent; pass --omega");
}

int cmd_sim_levy(const Flags& fl) {
    const auto c = resolve(fl);
    const auto seed = require_seed(fl, c);
    const double omega = default_omega(c);
    const double horizon = c.t.empty() ? 1.0 : c.t.back();
    const bool killed = kappa_at(c.model, omega) < 0.0;
    const auto ch = levy_characteristics(c.model, omega, killed);
    const auto path = simulate_levy(ch, 0.0, horizon, c.grid_step, RngStream{seed, 0});
    auto table = csv_with_header(c, {"t", "xi", "is_jump"}, seed);
    table.comment("omega", format_double(omega));
    if (path.kill_time) table.comment("killed_at", format_double(*path.kill_time));
    for (std::size_t i = 0; i < path.size(); ++i)
        table.row({format_double(path.times[i]), format_double(path.values[i]), path.jump_flags[i] ? "1" : "0"});
    emit(c, table.str());
    return exit_ok;
}

int cmd_sim_pssmp(const Flags& fl) {
    const auto c = resolve(fl);
    const auto seed = require_seed(fl, c);
    const double omega = default_omega(c);
    std::vector<double> grid = c.t;
    if (grid.size() <= 1) {
        const double end = grid.empty() ? 1.0 : grid.back();
        grid.clear();
        for (int i = 0; i <= 100; ++i) grid.push_back(end * i / 100.0);
    }
    const auto path = simulate_pssmp(c.model, omega, c.x0.value_or(1.0), grid, c.grid_step, RngStream{seed, 0});
    auto table = csv_with_header(c, {"t", "X", "absorbed"}, seed);
    table.comment("omega", format_double(omega));
    for (std::size_t i = 0; i < path.values.size(); ++i) {
        const bool gone = path.absorbed && path.times[i] >= path.absorbed->time;
        table.row({format_double(path.times[i]), format_double(path.values[i]), gone ? "1" : "0"});
    }
    emit(c, table.str());
    return exit_ok;
}

int cmd_sim_branching(const Flags& fl) {
    const auto c = resolve(fl);
    const auto seed = require_seed(fl, c);
    SimCaps caps{c.max_events, c.min_size, c.horizon.value_or(c.t.empty() ? 1.0 : c.t.back())};
    const auto trace = simulate_population(c.model, c.x0.value_or(1.0), caps, RngStream{seed, 0});
    if (!c.t.empty()) {
        auto table = csv_with_header(c, {"t", "size"}, seed);
        for (const double t : c.t)
            for (const double x : snapshot(trace, t)) table.row({t, x});
        emit(c, table.str());
        return exit_ok;
    }
    auto table = csv_with_header(c, {"id", "parent_id", "birth_time", "birth_size", "end_time", "end_reason"}, seed);
    table.comment("run_end", std::string(to_string(trace.summary.end)));
    for (const auto& r : trace.particles)
        table.row({std::to_string(r.id), std::to_string(r.parent_id), format_double(r.birth_time),
                   format_double(r.birth_size), format_double(r.end_time), std::string(to_string(r.end_reason))});
    emit(c, table.str());
    return exit_ok;
}

TestFunction test_function_or(const RunConfig& c, const char* fallback) {
    return parse_test_function(c.f.value_or(fallback));
}

std::vector<double> or_default(const std::vector<double>& v, std::vector<double> d) { return v.empty() ? d : v; }

int cmd_verify(const Flags& fl) {
    const auto c = resolve(fl);
    const auto& p = c.model;
    const std::uint64_t seed = fl.suite == "kappa" ? c.seed : require_seed(fl, c);
    const auto n = static_cast<std::size_t>(c.n);
    const unsigned th = c.threads;
    SuiteReport rep;
    if (fl.suite == "kappa") {
        rep = verify_kappa({{"model", p}});
    } else if (fl.suite == "levy") {
        rep = verify_levy({{"model", p}}, c.omega.value_or(2.0), or_default(c.q, {0.5, 1.0, 2.0}),
                          c.t.empty() ? 1.0 : c.t.front(), n, seed, th);
    } else if (fl.suite == "homogeneous") {
        SimCaps caps{c.max_events, c.min_size, 1.0};
        rep = verify_homogeneous(p, c.t.empty() ? 1.0 : c.t.front(), or_default(c.q, {0.0, 2.0, 3.0}), n, 10 * n,
                                 c.omega.value_or(2.0), seed, th, caps);
    } else if (fl.suite == "support") {
        SimCaps caps{c.max_events, c.min_size, 2.0};
        rep = verify_support(p, n, c.horizon.value_or(c.t.empty() ? 2.0 : c.t.front()), seed, caps);
    } else if (fl.suite == "t2") {
        const int k_max = c.k.empty() ? 2 : *std::max_element(c.k.begin(), c.k.end());
        rep = verify_t2_suite(p, or_default(c.t, {0.5, 1.0}), k_max, n, c.grid_step, seed, th);
    } else if (fl.suite == "entrance") {
        if (p.alpha > 0.0)
            rep = verify_entrance_slope(p, fl.eps.value_or(0.5), or_default(c.t, {0.5, 1.0, 2.0}),
                                        c.x_small.empty() ? 0.01 : c.x_small.front(), n, c.grid_step, seed, 0.15, th);
        else
            rep = verify_entrance_negative(p, or_default(c.x_small, {0.1, 0.01}), c.t.empty() ? 1.0 : c.t.front(), n,
                                           c.grid_step, seed, 0.05, th);
    } else if (fl.suite == "suplaw") {
        rep = verify_suplaw(p, c.omega.value_or(1.0), or_default(fl.levels, {2.0, 4.0, 8.0}), fl.power.value_or(1.5), n,
                            c.grid_step, seed, th);
    } else if (fl.suite == "clt") {
        rep = verify_clt(p, test_function_or(c, "indicator:0.8:1.25"), c.t.empty() ? 25.0 : c.t.front(), n, seed, 0.25, th);
    } else if (fl.suite == "tails") {
        rep = verify_tails(p, c.r.value_or(1.0), c.t.empty() ? 20.0 : c.t.front(), n, seed, 0.2, th);
    } else if (fl.suite == "rescaling") {
        rep = verify_rescaling(p, or_default(c.t, {1.0, 4.0, 16.0}), test_function_or(c, "clipped:1:1"), n,
                               c.x_small.empty() ? 1e-3 : c.x_small.front(), c.grid_step, seed, th);
    } else {
        fail(ErrorCode::InvalidArgument, "unknown suite " + fl.suite);
    }
    emit(c, report_text(rep));
    if (!rep.pass()) {
        std::cerr << "verify " << fl.suite << ": FAIL\n";
        return exit_failed;
    }
    return exit_ok;
}

int cmd_explode(const Flags& fl) {
    const auto c = resolve(fl);
    const auto seed = require_seed(fl, c);
    const std::vector<double> interval = or_default(fl.levels, {1.0, 2.0});
    if (interval.size() != 2) fail(ErrorCode::InvalidArgument, "--interval needs two values lo,hi");
    SimCaps caps{c.max_events, c.min_size, c.horizon.value_or(10.0)};
    const auto rep = verify_explosion(c.model, interval[0], interval[1], {10, 100}, caps,
                                      static_cast<std::size_t>(fl.runs.value_or(100)), 0.9, seed);
    emit(c, report_text(rep));
    return rep.pass() ? exit_ok : exit_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Growth-fragmentation analytics, simulation and verification"};
    app.set_version_flag("--version", std::string(gfrag::tool_version));
    app.require_subcommand(1);
    Flags fl;

    auto* kap = app.add_subcommand("kappa", "cumulant function and its derivatives (CSV)");
    add_common(kap, fl);
    kap->add_option("--q", fl.q, "orders, comma separated")->delimiter(',');

    auto* roo = app.add_subcommand("roots", "Malthusian exponents and inf kappa (JSON)");
    add_common(roo, fl);

    auto* leg = app.add_subcommand("legendre", "theta(r) and kappa*(r) (JSON)");
    add_common(leg, fl);
    leg->add_option("--r", fl.r, "slope")->required();

    auto* slv = app.add_subcommand("sim-levy", "one Levy path (CSV t, xi, is_jump)");
    add_common(slv, fl);
    slv->add_option("--omega", fl.omega, "tilt (default: a Malthusian exponent)");

    auto* spm = app.add_subcommand("sim-pssmp", "one pssMp path (CSV t, X, absorbed)");
    add_common(spm, fl);
    spm->add_option("--omega", fl.omega, "tilt (default: a Malthusian exponent)");
    spm->add_option("--x0", fl.x0, "starting size");

    auto* sbr = app.add_subcommand("sim-branching", "particle trace, or snapshots at --t (CSV)");
    add_common(sbr, fl);
    sbr->add_option("--x0", fl.x0, "starting size");
    sbr->add_option("--horizon", fl.horizon, "simulation horizon");
    sbr->add_option("--min-size", fl.min_size, "freeze particles below this size");
    sbr->add_option("--max-events", fl.max_events, "event cap");

    auto* ver = app.add_subcommand("verify", "run a verification suite (JSON report)");
    add_common(ver, fl);
    ver->add_option("suite", fl.suite, "suite")
        ->required()
        ->check(CLI::IsMember({"homogeneous", "t2", "suplaw", "entrance", "clt", "tails", "rescaling", "levy",
                               "support", "kappa"}));
    ver->add_option("--q", fl.q, "orders, comma separated")->delimiter(',');
    ver->add_option("--k", fl.k, "moment indices, comma separated")->delimiter(',');
    ver->add_option("--r", fl.r, "slope (tails)");
    ver->add_option("--omega", fl.omega, "tilt");
    ver->add_option("--x-small", fl.x_small, "entrance starting sizes, comma separated")->delimiter(',');
    ver->add_option("--levels", fl.levels, "sup-law levels, comma separated")->delimiter(',');
    ver->add_option("--power", fl.power, "occupation power (suplaw)");
    ver->add_option("--eps", fl.eps, "entrance slope parameter (alpha > 0)");
    ver->add_option("--f", fl.f, "test function: power:q | indicator:lo:hi | clipped:q:cap | linear:x,y;x,y");
    ver->add_option("--horizon", fl.horizon, "horizon (support)");
    ver->add_option("--min-size", fl.min_size, "freeze particles below this size");
    ver->add_option("--max-events", fl.max_events, "event cap");

    auto* exp = app.add_subcommand("explode", "occupancy explosion experiment (JSON report)");
    add_common(exp, fl);
    exp->add_option("--interval", fl.levels, "lo,hi")->delimiter(',');
    exp->add_option("--runs", fl.runs, "number of runs");
    exp->add_option("--horizon", fl.horizon, "simulation horizon");
    exp->add_option("--min-size", fl.min_size, "freeze particles below this size");
    exp->add_option("--max-events", fl.max_events, "event cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_invalid;
    }

    try {
        if (kap->parsed()) return cmd_kappa(fl);
        if (roo->parsed()) return cmd_roots(fl);
        if (leg->parsed()) return cmd_legendre(fl);
        if (slv->parsed()) return cmd_sim_levy(fl);
        if (spm->parsed()) return cmd_sim_pssmp(fl);
        if (sbr->parsed()) return cmd_sim_branching(fl);
        if (ver->parsed()) return cmd_verify(fl);
        if (exp->parsed()) return cmd_explode(fl);
    } catch (const gfrag::Error& e) {
        std::cerr << "gfrag: " << e.what() << "\n";
        return exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "gfrag: " << e.what() << "\n";
        return exit_invalid;
    }
    return exit_invalid;
}
