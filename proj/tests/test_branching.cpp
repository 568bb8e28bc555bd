#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gfrag/branching.hpp"
#include "gfrag/pssmp.hpp"
#include "test_models.hpp"

using namespace gfrag;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bool within_3se(const MCEstimate& e, double target) { return std::abs(e.mean - target) <= 3.0 * e.std_error; }

MCEstimate mean_moment(const ModelParams& p, double q, double t, std::size_t n, std::uint64_t seed) {
    const SimCaps caps{1'000'000, 1e-12, t};
    return monte_carlo(
        n, RngStream{seed, 0},
        [&](const RngStream& r) { return empirical_moment(simulate_population(p, 1.0, caps, r), t, q); }, 1);
}

}  // namespace

TEST_CASE("growth flow closed forms") {
    CHECK_THAT(growth_flow(1.0, 2.0, 0.5, 0.0).size, WithinRel(std::exp(1.0), 1e-15));
    CHECK_THAT(growth_flow(1.0, 2.0, 0.5, -1.0).size, WithinRel(2.0, 1e-15));
    CHECK_THAT(growth_flow(3.0, 0.7, -2.0, -1.0).size, WithinRel(1.6, 1e-14));

    const auto g = growth_flow(1.0, 0.5, 1.0, 1.0);
    CHECK_THAT(g.size, WithinRel(2.0, 1e-15));
    REQUIRE(g.blowup_time);
    CHECK_THAT(*g.blowup_time, WithinRel(1.0, 1e-15));
    CHECK(std::isinf(growth_flow(1.0, 1.0, 1.0, 1.0).size));
    CHECK(std::isinf(growth_flow(1.0, 3.0, 1.0, 1.0).size));
    CHECK_FALSE(blowup_time(1.0, -1.0, 1.0));
    CHECK_FALSE(blowup_time(1.0, 1.0, -1.0));

    // shrinking flow reaches 0
    CHECK(growth_flow(1.0, 5.0, -0.5, -1.0).size == 0.0);
}

TEST_CASE("growth flow solves the ODE") {
    const double c = 0.8, x0 = 1.3, h = 1e-5;
    for (const double alpha : {-1.5, -0.5, 0.0, 0.4}) {
        for (const double t : {0.1, 0.5}) {
            const double x = growth_flow(x0, t, c, alpha).size;
            const double dx = (growth_flow(x0, t + h, c, alpha).size - growth_flow(x0, t - h, c, alpha).size) / (2 * h);
            CHECK_THAT(dx, WithinRel(c * std::pow(x, alpha + 1.0), 1e-7));
        }
    }
}

TEST_CASE("next split time closed forms") {
    CHECK(next_split_time(1.0, 0.5, 0.0, 1.0, 0.7) == 0.7);
    CHECK_THAT(*next_split_time(1.0, 0.5, -1.0, 1.0, 1.0), WithinRel(2.0 * (std::exp(0.5) - 1.0), 1e-14));
    CHECK_THAT(*next_split_time(2.0, 0.0, 2.0, 1.0, 1.0), WithinRel(0.25, 1e-15));
    CHECK_FALSE(next_split_time(1.0, 0.5, -1.0, 0.0, 1.0));
}

TEST_CASE("next split time matches a numerical root of the integrated rate") {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    struct Case {
        double x0, c, alpha, rate, e;
    };
    for (const auto& k : {Case{1.0, 0.5, -1.0, 1.0, 1.0}, Case{0.3, 0.5, -1.0, 2.0, 0.4}, Case{2.0, -0.3, 0.5, 1.5, 0.9},
                          Case{1.0, 1.0, 1.0, 1.0, 0.6}, Case{0.5, -1.0, -2.0, 1.0, 2.0}}) {
        auto lambda = [&](double t) {
            return k.rate * GK::integrate([&](double s) { return std::pow(growth_flow(k.x0, s, k.c, k.alpha).size, k.alpha); },
                                          0.0, t, 15, 1e-14);
        };
        double lo = 0.0, hi = 1e-3;
        const double cap = blowup_time(k.x0, k.c, k.alpha).value_or(1e6);
        while (lambda(std::min(hi, cap * (1 - 1e-12))) < k.e) hi *= 2.0;
        hi = std::min(hi, cap);
        for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
            const double mid = 0.5 * (lo + hi);
            (lambda(mid) < k.e ? lo : hi) = mid;
        }
        const auto t = next_split_time(k.x0, k.c, k.alpha, k.rate, k.e);
        REQUIRE(t);
        CHECK_THAT(*t, WithinRel(0.5 * (lo + hi), 1e-9));
    }
}

TEST_CASE("Config A: mean particle count is e at t = 1") {
    const auto est = mean_moment(models::config_a(), 0.0, 1.0, 10'000, 901);
    INFO(est.mean << " +- " << est.std_error);
    CHECK(within_3se(est, std::exp(1.0)));
}

TEST_CASE("Config A: homogeneous Mellin identity for q in {2, 3}") {
    const auto p = models::config_a();
    for (const double q : {2.0, 3.0}) {
        const auto est = mean_moment(p, q, 1.0, 10'000, 902 + static_cast<std::uint64_t>(q));
        INFO("q=" << q << " " << est.mean << " +- " << est.std_error);
        CHECK(within_3se(est, std::exp(kappa_at(p, q))));
    }
}

TEST_CASE("support bound: sizes never exceed e^{dt}") {
    const auto p = models::config_a();
    const double d = drift_d(p).value();
    const SimCaps caps{1'000'000, 1e-12, 3.0};
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto tr = simulate_population(p, 1.0, caps, RngStream{903, s});
        for (const double t : {0.5, 1.0, 2.0, 3.0})
            for (const double x : snapshot(tr, t)) REQUIRE(x <= std::exp(d * t) * (1.0 + 1e-12));
    }
}

TEST_CASE("splits are binary, conservative and time consistent") {
    const SimCaps caps{200'000, 1e-6, 2.0};
    for (const auto& p : {models::config_a(), models::config_c(), ModelParams{0.0, 0.1, -0.5, {{{0.6, 0.3}, {0.9, 0.7}}, {}}},
                          ModelParams{0.0, -0.2, 0.0, {{{0.8, 0.5}}, PowerDensity{0.4, 0.5}}}}) {
        const auto tr = simulate_population(p, 1.0, caps, RngStream{904, 0});
        REQUIRE(tr.particles.size() > 1);
        CHECK(tr.particles.front().parent_id == -1);
        for (const auto& r : tr.particles) {
            REQUIRE(r.birth_size > 0.0);
            REQUIRE(r.end_time >= r.birth_time);
            if (!r.has_children()) {
                CHECK(r.end_reason != EndReason::split);
                continue;
            }
            REQUIRE(r.end_reason == EndReason::split);
            const auto& l = tr.particles[static_cast<std::size_t>(r.first_child)];
            const auto& rr = tr.particles[static_cast<std::size_t>(r.first_child + 1)];
            CHECK(l.parent_id == r.id);
            CHECK(rr.parent_id == r.id);
            CHECK(l.birth_time == r.end_time);
            CHECK(rr.birth_time == r.end_time);
            CHECK(l.birth_size >= rr.birth_size);
            const double x = growth_flow(r.birth_size, r.end_time - r.birth_time, tr.growth_rate, p.alpha).size;
            CHECK_THAT(l.birth_size + rr.birth_size, WithinRel(x, 1e-14));
        }
    }
}

TEST_CASE("K = delta_{1/2} splits into equal halves") {
    const auto tr = simulate_population(models::config_a(), 1.0, {100'000, 1e-8, 3.0}, RngStream{905, 0});
    for (const auto& r : tr.particles) {
        if (!r.has_children()) continue;
        CHECK(tr.particles[static_cast<std::size_t>(r.first_child)].birth_size ==
              tr.particles[static_cast<std::size_t>(r.first_child + 1)].birth_size);
    }
}

TEST_CASE("fixed seed gives identical traces") {
    const SimCaps caps{50'000, 1e-6, 2.0};
    const auto p = models::config_c();
    const auto a = simulate_population(p, 1.0, caps, RngStream{906, 3});
    const auto b = simulate_population(p, 1.0, caps, RngStream{906, 3});
    const auto c = simulate_population(p, 1.0, caps, RngStream{906, 4});
    REQUIRE(a.particles.size() == b.particles.size());
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        CHECK(a.particles[i].birth_size == b.particles[i].birth_size);
        CHECK(a.particles[i].end_time == b.particles[i].end_time);
    }
    const bool differs = a.particles.size() != c.particles.size() || a.particles.back().birth_size != c.particles.back().birth_size;
    CHECK(differs);
}

TEST_CASE("snapshots, truncation and frozen particles") {
    const auto p = models::config_a();
    const auto tr = simulate_population(p, 2.5, {100'000, 1e-8, 1.0}, RngStream{907, 0});
    const auto s0 = snapshot(tr, 0.0);
    REQUIRE(s0.size() == 1);
    CHECK(s0[0] == 2.5);
    CHECK_THAT(empirical_moment(tr, 0.0, 3.0), WithinRel(std::pow(2.5, 3.0), 1e-15));
    CHECK(testing::code_of([&] { snapshot(tr, 1.5); }) == ErrorCode::InvalidArgument);

    const auto capped = simulate_population(p, 1.0, {5, 1e-8, 10.0}, RngStream{907, 1});
    CHECK(capped.truncated());
    CHECK(capped.summary.end == RunEnd::capped);
    CHECK(capped.summary.events == 5);
    CHECK(testing::code_of([&] { snapshot(capped, 9.0); }) == ErrorCode::TruncatedTrace);
    CHECK_NOTHROW(snapshot(capped, 0.5 * *capped.summary.truncated_at));
    CHECK(std::any_of(capped.particles.begin(), capped.particles.end(),
                      [](const ParticleRecord& r) { return r.end_reason == EndReason::capped; }));

    const auto frozen = simulate_population(p, 1e-9, {100, 1e-8, 1.0}, RngStream{907, 2});
    CHECK(frozen.has_frozen());
    CHECK(frozen.particles.size() == 1);
    CHECK(frozen.particles[0].end_reason == EndReason::frozen_small);
    CHECK(count_in_interval(frozen, 1.0, 1.0, 2.0) == 0);
    CHECK(snapshot(frozen, 1.0) == std::vector<double>{1e-9});
}

TEST_CASE("unsupported regimes are refused") {
    const SimCaps caps{10, 1e-8, 1.0};
    CHECK(testing::code_of([&] { simulate_population(models::config_d(), 1.0, caps, RngStream{1, 0}); }) ==
          ErrorCode::UnsupportedRegime);
    const ModelParams infinite{0.0, 0.0, 0.0, {{}, PowerDensity{1.0, 1.5}}};
    CHECK(testing::code_of([&] { simulate_population(infinite, 1.0, caps, RngStream{1, 0}); }) ==
          ErrorCode::UnsupportedRegime);
}

TEST_CASE("alpha > 0 growth blow-up stops the run") {
    const ModelParams p{0.0, 1.5, 1.0, {{{0.5, 1.0}}, {}}};
    const auto tr = simulate_population(p, 1.0, {1'000'000, 1e-8, 10.0}, RngStream{908, 0});
    // c = 2, t* = 1/2 from size 1: some particle eventually outruns its clock
    CHECK((tr.summary.end == RunEnd::blowup || tr.summary.end == RunEnd::capped));
    CHECK(tr.truncated());
}

TEST_CASE("a ray of the particle system is the Lamperti transform of its driver") {
    // Follow the first child at every split; in the homogeneous clock s the
    // log-size moves with slope c and jumps by ln y, and the time change back
    // must reproduce the recorded sizes.
    int checked = 0;
    for (const double alpha : {-1.0, -0.5, 0.7}) {
        const ModelParams p{0.0, -0.2, alpha, {{{0.6, 0.3}, {0.8, 0.7}}, {}}};
        const auto tr = simulate_population(p, 1.0, {200'000, 1e-3, 8.0}, RngStream{909, 0});
        if (tr.truncated()) continue;
        ++checked;
        const double c = tr.growth_rate;

        LevyPath levy;
        levy.times = {0.0};
        levy.values = {0.0};
        levy.jump_flags = {0};
        levy.jump_sizes = {0.0};
        std::vector<double> t_mid, x_mid;
        const ParticleRecord* r = &tr.particles[0];
        double s = 0.0;
        for (;;) {
            const double dt = r->end_time - r->birth_time;
            const double xb = r->birth_size;
            t_mid.push_back(r->birth_time + 0.5 * dt);
            x_mid.push_back(growth_flow(xb, 0.5 * dt, c, alpha).size);
            const double ds = -std::log1p(-c * alpha * dt * std::pow(xb, alpha)) / (c * alpha);
            s += ds;
            const double xi_left = levy.values.back() + c * ds;
            if (!r->has_children()) {
                levy.times.push_back(s);
                levy.values.push_back(xi_left);
                levy.jump_flags.push_back(0);
                levy.jump_sizes.push_back(0.0);
                break;
            }
            const auto& child = tr.particles[static_cast<std::size_t>(r->first_child)];
            const double jump = std::log(child.birth_size) - xi_left;
            levy.times.push_back(s);
            levy.values.push_back(xi_left + jump);
            levy.jump_flags.push_back(1);
            levy.jump_sizes.push_back(jump);
            r = &child;
        }
        REQUIRE(levy.jump_count() >= 3);
        const auto X = lamperti_forward(levy, alpha, t_mid);
        REQUIRE(X.values.size() == t_mid.size());
        for (std::size_t i = 0; i < t_mid.size(); ++i) CHECK_THAT(X.values[i], WithinRel(x_mid[i], 1e-9));
    }
    CHECK(checked == 3);
}

TEST_CASE("online occupancy counter agrees with snapshot counts") {
    const auto p = models::config_c();
    const SimCaps caps{300'000, 1e-6, 4.0};
    const auto tr = simulate_population(p, 1.0, caps, RngStream{910, 0});
    OccupancyCounter counter(1.0, 2.0, tr.growth_rate, p.alpha, {1, 2, 1000}, false);
    const auto summary = simulate_population_observed(p, 1.0, caps, RngStream{910, 0}, counter);
    REQUIRE(summary.events == tr.summary.events);

    const double limit = tr.summary.truncated_at.value_or(caps.horizon);
    std::int64_t max_seen = 0;
    for (int i = 0; i <= 400; ++i) {
        const double t = limit * i / 401.0;
        max_seen = std::max<std::int64_t>(max_seen, static_cast<std::int64_t>(count_in_interval(tr, t, 1.0, 2.0)));
    }
    CHECK(counter.max_count() >= max_seen);
    if (counter.first_exceed()[0]) {
        const double t = *counter.first_exceed()[0];
        CHECK(count_in_interval(tr, std::nextafter(t, 1e9), 1.0, 2.0) >= 2);
    }
}

TEST_CASE("explosion experiment: drift condition and inf kappa for Config C") {
    const auto [small, large] = explosion_drifts(models::config_c());
    CHECK_THAT(small, WithinAbs(std::log(0.3) + 0.5, 1e-14));
    CHECK_THAT(large, WithinAbs(std::log(0.7) + 0.5, 1e-14));
    CHECK(small < 0.0);
    CHECK(large > 0.0);

    ExplosionConfig cfg;
    cfg.model = models::config_c();
    cfg.caps = {2'000, 1e-8, 1.0};
    cfg.runs = 3;
    const auto rep = explosion_experiment(cfg, RngStream{911, 0});
    CHECK_THAT(rep.inf_kappa, WithinAbs(0.487286, 1e-6));
    CHECK(rep.inf_kappa > 0.0);
    CHECK(rep.runs.size() == 3);

    cfg.model = models::config_a();
    cfg.model.alpha = -1.0;
    CHECK(testing::code_of([&] { explosion_experiment(cfg, RngStream{911, 0}); }) == ErrorCode::DriftConditionFailed);
    cfg.model = models::config_c();
    cfg.model.alpha = 0.0;
    CHECK(testing::code_of([&] { explosion_experiment(cfg, RngStream{911, 0}); }) == ErrorCode::InvalidArgument);
}
