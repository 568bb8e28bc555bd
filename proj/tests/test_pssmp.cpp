#include <catch_amalgamated.hpp>

#include "gfrag/pssmp.hpp"
#include "test_models.hpp"

using namespace gfrag;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bool within_3se(const MCEstimate& e, double target) { return std::abs(e.mean - target) <= 3.0 * e.std_error; }

LevyPath line_path(double slope, double horizon, double step) {
    LevyCharacteristics ch;
    ch.linear_drift = slope;
    return simulate_levy(ch, 0.0, horizon, step, RngStream{0, 0});
}

}  // namespace

TEST_CASE("alpha = 0 leaves the Levy path untouched") {
    const auto ch = levy_characteristics(models::config_d(0.0), 2.0, false);
    const auto levy = simulate_levy(ch, 0.0, 1.0, 0.01, RngStream{31, 0});
    std::vector<double> grid(levy.times.begin() + 1, levy.times.end() - 1);
    const auto X = lamperti_forward(levy, 0.0, grid);
    REQUIRE(X.values.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::size_t k = i + 1;
        const double expected = levy.jump_flags[k] ? levy.left_limit(k) : levy.values[k];
        CHECK_THAT(X.values[i], WithinRel(std::exp(expected), 1e-12));
    }
}

TEST_CASE("deterministic drift with alpha = -1 gives X(t) = 1 + t") {
    const auto levy = line_path(1.0, 3.0, 0.1);
    const std::vector<double> grid{0.0, 0.3, 1.0, 2.5, 10.0, 19.0};
    const auto X = lamperti_forward(levy, -1.0, grid);
    REQUIRE(X.values.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK_THAT(X.values[i], WithinRel(1.0 + grid[i], 1e-12));
    CHECK_THAT(X.clock.back(), WithinRel(std::expm1(3.0), 1e-13));
    CHECK_FALSE(X.absorbed);

    const std::vector<double> beyond{25.0};
    CHECK(lamperti_forward(levy, -1.0, beyond).horizon_exhausted);
}

TEST_CASE("the clock inverts: A(S(t)) = t") {
    const auto ch = levy_characteristics(models::config_d(-1.0), 2.0, false);
    const auto levy = simulate_levy(ch, 0.0, 2.0, 0.01, RngStream{32, 0});
    std::vector<double> grid;
    for (int i = 1; i <= 40; ++i) grid.push_back(0.05 * i);
    const auto X = lamperti_forward(levy, -1.0, grid);
    for (const double t : X.times) CHECK_THAT(clock_at_levy_time(X, levy_time_at(X, t)), WithinRel(t, 1e-10));
}

TEST_CASE("killed drivers are absorbed at A(zeta) in the state fixed by the sign of alpha") {
    LevyCharacteristics ch;
    ch.killing_rate = 1.0;
    ch.gaussian_variance = 0.5;
    const auto levy = simulate_levy(ch, 0.0, 100.0, 0.01, RngStream{33, 0});
    REQUIRE(levy.kill_time);
    for (double alpha : {1.0, 0.0, -1.0}) {
        std::vector<double> grid{0.0, 1e6};
        const auto X = lamperti_forward(levy, alpha, grid);
        REQUIRE(X.absorbed);
        CHECK(X.absorbed->time == X.clock.back());
        if (alpha > 0) {
            CHECK(X.absorbed->state == AbsorbedState::infinity);
            CHECK(std::isinf(X.values[1]));
        } else {
            CHECK(X.absorbed->state == AbsorbedState::zero);
            CHECK(X.values[1] == 0.0);
        }
    }
}

TEST_CASE("the time change runs no faster than real time where X >= 1 (alpha < 0)") {
    const auto ch = levy_characteristics(models::config_b(), 9.0, true);
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto levy = simulate_levy(ch, 0.0, 3.0, 0.01, RngStream{34, r});
        std::vector<double> grid{0.5};
        const auto X = lamperti_forward(levy, -1.0, grid);
        for (std::size_t i = 0; i + 1 < levy.size(); ++i)
            if (levy.values[i] >= 0.0 && levy.left_limit(i + 1) >= 0.0)
                CHECK(X.clock[i + 1] - X.clock[i] >= (levy.times[i + 1] - levy.times[i]) * (1 - 1e-12));
    }
}

TEST_CASE("constant path killed at time 1") {
    LevyPath p;
    p.times = {0.0, 0.5, 1.0};
    p.values = {0.0, 0.0, 0.0};
    p.jump_flags = {0, 0, 0};
    p.jump_sizes = {0.0, 0.0, 0.0};
    p.kill_time = 1.0;
    const std::vector<double> grid{0.25, 2.0};
    const auto X = lamperti_forward(p, 1.0, grid);
    CHECK(path_sup(X) == 1.0);
    for (double q : {0.5, 1.0, 3.0}) CHECK_THAT(path_power_integral(X, q), WithinAbs(1.0, 1e-15));
}

TEST_CASE("the power integral needs an absorbed path") {
    const auto levy = line_path(1.0, 1.0, 0.1);
    const std::vector<double> grid{0.5};
    const auto X = lamperti_forward(levy, -1.0, grid);
    CHECK(testing::code_of([&] { path_power_integral(X, 1.0); }) == ErrorCode::NotAbsorbed);
}

TEST_CASE("simulate_pssmp: mean of X_+(1) for Config D") {
    const auto D = models::config_d(-1.0);
    const auto e = monte_carlo(10000, RngStream{35, 0},
                               [&](const RngStream& r) { return pssmp_value_at(D, 2.0, 1.0, 1.0, 2e-3, r); });
    CHECK(within_3se(e, 4.0));
}

TEST_CASE("simulate_pssmp with alpha = 0 is an exponential Levy process") {
    const auto D0 = models::config_d(0.0);
    const auto e = monte_carlo(10000, RngStream{36, 0},
                               [&](const RngStream& r) { return pssmp_value_at(D0, 2.0, 1.0, 0.5, 0.5, r); });
    CHECK(within_3se(e, std::exp(1.5)));
}

TEST_CASE("scaling property: X from x0 = c at t matches c X from 1 at t c^alpha") {
    const auto D = models::config_d(-1.0);
    for (double c : {2.0, 4.0}) {
        const double t = 0.5;
        const auto direct = monte_carlo(10000, RngStream{37, 0},
                                        [&](const RngStream& r) { return pssmp_value_at(D, 2.0, c, t, 2e-3, r); });
        const auto scaled = monte_carlo(10000, RngStream{38, 0}, [&](const RngStream& r) {
            return c * pssmp_value_at(D, 2.0, 1.0, t * std::pow(c, -1.0), 2e-3, r);
        });
        CHECK(std::abs(direct.mean - scaled.mean) <= 3.0 * combined_stderr(direct.std_error, scaled.std_error));
        CHECK(within_3se(direct, c + 3.0 * t));
    }
}

TEST_CASE("sup of the killed process has a Pareto tail") {
    const auto D = models::config_d(1.0);
    const std::vector<double> grid{1e9};
    const auto e = monte_carlo(10000, RngStream{39, 0}, [&](const RngStream& r) {
        const auto X = simulate_pssmp(D, 1.0, 1.0, grid, 1e-2, r, {.bridge_maxima = true, .run_to_absorption = true});
        return path_sup(X) > 2.0 ? 1.0 : 0.0;
    });
    CHECK(within_3se(e, 0.5));
}

TEST_CASE("entrance sampling preconditions") {
    CHECK(testing::code_of([&] { entrance_sample(models::config_d(0.0), 1.0, 0.1, 1e-2, RngStream{}); }) ==
          ErrorCode::HypothesisFailed);
    auto c_pos = models::config_c();
    c_pos.alpha = 1.0;
    CHECK(testing::code_of([&] { entrance_sample(c_pos, 1.0, 0.1, 1e-2, RngStream{}); }) ==
          ErrorCode::HypothesisFailed);
    CHECK(entrance_sample(models::config_d(-1.0), 1.0, 0.1, 2e-3, RngStream{40, 0}) > 0.0);
    CHECK(entrance_sample(models::config_d(1.0), 1.0, 0.1, 2e-3, RngStream{40, 0}) > 0.0);
}
