#include "test_support.hpp"

#include "gridse/dynamics.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gridse;
using Catch::Approx;

namespace {

// scalar reference recursion, straight from the textbook form
struct ScalarHolt {
    double level, trend, last_level;
    double predict() const { return level + trend; }
    void absorb(double x, double alpha, double beta) {
        const double pred = level + trend;
        const double a_new = alpha * x + (1.0 - alpha) * pred;
        trend = beta * (a_new - level) + (1.0 - beta) * trend;
        last_level = level;
        level = a_new;
    }
};

Vec scalar(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_CASE("holt smoother base behaviors") {
    SECTION("uninitialized state is rejected") {
        HoltState hs;
        CHECK_THROWS_AS(holt_predict(hs, make_holt_params(1)), UninitializedSmoother);
    }
    SECTION("alpha 1 beta 0 is persistence") {
        const auto p = make_holt_params(1, 1.0, 0.0);
        HoltState hs = init_holt(scalar(3.0), scalar(3.0));
        CHECK(holt_predict(hs, p).predicted[0] == Approx(3.0));
        hs = holt_absorb(hs, scalar(5.5), p);
        CHECK(holt_predict(hs, p).predicted[0] == Approx(5.5));
        CHECK(hs.trend[0] == Approx(0.0).margin(1e-15));
    }
    SECTION("alpha beta 1 extrapolates a ramp exactly") {
        const auto p = make_holt_params(1, 1.0, 1.0);
        HoltState hs = init_holt(scalar(1.0), scalar(2.0));
        CHECK(holt_predict(hs, p).predicted[0] == Approx(3.0));
        hs = holt_absorb(hs, scalar(3.0), p);
        CHECK(holt_predict(hs, p).predicted[0] == Approx(4.0));
        hs = holt_absorb(hs, scalar(4.0), p);
        CHECK(holt_predict(hs, p).predicted[0] == Approx(5.0));
    }
    SECTION("alpha 1 absorbs the filtered state exactly") {
        const auto p = make_holt_params(1, 1.0, 0.37);
        HoltState hs = init_holt(scalar(0.0), scalar(1.0));
        hs = holt_absorb(hs, scalar(2.5), p);
        CHECK(hs.level[0] == Approx(2.5));
    }
    SECTION("beta 0 leaves the trend unchanged") {
        const auto p = make_holt_params(1, 0.6, 0.0);
        HoltState hs = init_holt(scalar(0.0), scalar(1.0));
        const double trend0 = hs.trend[0];
        hs = holt_absorb(hs, scalar(9.0), p);
        CHECK(hs.trend[0] == Approx(trend0));
    }
}

TEST_CASE("holt recursion matches the scalar reference over a trace") {
    const double alpha = 0.81, beta = 0.56;
    const auto p = make_holt_params(1, alpha, beta);
    const std::vector<double> trace{2.0, 2.3, 2.1, 2.8, 3.2, 3.0, 3.7};

    HoltState hs = init_holt(scalar(trace[0]), scalar(trace[1]));
    ScalarHolt ref{trace[1], trace[1] - trace[0], trace[0]};
    for (size_t t = 2; t < trace.size(); ++t) {
        const auto pred = holt_predict(hs, p);
        CHECK(pred.predicted[0] == Approx(ref.predict()).margin(1e-12));
        CHECK(pred.gain == Approx(alpha * (1.0 + beta)));
        // affine form maps the last filtered value onto the prediction
        CHECK(pred.gain * hs.last_filtered[0] + pred.offset[0] ==
              Approx(pred.predicted[0]).margin(1e-12));
        hs = holt_absorb(hs, scalar(trace[t]), p);
        ref.absorb(trace[t], alpha, beta);
        CHECK(hs.level[0] == Approx(ref.level).margin(1e-12));
        CHECK(hs.trend[0] == Approx(ref.trend).margin(1e-12));
    }
}

TEST_CASE("holt recursion is linear for zero trend initialization") {
    const auto p = make_holt_params(2, 0.7, 0.4);
    HoltState x = init_holt(Vec::Constant(2, 1.0), Vec::Constant(2, 1.0));
    HoltState y = init_holt(Vec::Constant(2, -0.5), Vec::Constant(2, -0.5));
    HoltState xy = init_holt(Vec::Constant(2, 0.5), Vec::Constant(2, 0.5));
    Rng rng = make_rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 6; ++t) {
        Vec a(2), b(2);
        for (int i = 0; i < 2; ++i) {
            a[i] = g(rng);
            b[i] = g(rng);
        }
        x = holt_absorb(x, a, p);
        y = holt_absorb(y, b, p);
        xy = holt_absorb(xy, a + b, p);
        const Vec sum = holt_predict(x, p).predicted + holt_predict(y, p).predicted;
        CHECK((holt_predict(xy, p).predicted - sum).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("covariance propagation uses the squared gain") {
    const auto p = make_holt_params(3, 0.81, 0.56, 1e-6);
    const Mat cov = 2.0 * Mat::Identity(3, 3);
    const Mat out = holt_predict_cov(cov, p);
    const double f = 0.81 * 1.56;
    CHECK(out(0, 0) == Approx(f * f * 2.0 + 1e-6));
    CHECK(out(0, 1) == Approx(0.0).margin(1e-15));
}

TEST_CASE("load trajectories") {
    const auto model = test::load_ieee14();

    SECTION("empty varied set is rejected") {
        LoadScenario sc;
        sc.horizon = 5;
        CHECK_THROWS_AS(generate_load_trajectory(model, sc), std::invalid_argument);
    }
    SECTION("deterministic ramp from the documented formula") {
        LoadScenario sc;
        sc.varied_buses = {9};
        sc.ramp_rate = 0.10;
        sc.fluctuation = 0.0;
        sc.horizon = 14;
        sc.ramp_start = 10;
        sc.seed = 2;  // sign draw
        const auto traj = generate_load_trajectory(model, sc);
        const int idx = model.index_of(9);
        const double nominal = model.buses[static_cast<size_t>(idx)].load_p;
        for (int t = 1; t <= 9; ++t)
            CHECK(traj[static_cast<size_t>(t - 1)][static_cast<size_t>(idx)].p ==
                  Approx(nominal));
        const double step10 = traj[9][static_cast<size_t>(idx)].p;
        const double sign = step10 > nominal ? 1.0 : -1.0;
        for (int k = 0; k < 5; ++k)
            CHECK(traj[static_cast<size_t>(9 + k)][static_cast<size_t>(idx)].p ==
                  Approx(nominal * (1.0 + sign * 0.10 * (k + 1))));
        // other buses never move
        const int other = model.index_of(14);
        for (const auto& step : traj)
            CHECK(step[static_cast<size_t>(other)].p ==
                  Approx(model.buses[static_cast<size_t>(other)].load_p));
    }
    SECTION("fixed seed reproduces the trajectory bit for bit") {
        LoadScenario sc;
        sc.varied_buses = pick_varied_buses(model, 3, 7);
        sc.horizon = 20;
        sc.seed = 7;
        const auto a = generate_load_trajectory(model, sc);
        const auto b = generate_load_trajectory(model, sc);
        REQUIRE(a.size() == b.size());
        for (size_t t = 0; t < a.size(); ++t)
            for (size_t i = 0; i < a[t].size(); ++i) {
                REQUIRE(a[t][i].p == b[t][i].p);
                REQUIRE(a[t][i].q == b[t][i].q);
            }
    }
    SECTION("varied bus picker is seeded and PQ only") {
        const auto buses = pick_varied_buses(model, 3, 7);
        CHECK(buses == pick_varied_buses(model, 3, 7));
        REQUIRE(buses.size() == 3);
        for (int id : buses) {
            const auto& b = model.buses[static_cast<size_t>(model.index_of(id))];
            CHECK(b.kind == BusKind::pq);
            CHECK(b.load_p > 0.0);
        }
    }
}

TEST_CASE("ground truth state sequences") {
    const auto model = test::load_ieee14();

    SECTION("constant trajectory gives a constant sequence") {
        std::vector<std::vector<BusLoad>> traj(3, loads_from_model(model));
        const auto states = ground_truth_states(model, traj);
        REQUIRE(states.size() == 3);
        for (size_t t = 1; t < states.size(); ++t) {
            CHECK((states[t].vm - states[0].vm).cwiseAbs().maxCoeff() < 1e-9);
            CHECK((states[t].va - states[0].va).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
    SECTION("nominal first step reproduces the shipped solution") {
        const auto solution = test::load_ieee14_solution();
        const auto states =
            ground_truth_states(model, {loads_from_model(model)});
        const VoltageProfile prof = expand_state(model, states[0]);
        for (int i = 0; i < model.bus_count(); ++i)
            CHECK(std::abs(prof.vm[i] - solution.vm[static_cast<size_t>(i)]) < 1e-6);
    }
    SECTION("ramping one load drifts the local angle monotonically") {
        auto loads = loads_from_model(model);
        const int idx = model.index_of(9);
        std::vector<std::vector<BusLoad>> traj;
        for (int k = 0; k < 3; ++k) {
            traj.push_back(loads);
            loads[static_cast<size_t>(idx)].p += 0.2;
        }
        const auto states = ground_truth_states(model, traj);
        const int col = idx - 1;  // bus 9 sits after the slack in state order
        CHECK(states[1].va[col] < states[0].va[col]);
        CHECK(states[2].va[col] < states[1].va[col]);
    }
    SECTION("non convergence reports the failing step") {
        auto loads = loads_from_model(model);
        for (auto& l : loads) l.p *= 1e6;
        try {
            ground_truth_states(model, {loads_from_model(model), loads});
            FAIL("expected NonConvergence");
        } catch (const NonConvergence& e) {
            CHECK(std::string(e.what()).find("step 2") != std::string::npos);
        }
    }
}
