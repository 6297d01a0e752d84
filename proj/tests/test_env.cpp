#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atd3/data.hpp"
#include "atd3/env.hpp"
#include "atd3/rng.hpp"

#include <cmath>
#include <filesystem>

using namespace atd3;
using env::FollowEpisode;
using env::Observation;

namespace {

FollowEpisode synthetic_episode(std::uint64_t seed, data::Scenario scenario) {
    data::SynthConfig cfg;
    cfg.episodes = 3;
    cfg.seed = seed;
    cfg.mix = scenario == data::Scenario::Smooth ? data::ScenarioMix{1, 0, 0}
              : scenario == data::Scenario::StopGo ? data::ScenarioMix{0, 1, 0}
                                                   : data::ScenarioMix{0, 0, 1};
    return data::synthesize(cfg)[1].episode;
}

}  // namespace

TEST_CASE("kinematic update evaluates the point-mass equations directly") {
    const Observation next = env::kinematic_update({10.0, 2.0, 20.0}, 2.0, 12.0, 0.1);
    CHECK(next.v_f == doctest::Approx(10.2).epsilon(1e-14));
    CHECK(next.dv == doctest::Approx(1.8).epsilon(1e-14));
    CHECK(next.gap == doctest::Approx(20.19).epsilon(1e-14));
}

TEST_CASE("constant-speed case advances the gap linearly in dv") {
    Observation obs{15.0, 1.5, 30.0};
    const Observation next = env::kinematic_update(obs, 0.0, obs.v_f + obs.dv, 0.1);
    CHECK(next.dv == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(next.gap == doctest::Approx(30.0 + 1.5 * 0.1).epsilon(1e-14));
}

TEST_CASE("speed clamps at zero instead of reversing") {
    const Observation next = env::kinematic_update({0.05, 0.0, 10.0}, -2.0, 0.0, 0.1);
    CHECK(next.v_f == 0.0);
}

TEST_CASE("gap update is exactly trapezoidal: constant dv gives a linear gap") {
    // hold both speeds constant: dv stays fixed, gap gains dv*dt per step
    Observation obs{10.0, 2.0, 20.0};
    for (int i = 1; i <= 50; ++i) {
        obs = env::kinematic_update(obs, 0.0, 12.0, 0.1);
        CHECK(obs.gap == doctest::Approx(20.0 + 0.2 * i).epsilon(1e-13));
    }
}

TEST_CASE("reward is capped at -log(eps) when speeds agree") {
    CHECK(env::reward(10.0, 10.0) == doctest::Approx(-std::log(1e-4)).epsilon(1e-12));
    CHECK(env::reward(10.0, 10.0) == doctest::Approx(9.2103403719761836).epsilon(1e-12));
}

TEST_CASE("reward of 10% relative error") {
    CHECK(env::reward(11.0, 10.0) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("reward denominator floors at 0.1 m/s") {
    // |10 - 0.05| / max(0.05, 0.1) = 99.5
    CHECK(env::reward(10.0, 0.05) == doctest::Approx(-std::log(99.5)).epsilon(1e-12));
}

TEST_CASE("reward is maximal iff speeds match and decays monotonically") {
    const double best = env::reward(10.0, 10.0);
    double prev = best;
    for (double err = 0.01; err < 8.0; err *= 1.7) {
        const double r = env::reward(10.0 + err, 10.0);
        CHECK(r < prev + 1e-12);
        CHECK(r <= best);
        prev = r;
    }
}

TEST_CASE("step shifts the window: [o1..o10] + o11 -> [o2..o11]") {
    FollowEpisode ep;
    for (int t = 0; t < 30; ++t) {
        ep.lead_speed.push_back(10.0 + 0.1 * t);
        ep.lead_pos.push_back(50.0 + 10.0 * 0.1 * t);
        ep.fol_speed.push_back(10.0);
        ep.fol_pos.push_back(10.0 * 0.1 * t);
    }
    const env::StateWindow w = env::reset(ep);
    CHECK(w.newest_index() == env::kWindow - 1);
    const env::StepOutcome out = env::step(w, 0.5, ep, env::kWindow - 1);
    // the nine older entries moved down one slot
    for (std::size_t i = 0; i + 1 < env::kWindow; ++i) {
        CHECK(out.next.at(i).v_f == w.at(i + 1).v_f);
        CHECK(out.next.at(i).gap == w.at(i + 1).gap);
    }
    CHECK(out.next.newest().v_f == doctest::Approx(10.0 + 0.5 * 0.1));
    CHECK(out.next.newest_index() == env::kWindow);
    CHECK_FALSE(out.terminal);
}

TEST_CASE("last feasible step terminates with end-of-trajectory") {
    FollowEpisode ep;
    for (int t = 0; t < 12; ++t) {
        ep.lead_speed.push_back(10.0);
        ep.lead_pos.push_back(30.0 + t);
        ep.fol_speed.push_back(10.0);
        ep.fol_pos.push_back(double(t));
    }
    env::StateWindow w = env::reset(ep);
    auto out = env::step(w, 0.0, ep, 9);
    CHECK_FALSE(out.terminal);
    out = env::step(out.next, 0.0, ep, 10);
    CHECK(out.terminal);
    CHECK(out.cause == env::TerminalCause::EndOfTrajectory);
    // stepping past the end is rejected
    CHECK_THROWS_AS(env::step(out.next, 0.0, ep, 11), std::out_of_range);
}

TEST_CASE("forcing the gap nonpositive terminates with a collision penalty") {
    FollowEpisode ep;
    for (int t = 0; t < 40; ++t) {
        ep.lead_speed.push_back(5.0);
        ep.lead_pos.push_back(0.5 * t + 0.01);  // one hard step from contact
        ep.fol_speed.push_back(5.0);
        ep.fol_pos.push_back(0.5 * t);
    }
    env::StateWindow w = env::reset(ep);
    const double base = env::reward(5.0 + 3.0 * 0.1, 5.0);
    const env::StepOutcome out = env::step(w, 3.0, ep, 9);  // accelerate into the leader
    CHECK(out.terminal);
    CHECK(out.cause == env::TerminalCause::Collision);
    CHECK(out.reward == doctest::Approx(base + env::kCollisionPenalty));
}

TEST_CASE("reset needs at least the window length") {
    FollowEpisode ep;
    for (int t = 0; t < 9; ++t) {
        ep.lead_speed.push_back(10.0);
        ep.lead_pos.push_back(20.0 + t);
        ep.fol_speed.push_back(10.0);
        ep.fol_pos.push_back(double(t));
    }
    CHECK_THROWS_AS(env::reset(ep), std::invalid_argument);
    // exactly 10 steps: reset is valid, but no step fits
    ep.lead_speed.push_back(10.0);
    ep.lead_pos.push_back(29.0);
    ep.fol_speed.push_back(10.0);
    ep.fol_pos.push_back(9.0);
    const env::StateWindow w = env::reset(ep);
    CHECK(w.newest_index() + 1 >= ep.length());  // immediately terminal for any rollout
}

TEST_CASE("round-trip oracle: recorded accelerations replay to the recorded series") {
    // synthetic data is generated by the same update equations, so replaying
    // the finite-differenced accelerations must recover speeds and gaps
    for (const auto scenario : {data::Scenario::Smooth, data::Scenario::StopGo,
                                data::Scenario::Brake}) {
        const FollowEpisode ep = synthetic_episode(42, scenario);
        env::StateWindow w = env::reset(ep);
        double max_speed_err = 0.0, max_gap_err = 0.0;
        for (std::size_t t = env::kWindow - 1; t + 1 < ep.length(); ++t) {
            const env::StepOutcome out = env::step(w, ep.recorded_accel(t), ep, t);
            max_speed_err =
                std::max(max_speed_err, std::abs(out.next.newest().v_f - ep.fol_speed[t + 1]));
            max_gap_err =
                std::max(max_gap_err, std::abs(out.next.newest().gap - ep.recorded_gap(t + 1)));
            w = out.next;
            if (out.terminal) break;
        }
        CHECK(max_speed_err < 1e-9);
        CHECK(max_gap_err < 1e-9);
    }
}

TEST_CASE("episode csv round-trips bit-exactly") {
    const FollowEpisode ep = synthetic_episode(7, data::Scenario::StopGo);
    const auto path = std::filesystem::temp_directory_path() / "atd3_episode_test.csv";
    ep.to_csv(path);
    const FollowEpisode back = FollowEpisode::from_csv(path);
    REQUIRE(back.length() == ep.length());
    for (std::size_t t = 0; t < ep.length(); ++t) {
        CHECK(back.lead_speed[t] == ep.lead_speed[t]);
        CHECK(back.lead_pos[t] == ep.lead_pos[t]);
        CHECK(back.fol_speed[t] == ep.fol_speed[t]);
        CHECK(back.fol_pos[t] == ep.fol_pos[t]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("episode validation rejects nonpositive recorded gaps") {
    FollowEpisode ep;
    ep.lead_speed = {10.0, 10.0};
    ep.lead_pos = {5.0, 4.0};
    ep.fol_speed = {10.0, 10.0};
    ep.fol_pos = {0.0, 4.5};
    CHECK_THROWS_AS(ep.validate(), std::invalid_argument);
}
