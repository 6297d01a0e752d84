#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace atd3::env {

inline constexpr std::size_t kWindow = 10;   // reaction time, 10 steps of 0.1 s
inline constexpr double kDt = 0.1;           // s
inline constexpr double kAccelMax = 3.0;     // m/s^2, tanh head scaling
inline constexpr double kCollisionPenalty = -10.0;
inline constexpr double kRewardErrFloor = 1e-4;
inline constexpr double kRewardSpeedFloor = 0.1;  // m/s

// One sensed timestep: follower speed, relative speed V_L - V_F, gap S_L - S_F
struct Observation {
    double v_f = 0.0;
    double dv = 0.0;
    double gap = 0.0;
};

// The most recent kWindow observations, oldest first. The newest entry is the
// live simulation state; older entries give the agent its reaction context.
class StateWindow {
public:
    StateWindow() = default;

    const Observation& at(std::size_t i) const { return obs_[i]; }
    const Observation& newest() const { return obs_[kWindow - 1]; }
    std::size_t newest_index() const { return t_; }

    // drop the oldest, append the new observation: s_{t+1} = [s_t(2:10); obs]
    StateWindow shifted(const Observation& obs) const {
        StateWindow next;
        for (std::size_t i = 0; i + 1 < kWindow; ++i) next.obs_[i] = obs_[i + 1];
        next.obs_[kWindow - 1] = obs;
        next.t_ = t_ + 1;
        return next;
    }

    static StateWindow from(const std::array<Observation, kWindow>& obs, std::size_t newest_index) {
        StateWindow w;
        w.obs_ = obs;
        w.t_ = newest_index;
        return w;
    }

private:
    std::array<Observation, kWindow> obs_{};
    std::size_t t_ = kWindow - 1;
};

// A time-aligned lead/follower trajectory at 0.1 s resolution. Immutable
// after construction; positions share an arbitrary origin so that the gap is
// always lead_pos - fol_pos.
struct FollowEpisode {
    std::vector<double> lead_speed;
    std::vector<double> lead_pos;
    std::vector<double> fol_speed;
    std::vector<double> fol_pos;

    std::size_t length() const { return lead_speed.size(); }
    double recorded_gap(std::size_t t) const { return lead_pos[t] - fol_pos[t]; }
    Observation recorded_obs(std::size_t t) const {
        return {fol_speed[t], lead_speed[t] - fol_speed[t], recorded_gap(t)};
    }
    // forward difference of recorded speeds; the "recorded action" at step t
    double recorded_accel(std::size_t t) const {
        return (fol_speed[t + 1] - fol_speed[t]) / kDt;
    }
    void validate() const;  // equal lengths, positive recorded gaps

    void to_csv(const std::filesystem::path& file) const;
    static FollowEpisode from_csv(const std::filesystem::path& file);
};

enum class TerminalCause { None, EndOfTrajectory, Collision };

struct StepOutcome {
    StateWindow next;
    double reward = 0.0;
    bool terminal = false;
    TerminalCause cause = TerminalCause::None;
};

// Point-mass update: V' = max(0, V + a dt); dv' = V_L' - V'; gap advances by
// the trapezoid of the two relative speeds. Speed is clamped at zero (no
// reverse motion); a gap <= 0 is the caller's collision signal.
Observation kinematic_update(const Observation& obs, double accel, double lead_speed_next,
                             double dt = kDt);

// Negated log relative speed error, floored on both sides so it is bounded:
// r = -log(max(|v_sim - v_obs| / max(v_obs, 0.1), 1e-4)); max 9.21 at zero error.
double reward(double v_sim, double v_obs);

// Advance one step against the recorded lead trajectory. t is the index of
// the window's newest observation; the new observation lands at t+1.
StepOutcome step(const StateWindow& state, double action, const FollowEpisode& episode,
                 std::size_t t);

// Window over the first kWindow recorded observations; stepping starts at
// index kWindow - 1. Rejects episodes shorter than the window.
StateWindow reset(const FollowEpisode& episode);

}  // namespace atd3::env
