#include "atd3/env.hpp"

#include "atd3/csvio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atd3::env {

void FollowEpisode::validate() const {
    const std::size_t n = lead_speed.size();
    if (lead_pos.size() != n || fol_speed.size() != n || fol_pos.size() != n)
        throw std::invalid_argument("episode: series lengths differ");
    if (n == 0) throw std::invalid_argument("episode: empty");
    for (std::size_t t = 0; t < n; ++t)
        if (recorded_gap(t) <= 0.0)
            throw std::invalid_argument("episode: nonpositive recorded gap at step " +
                                        std::to_string(t));
}

void FollowEpisode::to_csv(const std::filesystem::path& file) const {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("episode: cannot write " + file.string());
    os << "t,lead_speed,lead_pos,fol_speed,fol_pos\n";
    for (std::size_t t = 0; t < length(); ++t)
        os << t << ',' << csv::fmt(lead_speed[t]) << ',' << csv::fmt(lead_pos[t]) << ','
           << csv::fmt(fol_speed[t]) << ',' << csv::fmt(fol_pos[t]) << '\n';
}

FollowEpisode FollowEpisode::from_csv(const std::filesystem::path& file) {
    const csv::Table t = csv::read_table(file);
    const int cl = t.column("lead_speed"), clp = t.column("lead_pos");
    const int cf = t.column("fol_speed"), cfp = t.column("fol_pos");
    if (cl < 0 || clp < 0 || cf < 0 || cfp < 0)
        throw std::runtime_error("episode: missing column in " + file.string());
    FollowEpisode ep;
    for (const auto& row : t.rows) {
        ep.lead_speed.push_back(csv::parse_double(row[cl]));
        ep.lead_pos.push_back(csv::parse_double(row[clp]));
        ep.fol_speed.push_back(csv::parse_double(row[cf]));
        ep.fol_pos.push_back(csv::parse_double(row[cfp]));
    }
    return ep;
}

Observation kinematic_update(const Observation& obs, double accel, double lead_speed_next,
                             double dt) {
    if (dt <= 0.0) throw std::invalid_argument("kinematic_update: dt must be positive");
    Observation next;
    next.v_f = std::max(0.0, obs.v_f + accel * dt);
    next.dv = lead_speed_next - next.v_f;
    next.gap = obs.gap + 0.5 * (obs.dv + next.dv) * dt;
    return next;
}

double reward(double v_sim, double v_obs) {
    const double rel = std::abs(v_sim - v_obs) / std::max(v_obs, kRewardSpeedFloor);
    return -std::log(std::max(rel, kRewardErrFloor));
}

StepOutcome step(const StateWindow& state, double action, const FollowEpisode& episode,
                 std::size_t t) {
    if (t + 1 >= episode.length())
        throw std::out_of_range("step: t+1 = " + std::to_string(t + 1) +
                                " outside episode of length " + std::to_string(episode.length()));
    const Observation next_obs =
        kinematic_update(state.newest(), action, episode.lead_speed[t + 1]);

    StepOutcome out;
    out.next = state.shifted(next_obs);
    out.reward = reward(next_obs.v_f, episode.fol_speed[t + 1]);
    if (next_obs.gap <= 0.0) {
        out.reward += kCollisionPenalty;
        out.terminal = true;
        out.cause = TerminalCause::Collision;
    } else if (t + 1 == episode.length() - 1) {
        out.terminal = true;
        out.cause = TerminalCause::EndOfTrajectory;
    }
    return out;
}

StateWindow reset(const FollowEpisode& episode) {
    if (episode.length() < kWindow)
        throw std::invalid_argument("reset: episode length " + std::to_string(episode.length()) +
                                    " < window " + std::to_string(kWindow));
    std::array<Observation, kWindow> obs;
    for (std::size_t i = 0; i < kWindow; ++i) obs[i] = episode.recorded_obs(i);
    return StateWindow::from(obs, kWindow - 1);
}

}  // namespace atd3::env
