#pragma once

#include "atd3/env.hpp"
#include "atd3/nets.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace atd3::eval {

// A deterministic policy: window in, acceleration out; policies that carry an
// attention mechanism fill `trace` when it is non-null.
using PolicyFn = std::function<double(const env::StateWindow&, nets::AttentionTrace*)>;

struct NamedPolicy {
    std::string name;
    PolicyFn fn;
    bool has_attention = false;
};

// Closed-loop simulation record, aligned from step kWindow onwards (the first
// kWindow observations seed the window and are not simulated).
struct RolloutTrace {
    std::size_t start_index = env::kWindow;   // episode step of the first simulated entry
    std::vector<double> sim_speed;
    std::vector<double> obs_speed;
    std::vector<double> sim_gap;
    std::vector<double> obs_gap;
    std::vector<double> action;
    std::vector<double> reward;
    std::vector<nets::AttentionTrace> attention;  // empty unless the policy exposes one
    env::TerminalCause cause = env::TerminalCause::EndOfTrajectory;

    std::size_t steps() const { return sim_speed.size(); }
};

RolloutTrace rollout(const PolicyFn& policy, const env::FollowEpisode& episode,
                     bool capture_attention = false);

// Root mean square percentage error, ratio-of-sums form:
// sqrt(sum (sim-obs)^2 / sum obs^2) * 100. Rejects an all-zero observed series.
double rmspe(std::span<const double> sim, std::span<const double> obs);

// Recency masses r_k = sum of the newest k attention weights.
struct AttentionSummary {
    std::vector<std::size_t> step;  // episode step index per row
    std::vector<double> r2, r3, r8;
    std::vector<bool> in_event;     // sudden relative-speed-decrease window
    struct Event {
        std::size_t begin, end;  // episode steps, half-open
    };
    std::vector<Event> events;
    double mean_r3_inside = 0.0;
    double mean_r3_outside = 0.0;
    double mean_r8 = 0.0;
    std::size_t inside_steps = 0;
};

// Brake events are detected on the recorded relative speed: step t is flagged
// when dv(t) - dv(t - window) < -threshold (defaults: 1.5 m/s within 1 s).
AttentionSummary attention_summary(const RolloutTrace& trace, const env::FollowEpisode& episode,
                                   double threshold = 1.5, std::size_t window_steps = 10);

struct CompareRow {
    std::string policy;
    double rmspe_pct = 0.0;
    std::vector<double> per_episode;
    std::size_t failures = 0;
};

struct Comparison {
    std::vector<CompareRow> rows;
};

// Pooled Eq.-16 RMSPE per policy over the concatenated test rollouts.
Comparison compare(const std::vector<NamedPolicy>& policies,
                   const std::vector<const env::FollowEpisode*>& episodes);

void write_table(const Comparison& c, const std::filesystem::path& file);
void write_rollout_csv(const RolloutTrace& t, const std::filesystem::path& file);
void write_attention_csv(const RolloutTrace& t, const AttentionSummary& s,
                         const std::filesystem::path& file);

}  // namespace atd3::eval
