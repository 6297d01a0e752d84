#include "atd3/eval.hpp"

#include "atd3/csvio.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace atd3::eval {

RolloutTrace rollout(const PolicyFn& policy, const env::FollowEpisode& episode,
                     bool capture_attention) {
    if (episode.length() < env::kWindow + 1)
        throw std::invalid_argument("rollout: episode shorter than window + 1");

    RolloutTrace trace;
    env::StateWindow w = env::reset(episode);
    nets::AttentionTrace attn;
    for (std::size_t t = env::kWindow - 1; t + 1 < episode.length();) {
        const double a = policy(w, capture_attention ? &attn : nullptr);
        const env::StepOutcome out = env::step(w, a, episode, t);
        const env::Observation& next_obs = out.next.newest();
        trace.sim_speed.push_back(next_obs.v_f);
        trace.obs_speed.push_back(episode.fol_speed[t + 1]);
        trace.sim_gap.push_back(next_obs.gap);
        trace.obs_gap.push_back(episode.recorded_gap(t + 1));
        trace.action.push_back(a);
        trace.reward.push_back(out.reward);
        if (capture_attention) trace.attention.push_back(attn);
        w = out.next;
        ++t;
        if (out.terminal) {
            trace.cause = out.cause;
            break;
        }
    }
    return trace;
}

double rmspe(std::span<const double> sim, std::span<const double> obs) {
    if (sim.size() != obs.size() || sim.empty())
        throw std::invalid_argument("rmspe: series must be equal nonempty lengths");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const double d = sim[i] - obs[i];
        num += d * d;
        den += obs[i] * obs[i];
    }
    if (den == 0.0) throw std::invalid_argument("rmspe: observed series is all zero");
    return std::sqrt(num / den) * 100.0;
}

AttentionSummary attention_summary(const RolloutTrace& trace, const env::FollowEpisode& episode,
                                   double threshold, std::size_t window_steps) {
    if (trace.attention.size() != trace.steps())
        throw std::invalid_argument("attention_summary: trace carries no attention rows");

    AttentionSummary s;
    double r3_in = 0.0, r3_out = 0.0, r8_sum = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < trace.steps(); ++i) {
        const std::size_t t = trace.start_index + i;
        const auto& beta = trace.attention[i].beta;
        double r2 = 0.0, r3 = 0.0, r8 = 0.0;
        for (std::size_t k = 0; k < env::kWindow; ++k) {
            const double b = beta[env::kWindow - 1 - k];  // newest first
            if (k < 2) r2 += b;
            if (k < 3) r3 += b;
            if (k < 8) r8 += b;
        }
        // recorded relative speed drop over the past second
        const double dv_now = episode.lead_speed[t] - episode.fol_speed[t];
        bool in_event = false;
        if (t >= window_steps) {
            const std::size_t t0 = t - window_steps;
            const double dv_then = episode.lead_speed[t0] - episode.fol_speed[t0];
            in_event = (dv_now - dv_then) < -threshold;
        }
        s.step.push_back(t);
        s.r2.push_back(r2);
        s.r3.push_back(r3);
        s.r8.push_back(r8);
        s.in_event.push_back(in_event);
        r8_sum += r8;
        if (in_event) {
            r3_in += r3;
            ++n_in;
        } else {
            r3_out += r3;
            ++n_out;
        }
    }
    for (std::size_t i = 0; i < s.in_event.size();) {
        if (!s.in_event[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.in_event.size() && s.in_event[j]) ++j;
        s.events.push_back({s.step[i], s.step[j - 1] + 1});
        i = j;
    }
    s.inside_steps = n_in;
    s.mean_r3_inside = n_in ? r3_in / static_cast<double>(n_in) : 0.0;
    s.mean_r3_outside = n_out ? r3_out / static_cast<double>(n_out) : 0.0;
    s.mean_r8 = s.r8.empty() ? 0.0 : r8_sum / static_cast<double>(s.r8.size());
    return s;
}

Comparison compare(const std::vector<NamedPolicy>& policies,
                   const std::vector<const env::FollowEpisode*>& episodes) {
    if (policies.empty() || episodes.empty())
        throw std::invalid_argument("compare: need at least one policy and one episode");
    Comparison c;
    for (const NamedPolicy& p : policies) {
        CompareRow row;
        row.policy = p.name;
        std::vector<double> pooled_sim, pooled_obs;
        for (const env::FollowEpisode* ep : episodes) {
            try {
                const RolloutTrace t = rollout(p.fn, *ep);
                row.per_episode.push_back(rmspe(t.sim_speed, t.obs_speed));
                pooled_sim.insert(pooled_sim.end(), t.sim_speed.begin(), t.sim_speed.end());
                pooled_obs.insert(pooled_obs.end(), t.obs_speed.begin(), t.obs_speed.end());
            } catch (const std::exception&) {
                row.per_episode.push_back(std::nan(""));
                ++row.failures;
            }
        }
        row.rmspe_pct = pooled_obs.empty() ? std::nan("") : rmspe(pooled_sim, pooled_obs);
        c.rows.push_back(std::move(row));
    }
    return c;
}

void write_table(const Comparison& c, const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("compare: cannot write " + file.string());
    os << "policy,rmspe_pct\n";
    for (const CompareRow& r : c.rows) os << r.policy << ',' << csv::fmt(r.rmspe_pct) << '\n';
}

void write_rollout_csv(const RolloutTrace& t, const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("rollout: cannot write " + file.string());
    os << "step,sim_speed,obs_speed,sim_gap,obs_gap,action,reward\n";
    for (std::size_t i = 0; i < t.steps(); ++i)
        os << t.start_index + i << ',' << csv::fmt(t.sim_speed[i]) << ',' << csv::fmt(t.obs_speed[i])
           << ',' << csv::fmt(t.sim_gap[i]) << ',' << csv::fmt(t.obs_gap[i]) << ','
           << csv::fmt(t.action[i]) << ',' << csv::fmt(t.reward[i]) << '\n';
}

void write_attention_csv(const RolloutTrace& t, const AttentionSummary& s,
                         const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("attention: cannot write " + file.string());
    os << "step";
    for (std::size_t j = 1; j <= env::kWindow; ++j) os << ",beta_" << j;
    os << ",r2,r3,r8,in_event\n";
    for (std::size_t i = 0; i < t.attention.size(); ++i) {
        os << s.step[i];
        for (const double b : t.attention[i].beta) os << ',' << csv::fmt(b);
        os << ',' << csv::fmt(s.r2[i]) << ',' << csv::fmt(s.r3[i]) << ',' << csv::fmt(s.r8[i])
           << ',' << (s.in_event[i] ? 1 : 0) << '\n';
    }
}

}  // namespace atd3::eval
