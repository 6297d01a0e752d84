#pragma once

#include "atd3/adam.hpp"
#include "atd3/env.hpp"
#include "atd3/nets.hpp"
#include "atd3/replay.hpp"
#include "atd3/rng.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace atd3::agent {

enum class AgentMode { Atd3, Ddpg, DdpgRt };

const char* mode_name(AgentMode m);
AgentMode mode_from_name(const std::string& name);

struct TrainConfig {
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double gamma = 0.99;
    double tau = 1e-3;
    double explore_sigma = 0.1;    // of a_max
    double smooth_sigma = 0.2;     // of a_max
    double smooth_clip = 0.5;      // of a_max
    std::size_t batch_size = 200;
    std::size_t epochs = 60;
    std::size_t cycles_per_epoch = 60;
    std::size_t samples_per_cycle = 200;
    std::size_t updates_per_cycle = 20;
    std::size_t policy_delay = 2;
    std::size_t buffer_capacity = 100000;
    std::size_t hidden = 100;
    double a_max = env::kAccelMax;
    std::uint64_t seed = 0;
    std::size_t eval_max_episodes = 5;  // held-out episodes scored per epoch
    std::size_t checkpoint_every = 1;   // epochs; 0 = final checkpoint only

    void validate() const;
};

// y = r + gamma * min(q1, q2), or just r on terminal transitions. The
// single-critic variants pass q2 = q1.
inline double td_target(double r, double q1, double q2, double gamma, bool terminal) {
    return terminal ? r : r + gamma * std::min(q1, q2);
}

struct TrainLogRow {
    std::size_t epoch = 0;
    std::size_t cycle = 0;
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    double actor_objective = 0.0;
    std::optional<double> eval_rmspe;  // filled on the last cycle of each epoch
    double wallclock_s = 0.0;          // goes to the timing sidecar, not the CSV
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    double final_eval_rmspe = 0.0;
    // criterion instrumentation
    double max_attention_norm_err = 0.0;
    std::size_t critic_update_count = 0;
    std::size_t actor_update_count = 0;
    std::size_t target_update_count = 0;
    std::size_t smoothing_noise_draws = 0;
    std::size_t twin_min_uses = 0;
    std::size_t env_steps = 0;
    std::size_t collisions = 0;
};

// One TD3 (or DDPG-ablation) learner: networks, targets, optimizers, replay
// buffer, and the cached computation graphs for each update path. All
// randomness flows from the seed; two agents with equal seed and config
// produce bit-identical behavior.
class Agent {
public:
    Agent(AgentMode mode, const TrainConfig& cfg);
    ~Agent();

    AgentMode mode() const { return mode_; }
    const TrainConfig& config() const { return cfg_; }

    // deterministic policy plus Gaussian exploration noise of std
    // sigma * a_max, clipped to [-a_max, a_max]
    double select_action(const env::StateWindow& s, double sigma, Rng& rng);

    // deterministic policy output (and attention weights when available)
    double act(const env::StateWindow& s, nets::AttentionTrace* trace = nullptr);

    // y_i per batch element from the target networks (Eq. 7 path)
    std::vector<double> compute_targets(const std::vector<const Transition*>& batch, Rng& smooth_rng);

    // one Adam step per critic on MSE against y; returns the two losses
    // (the second repeats the first in single-critic modes)
    std::pair<double, double> update_critics(const std::vector<const Transition*>& batch,
                                             const std::vector<double>& y);

    // one ascent step on mean Q_1(s, pi(s)); returns the objective value
    double update_actor(const std::vector<const Transition*>& batch);

    void soft_update_targets();

    ReplayBuffer& buffer() { return buffer_; }

    // Full training loop over a pool of episodes. Writes training_log.csv,
    // timing.log and checkpoints under out_dir unless it is empty.
    TrainResult train(const std::vector<const env::FollowEpisode*>& train_pool,
                      const std::vector<const env::FollowEpisode*>& eval_pool,
                      const std::filesystem::path& out_dir);

    void save(const std::filesystem::path& file) const;

    // instrumentation
    double max_attention_norm_err() const { return max_attn_err_; }
    std::size_t smoothing_noise_draws() const { return smoothing_draws_; }
    std::size_t twin_min_uses() const { return twin_min_uses_; }
    std::size_t critic_updates() const { return critic_updates_; }
    std::size_t actor_updates() const { return actor_updates_; }
    std::size_t target_updates() const { return target_updates_; }

    // target-network weights, for tests of initialization and soft updates
    std::vector<std::pair<std::string, const num::Matrix*>> target_tensors() const;
    std::vector<std::pair<std::string, const num::Matrix*>> main_tensors() const;

private:
    struct BatchGraphs;

    bool twin() const { return mode_ == AgentMode::Atd3; }
    bool smoothing() const { return mode_ == AgentMode::Atd3; }
    std::size_t delay() const { return mode_ == AgentMode::Atd3 ? cfg_.policy_delay : 1; }
    std::size_t state_dim() const { return mode_ == AgentMode::Ddpg ? 3 : 3 * env::kWindow; }

    void encode_states(const std::vector<const Transition*>& batch, bool next,
                       num::Matrix& dst) const;
    void note_attention_rows(const num::Matrix& beta);
    double evaluate(const std::vector<const env::FollowEpisode*>& eval_pool);

    AgentMode mode_;
    TrainConfig cfg_;
    nets::ObsScale scale_;

    std::optional<nets::AttentionActorParams> attn_actor_, attn_actor_tgt_;
    std::optional<nets::MlpActorParams> mlp_actor_, mlp_actor_tgt_;
    nets::CriticParams critic1_, critic2_, critic1_tgt_, critic2_tgt_;

    num::Adam actor_opt_, critic_opt_;
    ReplayBuffer buffer_;

    std::unique_ptr<nets::AttentionActorEval> attn_eval_;
    std::unique_ptr<nets::MlpActorEval> mlp_eval_;
    std::unique_ptr<BatchGraphs> graphs_;

    std::size_t update_iter_ = 0;
    double max_attn_err_ = 0.0;
    std::size_t smoothing_draws_ = 0;
    std::size_t twin_min_uses_ = 0;
    std::size_t critic_updates_ = 0;
    std::size_t actor_updates_ = 0;
    std::size_t target_updates_ = 0;
};

// Reload a checkpoint written by Agent::save for evaluation.
class PolicySnapshot {
public:
    static PolicySnapshot load(const std::filesystem::path& file);

    AgentMode mode() const { return mode_; }
    double act(const env::StateWindow& s, nets::AttentionTrace* trace = nullptr);
    bool has_attention() const { return mode_ == AgentMode::Atd3; }

private:
    PolicySnapshot() = default;
    AgentMode mode_ = AgentMode::Atd3;
    double a_max_ = env::kAccelMax;
    std::shared_ptr<nets::AttentionActorParams> attn_;
    std::shared_ptr<nets::MlpActorParams> mlp_;
    std::shared_ptr<nets::AttentionActorEval> attn_eval_;
    std::shared_ptr<nets::MlpActorEval> mlp_eval_;
};

}  // namespace atd3::agent
