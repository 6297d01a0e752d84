#include "atd3/agent.hpp"

#include "atd3/csvio.hpp"
#include "atd3/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace atd3::agent {

const char* mode_name(AgentMode m) {
    switch (m) {
        case AgentMode::Atd3: return "atd3";
        case AgentMode::Ddpg: return "ddpg";
        case AgentMode::DdpgRt: return "ddpg-rt";
    }
    return "?";
}

AgentMode mode_from_name(const std::string& name) {
    if (name == "atd3") return AgentMode::Atd3;
    if (name == "ddpg") return AgentMode::Ddpg;
    if (name == "ddpg-rt" || name == "ddpg_rt" || name == "ddpgrt") return AgentMode::DdpgRt;
    throw std::invalid_argument("unknown agent mode '" + name + "'");
}

void TrainConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("train config: ") + what +
                                                    " must be positive");
    };
    positive(actor_lr, "actor_lr");
    positive(critic_lr, "critic_lr");
    positive(gamma, "gamma");
    positive(tau, "tau");
    positive(a_max, "a_max");
    if (explore_sigma < 0 || smooth_sigma < 0 || smooth_clip < 0)
        throw std::invalid_argument("train config: noise parameters must be nonnegative");
    if (policy_delay < 1) throw std::invalid_argument("train config: policy_delay must be >= 1");
    if (batch_size == 0 || epochs == 0 || cycles_per_epoch == 0 || samples_per_cycle == 0 ||
        updates_per_cycle == 0 || hidden == 0)
        throw std::invalid_argument("train config: counts must be positive");
    if (buffer_capacity < batch_size)
        throw std::invalid_argument("train config: buffer capacity below batch size");
}

// Reusable batched computation graphs; built once per agent, re-run per update.
struct Agent::BatchGraphs {
    // target policy: s' -> a'
    num::Tape tgt_actor;
    num::Tape::Id tgt_actor_in = -1;
    nets::ActorNodes tgt_actor_nodes;

    // target value: (s', a_smoothed) -> q1', q2'
    num::Tape tgt_q;
    num::Tape::Id tgt_q_state = -1, tgt_q_action = -1;
    nets::CriticNodes tgt_q1, tgt_q2;

    // critic regression: (s, a, y) -> mse1 (+ mse2)
    num::Tape critic;
    num::Tape::Id critic_state = -1, critic_action = -1, critic_y = -1;
    num::Tape::Id mse1 = -1, mse2 = -1;
    std::vector<num::Tape::Id> critic_params;

    // policy ascent: s -> a -> q1 -> -mean(q1)
    num::Tape actor;
    num::Tape::Id actor_in = -1;
    nets::ActorNodes actor_nodes;
    num::Tape::Id actor_q = -1;
};

Agent::~Agent() = default;

Agent::Agent(AgentMode mode, const TrainConfig& cfg)
    : mode_(mode),
      cfg_(cfg),
      actor_opt_({cfg.actor_lr}),
      critic_opt_({cfg.critic_lr}),
      buffer_(cfg.buffer_capacity) {
    cfg_.validate();
    Rng master(cfg_.seed);
    Rng actor_rng = master.stream("init-actor");
    Rng c1_rng = master.stream("init-critic1");
    Rng c2_rng = master.stream("init-critic2");

    const std::size_t sd = state_dim();
    if (mode_ == AgentMode::Atd3) {
        attn_actor_ = nets::AttentionActorParams::init(cfg_.hidden, actor_rng);
        attn_actor_tgt_ = *attn_actor_;
        attn_eval_ = std::make_unique<nets::AttentionActorEval>(*attn_actor_, cfg_.a_max, scale_);
        for (auto& [n, p] : attn_actor_->tensors("")) actor_opt_.attach(*p);
    } else {
        mlp_actor_ = nets::MlpActorParams::init(sd, cfg_.hidden, actor_rng);
        mlp_actor_tgt_ = *mlp_actor_;
        mlp_eval_ = std::make_unique<nets::MlpActorEval>(*mlp_actor_, cfg_.a_max, scale_);
        for (auto& [n, p] : mlp_actor_->tensors("")) actor_opt_.attach(*p);
    }
    critic1_ = nets::CriticParams::init(sd, cfg_.hidden, c1_rng);
    critic1_tgt_ = critic1_;
    for (auto& [n, p] : critic1_.tensors("")) critic_opt_.attach(*p);
    if (twin()) {
        critic2_ = nets::CriticParams::init(sd, cfg_.hidden, c2_rng);
        critic2_tgt_ = critic2_;
        for (auto& [n, p] : critic2_.tensors("")) critic_opt_.attach(*p);
    }

    // batched graphs
    graphs_ = std::make_unique<BatchGraphs>();
    BatchGraphs& g = *graphs_;
    const std::size_t m = cfg_.batch_size;

    g.tgt_actor_in = g.tgt_actor.input(m, sd, "next_state");
    g.tgt_actor_nodes =
        mode_ == AgentMode::Atd3
            ? nets::emit_attention_actor(g.tgt_actor, *attn_actor_tgt_, g.tgt_actor_in, cfg_.a_max,
                                         "target_actor")
            : nets::emit_mlp_actor(g.tgt_actor, *mlp_actor_tgt_, g.tgt_actor_in, cfg_.a_max,
                                   "target_actor");

    g.tgt_q_state = g.tgt_q.input(m, sd, "next_state");
    g.tgt_q_action = g.tgt_q.input(m, 1, "next_action");
    g.tgt_q1 = nets::emit_critic(g.tgt_q, critic1_tgt_, g.tgt_q_state, g.tgt_q_action, cfg_.a_max,
                                 "target_critic1");
    if (twin())
        g.tgt_q2 = nets::emit_critic(g.tgt_q, critic2_tgt_, g.tgt_q_state, g.tgt_q_action,
                                     cfg_.a_max, "target_critic2");

    g.critic_state = g.critic.input(m, sd, "state");
    g.critic_action = g.critic.input(m, 1, "action");
    g.critic_y = g.critic.input(m, 1, "td_target");
    const nets::CriticNodes c1 =
        nets::emit_critic(g.critic, critic1_, g.critic_state, g.critic_action, cfg_.a_max,
                          "critic1");
    g.mse1 = g.critic.mse(c1.q, g.critic_y);
    g.critic_params = c1.params;
    if (twin()) {
        const nets::CriticNodes c2 =
            nets::emit_critic(g.critic, critic2_, g.critic_state, g.critic_action, cfg_.a_max,
                              "critic2");
        g.mse2 = g.critic.mse(c2.q, g.critic_y);
        g.critic_params.insert(g.critic_params.end(), c2.params.begin(), c2.params.end());
        g.critic.add(g.mse1, g.mse2);  // terminal: disjoint params, one backward pass
    }

    g.actor_in = g.actor.input(m, sd, "state");
    g.actor_nodes = mode_ == AgentMode::Atd3
                        ? nets::emit_attention_actor(g.actor, *attn_actor_, g.actor_in, cfg_.a_max,
                                                     "actor")
                        : nets::emit_mlp_actor(g.actor, *mlp_actor_, g.actor_in, cfg_.a_max,
                                               "actor");
    // critic 1 rides along frozen: its adjoints are computed and discarded
    const nets::CriticNodes qc =
        nets::emit_critic(g.actor, critic1_, g.actor_in, g.actor_nodes.action, cfg_.a_max,
                          "critic1");
    g.actor_q = qc.q;
    num::Tape::Id ones = g.actor.input(1, m, "ones");
    g.actor.input_value(ones).fill(1.0);
    g.actor.scale(g.actor.matmul(ones, g.actor_q), -1.0 / static_cast<double>(m));
}

double Agent::act(const env::StateWindow& s, nets::AttentionTrace* trace) {
    if (mode_ == AgentMode::Atd3) {
        nets::AttentionTrace tr;
        const double a = attn_eval_->act(s, &tr);
        max_attn_err_ = std::max(max_attn_err_, std::abs(tr.sum() - 1.0));
        if (trace) *trace = tr;
        return a;
    }
    return mlp_eval_->act(s);
}

double Agent::select_action(const env::StateWindow& s, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("select_action: sigma must be >= 0");
    double a = act(s);
    if (sigma > 0.0) a += rng.gaussian() * sigma * cfg_.a_max;
    return std::clamp(a, -cfg_.a_max, cfg_.a_max);
}

void Agent::encode_states(const std::vector<const Transition*>& batch, bool next,
                          num::Matrix& dst) const {
    const std::size_t sd = state_dim();
    double feat[3 * env::kWindow];
    for (std::size_t i = 0; i < batch.size(); ++i) {
        nets::encode_window(next ? batch[i]->s_next : batch[i]->s, scale_, feat);
        const std::size_t offset = 3 * env::kWindow - sd;
        std::copy_n(feat + offset, sd, dst.data.data() + i * sd);
    }
}

void Agent::note_attention_rows(const num::Matrix& beta) {
    for (std::size_t i = 0; i < beta.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < beta.cols; ++j) sum += beta.data[i * beta.cols + j];
        max_attn_err_ = std::max(max_attn_err_, std::abs(sum - 1.0));
    }
}

std::vector<double> Agent::compute_targets(const std::vector<const Transition*>& batch,
                                           Rng& smooth_rng) {
    if (batch.empty()) throw std::invalid_argument("compute_targets: empty batch");
    if (batch.size() != cfg_.batch_size)
        throw std::invalid_argument("compute_targets: batch size mismatch");
    BatchGraphs& g = *graphs_;

    encode_states(batch, true, g.tgt_actor.input_value(g.tgt_actor_in));
    g.tgt_actor.forward();
    if (mode_ == AgentMode::Atd3) note_attention_rows(g.tgt_actor.value(g.tgt_actor_nodes.beta));
    const num::Matrix& a_next = g.tgt_actor.value(g.tgt_actor_nodes.action);

    num::Matrix& qa = g.tgt_q.input_value(g.tgt_q_action);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double a = a_next.data[i];
        if (smoothing()) {
            const double eps = std::clamp(smooth_rng.gaussian() * cfg_.smooth_sigma * cfg_.a_max,
                                          -cfg_.smooth_clip * cfg_.a_max,
                                          cfg_.smooth_clip * cfg_.a_max);
            ++smoothing_draws_;
            a += eps;
        }
        qa.data[i] = std::clamp(a, -cfg_.a_max, cfg_.a_max);
    }
    encode_states(batch, true, g.tgt_q.input_value(g.tgt_q_state));
    g.tgt_q.forward();
    const num::Matrix& q1 = g.tgt_q.value(g.tgt_q1.q);

    std::vector<double> y(batch.size());
    if (twin()) {
        const num::Matrix& q2 = g.tgt_q.value(g.tgt_q2.q);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            y[i] = td_target(batch[i]->r, q1.data[i], q2.data[i], cfg_.gamma, batch[i]->terminal);
            ++twin_min_uses_;
        }
    } else {
        for (std::size_t i = 0; i < batch.size(); ++i)
            y[i] = td_target(batch[i]->r, q1.data[i], q1.data[i], cfg_.gamma, batch[i]->terminal);
    }
    return y;
}

std::pair<double, double> Agent::update_critics(const std::vector<const Transition*>& batch,
                                                const std::vector<double>& y) {
    if (batch.size() != cfg_.batch_size || y.size() != batch.size())
        throw std::invalid_argument("update_critics: batch/target size mismatch");
    BatchGraphs& g = *graphs_;
    encode_states(batch, false, g.critic.input_value(g.critic_state));
    num::Matrix& av = g.critic.input_value(g.critic_action);
    num::Matrix& yv = g.critic.input_value(g.critic_y);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        av.data[i] = batch[i]->a;
        yv.data[i] = y[i];
    }
    g.critic.forward();
    const double l1 = g.critic.value(g.mse1).scalar_value();
    const double l2 = twin() ? g.critic.value(g.mse2).scalar_value() : l1;
    if (!std::isfinite(l1) || !std::isfinite(l2))
        throw num::numeric_error("critic update: non-finite loss (c1=" + std::to_string(l1) +
                                 ", c2=" + std::to_string(l2) + ") at update " +
                                 std::to_string(update_iter_));
    g.critic.backward();
    std::vector<const num::Matrix*> grads;
    grads.reserve(g.critic_params.size());
    for (const num::Tape::Id p : g.critic_params) grads.push_back(&g.critic.adjoint(p));
    critic_opt_.step(grads);
    ++critic_updates_;
    return {l1, l2};
}

double Agent::update_actor(const std::vector<const Transition*>& batch) {
    if (batch.size() != cfg_.batch_size)
        throw std::invalid_argument("update_actor: batch size mismatch");
    BatchGraphs& g = *graphs_;
    encode_states(batch, false, g.actor.input_value(g.actor_in));
    g.actor.forward();
    if (mode_ == AgentMode::Atd3) note_attention_rows(g.actor.value(g.actor_nodes.beta));
    const double objective = -g.actor.value(g.actor.terminal()).scalar_value();
    if (!std::isfinite(objective))
        throw num::numeric_error("actor update: non-finite objective at update " +
                                 std::to_string(update_iter_));
    g.actor.backward();
    std::vector<const num::Matrix*> grads;
    grads.reserve(g.actor_nodes.params.size());
    for (const num::Tape::Id p : g.actor_nodes.params) grads.push_back(&g.actor.adjoint(p));
    actor_opt_.step(grads);
    ++actor_updates_;
    return objective;
}

void Agent::soft_update_targets() {
    if (mode_ == AgentMode::Atd3) {
        nets::soft_update_pairs(attn_actor_tgt_->tensors(""), attn_actor_->tensors(""), cfg_.tau);
        nets::soft_update_pairs(critic2_tgt_.tensors(""), critic2_.tensors(""), cfg_.tau);
    } else {
        nets::soft_update_pairs(mlp_actor_tgt_->tensors(""), mlp_actor_->tensors(""), cfg_.tau);
    }
    nets::soft_update_pairs(critic1_tgt_.tensors(""), critic1_.tensors(""), cfg_.tau);
    ++target_updates_;
}

double Agent::evaluate(const std::vector<const env::FollowEpisode*>& eval_pool) {
    if (eval_pool.empty()) return std::nan("");
    const std::size_t n = std::min(cfg_.eval_max_episodes, eval_pool.size());
    std::vector<double> sim, obs;
    const eval::PolicyFn policy = [this](const env::StateWindow& w, nets::AttentionTrace* tr) {
        return act(w, tr);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const eval::RolloutTrace t = eval::rollout(policy, *eval_pool[i]);
        sim.insert(sim.end(), t.sim_speed.begin(), t.sim_speed.end());
        obs.insert(obs.end(), t.obs_speed.begin(), t.obs_speed.end());
    }
    return eval::rmspe(sim, obs);
}

TrainResult Agent::train(const std::vector<const env::FollowEpisode*>& train_pool,
                         const std::vector<const env::FollowEpisode*>& eval_pool,
                         const std::filesystem::path& out_dir) {
    if (train_pool.empty()) throw std::invalid_argument("train: empty episode pool");
    for (const auto* ep : train_pool)
        if (ep->length() < env::kWindow + 1)
            throw std::invalid_argument("train: episode shorter than window + 1");

    Rng master(cfg_.seed);
    Rng explore = master.stream("explore");
    Rng sched = master.stream("sched");
    Rng sampler = master.stream("sample");
    Rng smooth = master.stream("smooth");

    TrainResult result;
    const auto t_start = std::chrono::steady_clock::now();

    std::size_t ep_idx = sched.below(train_pool.size());
    env::StateWindow window = env::reset(*train_pool[ep_idx]);
    std::size_t t = env::kWindow - 1;

    std::vector<std::size_t> idx;
    std::vector<const Transition*> batch(cfg_.batch_size);

    for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
        for (std::size_t cycle = 1; cycle <= cfg_.cycles_per_epoch; ++cycle) {
            for (std::size_t s = 0; s < cfg_.samples_per_cycle; ++s) {
                const double a = select_action(window, cfg_.explore_sigma, explore);
                const env::StepOutcome out = env::step(window, a, *train_pool[ep_idx], t);
                buffer_.push({window, a, out.reward, out.next, out.terminal});
                ++result.env_steps;
                if (out.terminal) {
                    if (out.cause == env::TerminalCause::Collision) ++result.collisions;
                    ep_idx = sched.below(train_pool.size());
                    window = env::reset(*train_pool[ep_idx]);
                    t = env::kWindow - 1;
                } else {
                    window = out.next;
                    ++t;
                }
            }

            double c1_sum = 0.0, c2_sum = 0.0, obj_sum = 0.0;
            std::size_t n_upd = 0, n_actor = 0;
            if (buffer_.size() >= cfg_.batch_size) {  // warm-up gate
                for (std::size_t u = 0; u < cfg_.updates_per_cycle; ++u) {
                    ++update_iter_;
                    buffer_.sample_indices(sampler, cfg_.batch_size, idx);
                    for (std::size_t i = 0; i < idx.size(); ++i) batch[i] = &buffer_.at(idx[i]);
                    const std::vector<double> y = compute_targets(batch, smooth);
                    const auto [l1, l2] = update_critics(batch, y);
                    c1_sum += l1;
                    c2_sum += l2;
                    ++n_upd;
                    if (update_iter_ % delay() == 0) {
                        obj_sum += update_actor(batch);
                        soft_update_targets();
                        ++n_actor;
                    }
                }
            }

            TrainLogRow row;
            row.epoch = epoch;
            row.cycle = cycle;
            row.critic1_loss = n_upd ? c1_sum / static_cast<double>(n_upd) : std::nan("");
            row.critic2_loss = n_upd ? c2_sum / static_cast<double>(n_upd) : std::nan("");
            row.actor_objective = n_actor ? obj_sum / static_cast<double>(n_actor) : std::nan("");
            result.log.push_back(row);
        }

        result.log.back().eval_rmspe = evaluate(eval_pool);
        result.log.back().wallclock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (!out_dir.empty() && cfg_.checkpoint_every > 0 && epoch % cfg_.checkpoint_every == 0) {
            char name[48];
            std::snprintf(name, sizeof(name), "checkpoint_epoch_%03zu.bin", epoch);
            save(out_dir / name);
        }
    }

    result.final_eval_rmspe = result.log.back().eval_rmspe.value_or(std::nan(""));
    result.max_attention_norm_err = max_attn_err_;
    result.critic_update_count = critic_updates_;
    result.actor_update_count = actor_updates_;
    result.target_update_count = target_updates_;
    result.smoothing_noise_draws = smoothing_draws_;
    result.twin_min_uses = twin_min_uses_;

    if (!out_dir.empty()) {
        save(out_dir / "checkpoint_final.bin");
        std::ofstream log(out_dir / "training_log.csv");
        log << "epoch,cycle,critic1_loss,critic2_loss,actor_objective,eval_rmspe\n";
        auto cell = [](double v) { return std::isnan(v) ? std::string() : csv::fmt(v); };
        for (const TrainLogRow& r : result.log) {
            log << r.epoch << ',' << r.cycle << ',' << cell(r.critic1_loss) << ','
                << (twin() ? cell(r.critic2_loss) : std::string()) << ','
                << cell(r.actor_objective) << ','
                << (r.eval_rmspe ? cell(*r.eval_rmspe) : std::string()) << '\n';
        }
        // wall time lives outside the CSV so re-runs stay bit-identical
        std::ofstream timing(out_dir / "timing.log");
        for (const TrainLogRow& r : result.log)
            if (r.eval_rmspe)
                timing << "epoch " << r.epoch << ' ' << r.wallclock_s << "s\n";
    }
    return result;
}

namespace {

std::vector<std::pair<std::string, num::Matrix*>> all_tensors(
    AgentMode mode, std::optional<nets::AttentionActorParams>& attn,
    std::optional<nets::MlpActorParams>& mlp, nets::CriticParams& c1, nets::CriticParams& c2,
    std::optional<nets::AttentionActorParams>& attn_tgt,
    std::optional<nets::MlpActorParams>& mlp_tgt, nets::CriticParams& c1_tgt,
    nets::CriticParams& c2_tgt) {
    std::vector<std::pair<std::string, num::Matrix*>> out;
    auto append = [&out](std::vector<std::pair<std::string, num::Matrix*>> v) {
        out.insert(out.end(), v.begin(), v.end());
    };
    if (mode == AgentMode::Atd3) {
        append(attn->tensors("actor."));
        append(c1.tensors("critic1."));
        append(c2.tensors("critic2."));
        append(attn_tgt->tensors("target_actor."));
        append(c1_tgt.tensors("target_critic1."));
        append(c2_tgt.tensors("target_critic2."));
    } else {
        append(mlp->tensors("actor."));
        append(c1.tensors("critic1."));
        append(mlp_tgt->tensors("target_actor."));
        append(c1_tgt.tensors("target_critic1."));
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, const num::Matrix*>> Agent::target_tensors() const {
    std::vector<std::pair<std::string, const num::Matrix*>> out;
    auto& self = const_cast<Agent&>(*this);
    for (auto& [n, p] : all_tensors(mode_, self.attn_actor_, self.mlp_actor_, self.critic1_,
                                    self.critic2_, self.attn_actor_tgt_, self.mlp_actor_tgt_,
                                    self.critic1_tgt_, self.critic2_tgt_))
        if (n.starts_with("target_")) out.emplace_back(n, p);
    return out;
}

std::vector<std::pair<std::string, const num::Matrix*>> Agent::main_tensors() const {
    std::vector<std::pair<std::string, const num::Matrix*>> out;
    auto& self = const_cast<Agent&>(*this);
    for (auto& [n, p] : all_tensors(mode_, self.attn_actor_, self.mlp_actor_, self.critic1_,
                                    self.critic2_, self.attn_actor_tgt_, self.mlp_actor_tgt_,
                                    self.critic1_tgt_, self.critic2_tgt_))
        if (!n.starts_with("target_")) out.emplace_back(n, p);
    return out;
}

void Agent::save(const std::filesystem::path& file) const {
    auto& self = const_cast<Agent&>(*this);
    num::Matrix meta(1, 6);
    meta.data = {static_cast<double>(static_cast<int>(mode_)),
                 static_cast<double>(cfg_.hidden),
                 cfg_.a_max,
                 scale_.v,
                 scale_.dv,
                 scale_.gap};
    num::NamedParams out;
    out.emplace_back("__meta__", &meta);
    for (auto& [n, p] : all_tensors(mode_, self.attn_actor_, self.mlp_actor_, self.critic1_,
                                    self.critic2_, self.attn_actor_tgt_, self.mlp_actor_tgt_,
                                    self.critic1_tgt_, self.critic2_tgt_))
        out.emplace_back(n, p);
    num::save_params(file, out);
}

PolicySnapshot PolicySnapshot::load(const std::filesystem::path& file) {
    auto tensors = num::load_params(file);
    const num::Matrix* meta = nullptr;
    for (const auto& [n, m] : tensors)
        if (n == "__meta__") meta = &m;
    if (!meta || meta->size() < 6) throw std::runtime_error("checkpoint: missing meta tensor");

    PolicySnapshot snap;
    snap.mode_ = static_cast<AgentMode>(static_cast<int>(meta->data[0]));
    const auto hidden = static_cast<std::size_t>(meta->data[1]);
    snap.a_max_ = meta->data[2];
    const nets::ObsScale scale{meta->data[3], meta->data[4], meta->data[5]};

    auto find = [&tensors, &file](const std::string& name) -> const num::Matrix& {
        for (const auto& [n, m] : tensors)
            if (n == name) return m;
        throw std::runtime_error("checkpoint: missing tensor '" + name + "' in " + file.string());
    };

    if (snap.mode_ == AgentMode::Atd3) {
        snap.attn_ = std::make_shared<nets::AttentionActorParams>();
        snap.attn_->hidden = hidden;
        snap.attn_->u_e = find("actor.U_E");
        snap.attn_->w_e = find("actor.W_E");
        snap.attn_->w1_a = find("actor.W1_a");
        snap.attn_->w2_a = find("actor.W2_a");
        snap.attn_->w_c = find("actor.W_c");
        snap.attn_eval_ =
            std::make_shared<nets::AttentionActorEval>(*snap.attn_, snap.a_max_, scale);
    } else {
        snap.mlp_ = std::make_shared<nets::MlpActorParams>();
        snap.mlp_->hidden = hidden;
        snap.mlp_->w1 = find("actor.W1");
        snap.mlp_->w2 = find("actor.W2");
        snap.mlp_->w3 = find("actor.W3");
        snap.mlp_->in_dim = snap.mlp_->w1.rows;
        snap.mlp_eval_ = std::make_shared<nets::MlpActorEval>(*snap.mlp_, snap.a_max_, scale);
    }
    return snap;
}

double PolicySnapshot::act(const env::StateWindow& s, nets::AttentionTrace* trace) {
    if (mode_ == AgentMode::Atd3) return attn_eval_->act(s, trace);
    return mlp_eval_->act(s);
}

}  // namespace atd3::agent
