#pragma once

#include "atd3/env.hpp"
#include "atd3/matrix.hpp"
#include "atd3/rng.hpp"
#include "atd3/serialize.hpp"
#include "atd3/tape.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace atd3::nets {

using num::Matrix;
using num::Tape;

// Fixed input normalization so tanh layers see O(1) values; raw physical
// units (speeds up to ~35 m/s, gaps up to 120 m) would saturate them.
struct ObsScale {
    double v = 20.0;
    double dv = 3.0;
    double gap = 50.0;
};

// Normalized window features, oldest observation first: 3 values per step.
void encode_window(const env::StateWindow& w, const ObsScale& s, double* out30);

// Softmax weights over the window, oldest step first.
struct AttentionTrace {
    std::array<double, env::kWindow> beta{};
    double sum() const {
        double acc = 0.0;
        for (const double b : beta) acc += b;
        return acc;
    }
};

// Recurrent tanh encoder over the window, concatenation attention queried by
// the final hidden state, tanh action head scaled to [-a_max, a_max].
//   h_j  = tanh(obs_j U_e + h_{j-1} W_e),      h_0 = 0
//   e_j  = tanh([h_f; h_j] W1_a) W2_a
//   beta = softmax(e),  c = sum_j beta_j h_j,  a = a_max tanh(c W_c)
struct AttentionActorParams {
    std::size_t hidden = 100;
    Matrix u_e;   // 3 x H
    Matrix w_e;   // H x H
    Matrix w1_a;  // 2H x H
    Matrix w2_a;  // H x 1
    Matrix w_c;   // H x 1

    static AttentionActorParams init(std::size_t hidden, Rng& rng);
    std::vector<std::pair<std::string, Matrix*>> tensors(const std::string& prefix);
    std::size_t scalar_count() const;
};

// Feedforward actor for the DDPG ablations: two tanh hidden layers over the
// flattened state (current observation for DDPG, full window for DDPG-RT).
struct MlpActorParams {
    std::size_t in_dim = 3;
    std::size_t hidden = 100;
    Matrix w1, w2, w3;

    static MlpActorParams init(std::size_t in_dim, std::size_t hidden, Rng& rng);
    std::vector<std::pair<std::string, Matrix*>> tensors(const std::string& prefix);
};

// Q network: two tanh hidden layers of width `hidden` over the concatenated
// (state features, normalized action), linear scalar head.
struct CriticParams {
    std::size_t state_dim = 30;
    std::size_t hidden = 100;
    Matrix w1, w2, w3;

    static CriticParams init(std::size_t state_dim, std::size_t hidden, Rng& rng);
    std::vector<std::pair<std::string, Matrix*>> tensors(const std::string& prefix);
};

// Graph builders. Each emits its network into `tape` reading the given input
// nodes, registers parameters, and returns the output node.
struct ActorNodes {
    Tape::Id action;               // batch x 1, physical m/s^2
    Tape::Id beta = -1;            // batch x 10 (attention actor only)
    std::vector<Tape::Id> params;
};

ActorNodes emit_attention_actor(Tape& tape, AttentionActorParams& p, Tape::Id state_in,
                                double a_max, const std::string& label_prefix = "actor");

ActorNodes emit_mlp_actor(Tape& tape, MlpActorParams& p, Tape::Id state_in, double a_max,
                          const std::string& label_prefix = "actor");

struct CriticNodes {
    Tape::Id q;  // batch x 1
    std::vector<Tape::Id> params;
};

CriticNodes emit_critic(Tape& tape, CriticParams& p, Tape::Id state_in, Tape::Id action_in,
                        double a_max, const std::string& label_prefix = "critic");

// target <- tau * main + (1 - tau) * target, elementwise over matched tensors
void soft_update(std::vector<Matrix*> target, const std::vector<Matrix*>& main, double tau);

inline void soft_update_pairs(std::vector<std::pair<std::string, Matrix*>> target,
                              std::vector<std::pair<std::string, Matrix*>> main, double tau) {
    std::vector<Matrix*> t, m;
    for (auto& [n, p] : target) t.push_back(p);
    for (auto& [n, p] : main) m.push_back(p);
    soft_update(t, m, tau);
}

// Single-state convenience evaluators built on a cached batch-1 graph.
class AttentionActorEval {
public:
    AttentionActorEval(AttentionActorParams& p, double a_max, ObsScale scale = {});
    double act(const env::StateWindow& w, AttentionTrace* trace = nullptr);

private:
    Tape tape_;
    Tape::Id in_;
    ActorNodes nodes_;
    ObsScale scale_;
};

class MlpActorEval {
public:
    MlpActorEval(MlpActorParams& p, double a_max, ObsScale scale = {});
    double act(const env::StateWindow& w);

private:
    Tape tape_;
    Tape::Id in_;
    ActorNodes nodes_;
    ObsScale scale_;
    std::size_t in_dim_;
};

// Spec-level one-shot forward passes (tests and small-scale use; training
// reuses cached graphs instead of rebuilding one per call).
std::pair<double, AttentionTrace> actor_forward(AttentionActorParams& p,
                                                const env::StateWindow& w,
                                                double a_max = env::kAccelMax,
                                                ObsScale scale = {});

double critic_forward(CriticParams& p, const env::StateWindow& w, double action,
                      double a_max = env::kAccelMax, ObsScale scale = {});

}  // namespace atd3::nets
