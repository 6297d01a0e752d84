#include "atd3/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace atd3::nets {

namespace {

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
    Matrix m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : m.data) v = rng.uniform(-bound, bound);
    return m;
}

}  // namespace

void encode_window(const env::StateWindow& w, const ObsScale& s, double* out) {
    for (std::size_t i = 0; i < env::kWindow; ++i) {
        const env::Observation& o = w.at(i);
        out[3 * i + 0] = o.v_f / s.v;
        out[3 * i + 1] = o.dv / s.dv;
        out[3 * i + 2] = o.gap / s.gap;
    }
}

AttentionActorParams AttentionActorParams::init(std::size_t hidden, Rng& rng) {
    AttentionActorParams p;
    p.hidden = hidden;
    p.u_e = uniform_init(3, hidden, 3, rng);
    p.w_e = uniform_init(hidden, hidden, hidden, rng);
    p.w1_a = uniform_init(2 * hidden, hidden, 2 * hidden, rng);
    p.w2_a = uniform_init(hidden, 1, hidden, rng);
    p.w_c = uniform_init(hidden, 1, hidden, rng);
    return p;
}

std::vector<std::pair<std::string, Matrix*>> AttentionActorParams::tensors(
    const std::string& prefix) {
    return {{prefix + "U_E", &u_e},
            {prefix + "W_E", &w_e},
            {prefix + "W1_a", &w1_a},
            {prefix + "W2_a", &w2_a},
            {prefix + "W_c", &w_c}};
}

std::size_t AttentionActorParams::scalar_count() const {
    return u_e.size() + w_e.size() + w1_a.size() + w2_a.size() + w_c.size();
}

MlpActorParams MlpActorParams::init(std::size_t in_dim, std::size_t hidden, Rng& rng) {
    MlpActorParams p;
    p.in_dim = in_dim;
    p.hidden = hidden;
    p.w1 = uniform_init(in_dim, hidden, in_dim, rng);
    p.w2 = uniform_init(hidden, hidden, hidden, rng);
    p.w3 = uniform_init(hidden, 1, hidden, rng);
    return p;
}

std::vector<std::pair<std::string, Matrix*>> MlpActorParams::tensors(const std::string& prefix) {
    return {{prefix + "W1", &w1}, {prefix + "W2", &w2}, {prefix + "W3", &w3}};
}

CriticParams CriticParams::init(std::size_t state_dim, std::size_t hidden, Rng& rng) {
    CriticParams p;
    p.state_dim = state_dim;
    p.hidden = hidden;
    p.w1 = uniform_init(state_dim + 1, hidden, state_dim + 1, rng);
    p.w2 = uniform_init(hidden, hidden, hidden, rng);
    p.w3 = uniform_init(hidden, 1, hidden, rng);
    return p;
}

std::vector<std::pair<std::string, Matrix*>> CriticParams::tensors(const std::string& prefix) {
    return {{prefix + "W1", &w1}, {prefix + "W2", &w2}, {prefix + "W3", &w3}};
}

ActorNodes emit_attention_actor(Tape& tape, AttentionActorParams& p, Tape::Id state_in,
                                double a_max, const std::string& lp) {
    const std::size_t h = p.hidden;
    const std::size_t batch = tape.node(state_in).value.rows;
    if (tape.node(state_in).value.cols != 3 * env::kWindow)
        throw std::invalid_argument("attention actor: state input must be batch x " +
                                    std::to_string(3 * env::kWindow));

    ActorNodes out;
    const Tape::Id u_e = tape.param(p.u_e, lp + ".U_E");
    const Tape::Id w_e = tape.param(p.w_e, lp + ".W_E");
    const Tape::Id w1_a = tape.param(p.w1_a, lp + ".W1_a");
    const Tape::Id w2_a = tape.param(p.w2_a, lp + ".W2_a");
    const Tape::Id w_c = tape.param(p.w_c, lp + ".W_c");
    out.params = {u_e, w_e, w1_a, w2_a, w_c};

    // encoder: h_j = tanh(obs_j U_E + h_{j-1} W_E); the h_0 = 0 term drops out
    std::vector<Tape::Id> hidden;
    hidden.reserve(env::kWindow);
    for (std::size_t j = 0; j < env::kWindow; ++j) {
        const Tape::Id obs_j = tape.slice(state_in, 0, 3 * j, batch, 3);
        const Tape::Id proj = tape.matmul(obs_j, u_e);
        const Tape::Id pre =
            j == 0 ? proj : tape.add(proj, tape.matmul(hidden.back(), w_e));
        hidden.push_back(tape.tanh(pre));
    }
    const Tape::Id h_f = hidden.back();

    // concatenation scores: [h_f; h_j] W1_a == h_f W1_a[:H] + h_j W1_a[H:],
    // with the query half hoisted out of the loop
    const Tape::Id w1_query = tape.slice(w1_a, 0, 0, h, h);
    const Tape::Id w1_key = tape.slice(w1_a, h, 0, h, h);
    const Tape::Id query_proj = tape.matmul(h_f, w1_query);
    Tape::Id scores = -1;
    for (std::size_t j = 0; j < env::kWindow; ++j) {
        const Tape::Id mix = tape.add(query_proj, tape.matmul(hidden[j], w1_key));
        const Tape::Id e_j = tape.matmul(tape.tanh(mix), w2_a);
        scores = j == 0 ? e_j : tape.concat_cols(scores, e_j);
    }
    out.beta = tape.softmax_rows(scores);

    // context: weighted sum of hidden states
    Tape::Id context = -1;
    for (std::size_t j = 0; j < env::kWindow; ++j) {
        const Tape::Id beta_j = tape.slice(out.beta, 0, j, batch, 1);
        const Tape::Id term = tape.row_scale(hidden[j], beta_j);
        context = j == 0 ? term : tape.add(context, term);
    }
    out.action = tape.scale(tape.tanh(tape.matmul(context, w_c)), a_max);
    return out;
}

ActorNodes emit_mlp_actor(Tape& tape, MlpActorParams& p, Tape::Id state_in, double a_max,
                          const std::string& lp) {
    if (tape.node(state_in).value.cols != p.in_dim)
        throw std::invalid_argument("mlp actor: state input must be batch x " +
                                    std::to_string(p.in_dim));
    ActorNodes out;
    const Tape::Id w1 = tape.param(p.w1, lp + ".W1");
    const Tape::Id w2 = tape.param(p.w2, lp + ".W2");
    const Tape::Id w3 = tape.param(p.w3, lp + ".W3");
    out.params = {w1, w2, w3};
    const Tape::Id h1 = tape.tanh(tape.matmul(state_in, w1));
    const Tape::Id h2 = tape.tanh(tape.matmul(h1, w2));
    out.action = tape.scale(tape.tanh(tape.matmul(h2, w3)), a_max);
    return out;
}

CriticNodes emit_critic(Tape& tape, CriticParams& p, Tape::Id state_in, Tape::Id action_in,
                        double a_max, const std::string& lp) {
    if (tape.node(state_in).value.cols != p.state_dim)
        throw std::invalid_argument("critic: state input must be batch x " +
                                    std::to_string(p.state_dim));
    if (tape.node(action_in).value.cols != 1)
        throw std::invalid_argument("critic: action input must be batch x 1");
    CriticNodes out;
    const Tape::Id w1 = tape.param(p.w1, lp + ".W1");
    const Tape::Id w2 = tape.param(p.w2, lp + ".W2");
    const Tape::Id w3 = tape.param(p.w3, lp + ".W3");
    out.params = {w1, w2, w3};
    const Tape::Id x = tape.concat_cols(state_in, tape.scale(action_in, 1.0 / a_max));
    const Tape::Id h1 = tape.tanh(tape.matmul(x, w1));
    const Tape::Id h2 = tape.tanh(tape.matmul(h1, w2));
    out.q = tape.matmul(h2, w3);
    return out;
}

void soft_update(std::vector<Matrix*> target, const std::vector<Matrix*>& main, double tau) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("soft_update: tau outside [0, 1]");
    if (target.size() != main.size())
        throw std::invalid_argument("soft_update: tensor count mismatch");
    for (std::size_t i = 0; i < target.size(); ++i) {
        Matrix& t = *target[i];
        const Matrix& m = *main[i];
        if (!t.same_shape(m))
            throw std::invalid_argument("soft_update: shape mismatch " + t.shape_str() + " vs " +
                                        m.shape_str());
        for (std::size_t j = 0; j < t.size(); ++j)
            t.data[j] = tau * m.data[j] + (1.0 - tau) * t.data[j];
    }
}

AttentionActorEval::AttentionActorEval(AttentionActorParams& p, double a_max, ObsScale scale)
    : scale_(scale) {
    in_ = tape_.input(1, 3 * env::kWindow, "state");
    nodes_ = emit_attention_actor(tape_, p, in_, a_max);
}

double AttentionActorEval::act(const env::StateWindow& w, AttentionTrace* trace) {
    encode_window(w, scale_, tape_.input_value(in_).data.data());
    tape_.forward();
    if (trace) {
        const Matrix& beta = tape_.value(nodes_.beta);
        for (std::size_t j = 0; j < env::kWindow; ++j) trace->beta[j] = beta.data[j];
    }
    return tape_.value(nodes_.action).data[0];
}

MlpActorEval::MlpActorEval(MlpActorParams& p, double a_max, ObsScale scale)
    : scale_(scale), in_dim_(p.in_dim) {
    in_ = tape_.input(1, p.in_dim, "state");
    nodes_ = emit_mlp_actor(tape_, p, in_, a_max);
}

double MlpActorEval::act(const env::StateWindow& w) {
    double feat[3 * env::kWindow];
    encode_window(w, scale_, feat);
    double* dst = tape_.input_value(in_).data.data();
    // current observation only (in_dim 3) or the full window (in_dim 30)
    const std::size_t offset = 3 * env::kWindow - in_dim_;
    for (std::size_t i = 0; i < in_dim_; ++i) dst[i] = feat[offset + i];
    tape_.forward();
    return tape_.value(nodes_.action).data[0];
}

std::pair<double, AttentionTrace> actor_forward(AttentionActorParams& p,
                                                const env::StateWindow& w, double a_max,
                                                ObsScale scale) {
    AttentionActorEval eval(p, a_max, scale);
    AttentionTrace trace;
    const double a = eval.act(w, &trace);
    return {a, trace};
}

double critic_forward(CriticParams& p, const env::StateWindow& w, double action, double a_max,
                      ObsScale scale) {
    Tape tape;
    const Tape::Id s = tape.input(1, p.state_dim, "state");
    const Tape::Id a = tape.input(1, 1, "action");
    const CriticNodes nodes = emit_critic(tape, p, s, a, a_max);
    double feat[3 * env::kWindow];
    encode_window(w, scale, feat);
    const std::size_t offset = 3 * env::kWindow - p.state_dim;
    for (std::size_t i = 0; i < p.state_dim; ++i) tape.input_value(s).data[i] = feat[offset + i];
    tape.input_value(a).data[0] = action;
    tape.forward();
    return tape.value(nodes.q).data[0];
}

}  // namespace atd3::nets
