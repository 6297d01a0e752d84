#include "atd3/idm.hpp"

#include "atd3/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace atd3::idm {

void IdmParams::validate() const {
    if (!(v0 > 0 && t_h > 0 && a_m > 0 && b > 0 && s0 > 0))
        throw std::invalid_argument("idm: all parameters must be strictly positive");
}

IdmParams IdmBounds::clamp(const IdmParams& p) const {
    IdmParams out = p;
    double* fields[5] = {&out.v0, &out.t_h, &out.a_m, &out.b, &out.s0};
    for (std::size_t i = 0; i < 5; ++i)
        *fields[i] = std::clamp(*fields[i], range[i].first, range[i].second);
    return out;
}

IdmParams IdmBounds::sample(Rng& rng) const {
    IdmParams p;
    double* fields[5] = {&p.v0, &p.t_h, &p.a_m, &p.b, &p.s0};
    for (std::size_t i = 0; i < 5; ++i) *fields[i] = rng.uniform(range[i].first, range[i].second);
    return p;
}

double idm_accel(const IdmParams& p, const env::Observation& obs) {
    if (obs.gap <= 0.0) throw std::invalid_argument("idm_accel: gap must be positive");
    const double closing = -obs.dv;  // v - v_lead
    const double dynamic = obs.v_f * p.t_h + obs.v_f * closing / (2.0 * std::sqrt(p.a_m * p.b));
    const double s_star = p.s0 + std::max(0.0, dynamic);
    const double ratio = s_star / obs.gap;
    return p.a_m * (1.0 - std::pow(obs.v_f / p.v0, IdmParams::kDelta) - ratio * ratio);
}

double idm_fitness(const IdmParams& p, const std::vector<const env::FollowEpisode*>& episodes) {
    const eval::PolicyFn policy = [&p](const env::StateWindow& w, nets::AttentionTrace*) {
        return idm_accel(p, w.newest());
    };
    std::vector<double> sim, obs;
    double penalty = 0.0;
    for (const env::FollowEpisode* ep : episodes) {
        const eval::RolloutTrace t = eval::rollout(policy, *ep);
        sim.insert(sim.end(), t.sim_speed.begin(), t.sim_speed.end());
        obs.insert(obs.end(), t.obs_speed.begin(), t.obs_speed.end());
        if (t.cause == env::TerminalCause::Collision) penalty += 100.0;
    }
    return eval::rmspe(sim, obs) + penalty;
}

void GaConfig::validate() const {
    if (population < 2) throw std::invalid_argument("ga: population must be >= 2");
    if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 || mutation_rate > 1)
        throw std::invalid_argument("ga: rates must lie in [0, 1]");
    if (elitism > population) throw std::invalid_argument("ga: elitism exceeds population");
}

namespace {

using Genome = std::array<double, 5>;

Genome to_genome(const IdmParams& p) { return {p.v0, p.t_h, p.a_m, p.b, p.s0}; }
IdmParams from_genome(const Genome& g) { return {g[0], g[1], g[2], g[3], g[4]}; }

}  // namespace

GaResult calibrate_ga(const GaConfig& cfg, const std::vector<const env::FollowEpisode*>& episodes,
                      const IdmBounds& bounds) {
    cfg.validate();
    if (episodes.empty()) throw std::invalid_argument("ga: need at least one episode");

    Rng rng(cfg.seed);
    std::vector<Genome> pop(cfg.population);
    for (Genome& g : pop) g = to_genome(bounds.sample(rng));

    auto fitness_of = [&](const Genome& g) { return idm_fitness(from_genome(g), episodes); };

    std::vector<double> fit(cfg.population);
    for (std::size_t i = 0; i < cfg.population; ++i) fit[i] = fitness_of(pop[i]);

    auto rank = [&fit](std::size_t n) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&fit](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });
        return order;
    };

    auto tournament = [&]() -> const Genome& {
        std::size_t best = rng.below(cfg.population);
        for (int k = 1; k < 3; ++k) {
            const std::size_t c = rng.below(cfg.population);
            if (fit[c] < fit[best]) best = c;
        }
        return pop[best];
    };

    GaResult result;
    for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
        const auto order = rank(cfg.population);
        result.best_history.push_back(fit[order[0]]);
        double mean = 0.0;
        for (const double f : fit) mean += f;
        result.mean_history.push_back(mean / static_cast<double>(cfg.population));

        std::vector<Genome> next;
        next.reserve(cfg.population);
        for (std::size_t e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[e]]);
        while (next.size() < cfg.population) {
            Genome child = tournament();
            if (rng.uniform01() < cfg.crossover_rate) {
                const Genome& other = tournament();
                for (std::size_t i = 0; i < child.size(); ++i)
                    if (rng.uniform01() < 0.5) child[i] = other[i];
            }
            for (std::size_t i = 0; i < child.size(); ++i) {
                if (rng.uniform01() < cfg.mutation_rate) {
                    const auto [lo, hi] = bounds.range[i];
                    child[i] += rng.gaussian() * cfg.mutation_scale * (hi - lo);
                }
            }
            next.push_back(to_genome(bounds.clamp(from_genome(child))));
        }
        pop = std::move(next);
        for (std::size_t i = 0; i < cfg.population; ++i) fit[i] = fitness_of(pop[i]);
    }

    const auto order = rank(cfg.population);
    result.best_history.push_back(fit[order[0]]);
    double mean = 0.0;
    for (const double f : fit) mean += f;
    result.mean_history.push_back(mean / static_cast<double>(cfg.population));
    result.best = from_genome(pop[order[0]]);
    result.best_fitness = fit[order[0]];
    return result;
}

}  // namespace atd3::idm
