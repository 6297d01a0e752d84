#pragma once

#include "atd3/env.hpp"
#include "atd3/rng.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace atd3::idm {

// Intelligent Driver Model. Acceleration law:
//   a = a_m * (1 - (v/v0)^delta - (s*/s)^2)
//   s* = s0 + max(0, v*T_h + v*(v - v_lead) / (2 sqrt(a_m b)))
// The dynamic desired gap is floored at s0.
struct IdmParams {
    double v0 = 30.0;   // desired speed, m/s
    double t_h = 1.5;   // desired time headway, s
    double a_m = 1.5;   // max acceleration, m/s^2
    double b = 2.0;     // comfortable deceleration, m/s^2
    double s0 = 2.0;    // jam distance, m
    static constexpr double kDelta = 4.0;

    void validate() const;
};

// Calibration search box, one [lo, hi] per parameter in IdmParams order.
struct IdmBounds {
    std::array<std::pair<double, double>, 5> range{{{1.0, 42.0},
                                                    {0.1, 5.0},
                                                    {0.1, 6.0},
                                                    {0.1, 6.0},
                                                    {0.1, 10.0}}};
    IdmParams clamp(const IdmParams& p) const;
    IdmParams sample(Rng& rng) const;
};

double idm_accel(const IdmParams& p, const env::Observation& obs);

// Closed-loop speed RMSPE of an IDM rollout over the episodes, pooled over
// the concatenation; collisions add a 100-point penalty so the fitness
// surface stays connected.
double idm_fitness(const IdmParams& p, const std::vector<const env::FollowEpisode*>& episodes);

struct GaConfig {
    std::size_t population = 50;
    std::size_t generations = 100;
    double crossover_rate = 0.9;
    double mutation_rate = 0.15;
    double mutation_scale = 0.1;  // fraction of each bound range
    std::size_t elitism = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GaResult {
    IdmParams best;
    double best_fitness = 0.0;
    std::vector<double> best_history;  // per generation
    std::vector<double> mean_history;
};

// Real-coded GA: tournament selection (size 3), uniform crossover, Gaussian
// mutation scaled to the bound ranges, elitism. Deterministic per seed.
GaResult calibrate_ga(const GaConfig& cfg, const std::vector<const env::FollowEpisode*>& episodes,
                      const IdmBounds& bounds = {});

}  // namespace atd3::idm
