#include "atd3/data.hpp"

#include "atd3/csvio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace atd3::data {

namespace {
constexpr double kFeetToMeters = 0.3048;
}

UnitSpec UnitSpec::from_sidecar(const std::filesystem::path& csv_file) {
    const std::filesystem::path sidecar = csv_file.string() + ".units.json";
    UnitSpec spec;
    if (!std::filesystem::exists(sidecar)) return spec;  // NGSIM raw default
    std::ifstream is(sidecar);
    nlohmann::json j;
    is >> j;
    const std::string units = j.at("units").get<std::string>();
    if (units == "feet") spec.feet = true;
    else if (units == "meters") spec.feet = false;
    else throw std::runtime_error("units sidecar: expected 'feet' or 'meters', got '" + units + "'");
    return spec;
}

ParseResult parse_trajectories(const std::filesystem::path& csv_file, const UnitSpec& units) {
    const csv::Table table = csv::read_table(csv_file);
    const char* required[] = {"Vehicle_ID", "Frame_ID", "Local_X", "Local_Y",
                              "v_Vel",      "Lane_ID",  "Preceding"};
    int cols[7];
    for (int i = 0; i < 7; ++i) {
        cols[i] = table.column(required[i]);
        if (cols[i] < 0)
            throw std::runtime_error("trajectories: missing column '" + std::string(required[i]) +
                                     "' in " + csv_file.string());
    }
    const int c_spacing = table.column("Space_Headway");
    const double unit = units.feet ? kFeetToMeters : 1.0;

    std::map<long, VehicleTrack> tracks;
    for (const auto& row : table.rows) {
        RawVehicleRecord rec;
        rec.vehicle_id = csv::parse_long(row[cols[0]]);
        rec.frame = csv::parse_long(row[cols[1]]);
        rec.lateral = csv::parse_double(row[cols[2]]) * unit;
        rec.longitudinal = csv::parse_double(row[cols[3]]) * unit;
        rec.speed = csv::parse_double(row[cols[4]]) * unit;
        rec.lane = csv::parse_long(row[cols[5]]);
        rec.preceding = csv::parse_long(row[cols[6]]);
        rec.spacing = c_spacing >= 0 ? csv::parse_double(row[c_spacing]) * unit : 0.0;
        VehicleTrack& track = tracks[rec.vehicle_id];
        track.vehicle_id = rec.vehicle_id;
        track.records.push_back(rec);
    }

    ParseResult out;
    for (auto& [id, track] : tracks) {
        std::stable_sort(track.records.begin(), track.records.end(),
                         [](const RawVehicleRecord& a, const RawVehicleRecord& b) {
                             return a.frame < b.frame;
                         });
        bool contiguous = true;
        for (std::size_t i = 1; i < track.records.size(); ++i)
            if (track.records[i].frame != track.records[i - 1].frame + 1) {
                contiguous = false;
                break;
            }
        if (contiguous) out.tracks.emplace(id, std::move(track));
        else out.dropped_noncontiguous.push_back(id);
    }
    return out;
}

namespace {

struct SpanStep {
    double lead_speed, lead_pos, fol_speed, fol_pos;
};

void cut_span(const std::vector<SpanStep>& span, long follower, long leader, long start_frame,
              const FilterCriteria& criteria, ExtractResult& out) {
    if (span.size() <= criteria.min_steps) {
        if (!span.empty()) ++out.stats.too_short;
        return;
    }
    std::size_t offset = 0;
    while (offset < span.size()) {
        const std::size_t remaining = span.size() - offset;
        std::size_t take;
        if (remaining >= criteria.episode_steps) {
            take = criteria.episode_steps;
        } else if (remaining >= criteria.min_steps) {
            take = remaining;
        } else {
            ++out.stats.too_short;
            break;
        }
        EpisodeRecord rec;
        rec.follower_id = follower;
        rec.leader_id = leader;
        rec.start_frame = start_frame + static_cast<long>(offset);
        for (std::size_t i = 0; i < take; ++i) {
            const SpanStep& s = span[offset + i];
            rec.episode.lead_speed.push_back(s.lead_speed);
            rec.episode.lead_pos.push_back(s.lead_pos);
            rec.episode.fol_speed.push_back(s.fol_speed);
            rec.episode.fol_pos.push_back(s.fol_pos);
        }
        out.episodes.push_back(std::move(rec));
        ++out.stats.kept;
        offset += take;
    }
}

}  // namespace

ExtractResult extract_follow_pairs(const ParseResult& parsed, const FilterCriteria& criteria) {
    ExtractResult out;
    for (const auto& [fid, track] : parsed.tracks) {
        std::vector<SpanStep> span;
        long span_leader = 0;
        long span_start_frame = 0;

        auto flush = [&]() {
            cut_span(span, fid, span_leader, span_start_frame, criteria, out);
            span.clear();
        };

        for (const RawVehicleRecord& rec : track.records) {
            if (rec.preceding <= 0) {
                if (!span.empty()) ++out.stats.leader_missing;
                flush();
                continue;
            }
            if (criteria.require_constant_leader && !span.empty() && rec.preceding != span_leader) {
                ++out.stats.leader_changed;
                flush();
            }

            const auto lead_it = parsed.tracks.find(rec.preceding);
            const RawVehicleRecord* lead = nullptr;
            if (lead_it != parsed.tracks.end()) {
                const auto& lr = lead_it->second.records;
                const long first = lr.front().frame;
                const long idx = rec.frame - first;
                if (idx >= 0 && idx < static_cast<long>(lr.size())) lead = &lr[idx];
            }
            if (!lead) {
                if (!span.empty()) ++out.stats.leader_missing;
                flush();
                continue;
            }

            const double gap =
                rec.spacing > 0.0 ? rec.spacing : lead->longitudinal - rec.longitudinal;
            const double lateral = std::abs(lead->lateral - rec.lateral);
            if (gap <= 0.0 || gap >= criteria.max_gap || lateral >= criteria.max_lateral) {
                if (!span.empty()) {
                    if (gap <= 0.0) ++out.stats.nonpositive_gap;
                    else if (gap >= criteria.max_gap) ++out.stats.gap_exceeded;
                    else ++out.stats.lateral_exceeded;
                }
                flush();
                continue;
            }

            if (span.empty()) {
                span_leader = rec.preceding;
                span_start_frame = rec.frame;
            }
            span.push_back({lead->speed, rec.longitudinal + gap, rec.speed, rec.longitudinal});
        }
        flush();
    }
    return out;
}

bool satisfies_criteria(const env::FollowEpisode& ep, const FilterCriteria& criteria) {
    if (ep.length() < criteria.min_steps) return false;
    for (std::size_t t = 0; t < ep.length(); ++t) {
        const double gap = ep.recorded_gap(t);
        if (gap <= 0.0 || gap >= criteria.max_gap) return false;
    }
    return true;
}

DatasetSplit split(const std::vector<EpisodeRecord>& episodes, std::size_t train_count,
                   std::uint64_t seed) {
    if (train_count > episodes.size())
        throw std::invalid_argument("split: train_count " + std::to_string(train_count) +
                                    " exceeds episode count " + std::to_string(episodes.size()));

    std::map<long, std::vector<std::size_t>> by_vehicle;
    for (std::size_t i = 0; i < episodes.size(); ++i)
        by_vehicle[episodes[i].follower_id].push_back(i);

    std::vector<long> ids;
    ids.reserve(by_vehicle.size());
    for (const auto& [id, eps] : by_vehicle) ids.push_back(id);

    Rng rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[rng.below(i)]);  // Fisher-Yates

    DatasetSplit out;
    std::size_t taken = 0;
    for (const long id : ids) {
        auto& eps = by_vehicle[id];
        if (taken < train_count) {
            out.train.insert(out.train.end(), eps.begin(), eps.end());
            taken += eps.size();
        } else {
            out.test.insert(out.test.end(), eps.begin(), eps.end());
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    out.test_empty_warning = out.test.empty();
    return out;
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Smooth: return "smooth";
        case Scenario::StopGo: return "stopgo";
        case Scenario::Brake: return "brake";
    }
    return "?";
}

std::array<std::size_t, 3> apportion(const ScenarioMix& mix, std::size_t n) {
    const double total = mix.smooth + mix.stopgo + mix.brake;
    if (!(total > 0.0)) throw std::invalid_argument("mix: proportions must sum to > 0");
    const double share[3] = {mix.smooth / total, mix.stopgo / total, mix.brake / total};
    std::array<std::size_t, 3> counts{};
    double remainder[3];
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = share[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - std::floor(exact);
        assigned += counts[i];
    }
    while (assigned < n) {  // largest remainder first; ties to the lower index
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (remainder[i] > remainder[best]) best = i;
        ++counts[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    return counts;
}

namespace {

std::vector<double> lead_profile(Scenario scenario, std::size_t steps, Rng& rng) {
    std::vector<double> v(steps);
    switch (scenario) {
        case Scenario::Smooth: {
            const double base = rng.uniform(15.0, 28.0);
            const double a1 = rng.uniform(0.3, 0.8), p1 = rng.uniform(150.0, 300.0);
            const double a2 = rng.uniform(0.1, 0.4), p2 = rng.uniform(60.0, 120.0);
            const double ph1 = rng.uniform(0.0, 6.283), ph2 = rng.uniform(0.0, 6.283);
            for (std::size_t t = 0; t < steps; ++t)
                v[t] = base + a1 * std::sin(6.283185307179586 * t / p1 + ph1) +
                       a2 * std::sin(6.283185307179586 * t / p2 + ph2);
            break;
        }
        case Scenario::StopGo: {
            const double base = rng.uniform(8.0, 14.0);
            const double amp = rng.uniform(4.0, std::min(7.0, base - 0.5));
            const double period = rng.uniform(120.0, 200.0);
            const double phase = rng.uniform(0.0, 6.283);
            for (std::size_t t = 0; t < steps; ++t)
                v[t] = std::max(0.3, base + amp * std::sin(6.283185307179586 * t / period + phase));
            break;
        }
        case Scenario::Brake: {
            const double base = rng.uniform(15.0, 25.0);
            const std::size_t t_brake = 100 + rng.below(150);
            const std::size_t brake_steps = 20;  // -3 m/s^2 for 2 s
            const std::size_t hold_steps = 20;
            double speed = base;
            for (std::size_t t = 0; t < steps; ++t) {
                if (t >= t_brake && t < t_brake + brake_steps) speed -= 3.0 * env::kDt;
                else if (t >= t_brake + brake_steps + hold_steps && speed < base)
                    speed = std::min(base, speed + 1.0 * env::kDt);
                v[t] = std::max(0.3, speed);
            }
            break;
        }
    }
    return v;
}

// Integrate the follower with exactly the environment's update so recorded
// accelerations replay to the recorded series.
bool integrate_follower(const std::vector<double>& lead_speed, const idm::IdmParams& p,
                        double v0, double gap0, env::FollowEpisode& ep) {
    const std::size_t steps = lead_speed.size();
    ep.lead_speed = lead_speed;
    ep.lead_pos.assign(steps, 0.0);
    ep.fol_speed.assign(steps, 0.0);
    ep.fol_pos.assign(steps, 0.0);

    ep.lead_pos[0] = gap0;
    ep.fol_pos[0] = 0.0;
    ep.fol_speed[0] = v0;
    env::Observation obs{v0, lead_speed[0] - v0, gap0};
    for (std::size_t t = 0; t + 1 < steps; ++t) {
        const double a = idm::idm_accel(p, obs);
        const env::Observation next = env::kinematic_update(obs, a, lead_speed[t + 1]);
        if (next.gap <= 0.5) return false;  // too close, regenerate
        ep.fol_speed[t + 1] = next.v_f;
        ep.fol_pos[t + 1] = ep.fol_pos[t] + 0.5 * (ep.fol_speed[t] + next.v_f) * env::kDt;
        ep.lead_pos[t + 1] = ep.lead_pos[t] + 0.5 * (lead_speed[t] + lead_speed[t + 1]) * env::kDt;
        obs = next;
    }
    return true;
}

}  // namespace

std::vector<EpisodeRecord> synthesize(const SynthConfig& cfg) {
    const auto counts = apportion(cfg.mix, cfg.episodes);
    std::vector<Scenario> plan;
    plan.reserve(cfg.episodes);
    for (std::size_t i = 0; i < counts[0]; ++i) plan.push_back(Scenario::Smooth);
    for (std::size_t i = 0; i < counts[1]; ++i) plan.push_back(Scenario::StopGo);
    for (std::size_t i = 0; i < counts[2]; ++i) plan.push_back(Scenario::Brake);

    std::vector<EpisodeRecord> out;
    out.reserve(cfg.episodes);
    Rng master(cfg.seed);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        bool done = false;
        for (std::size_t attempt = 0; attempt <= cfg.max_retries && !done; ++attempt) {
            Rng rng = master.stream("episode-" + std::to_string(i) + "-" + std::to_string(attempt));
            const std::vector<double> lead = lead_profile(plan[i], cfg.steps, rng);

            idm::IdmParams p = cfg.reference;
            double* fields[5] = {&p.v0, &p.t_h, &p.a_m, &p.b, &p.s0};
            for (double* f : fields)
                *f *= 1.0 + rng.uniform(-cfg.param_jitter, cfg.param_jitter);

            // start on the model's equilibrium so the opening steps carry no
            // artificial transient: s_eq solves a = 0 at dv = 0
            const double v0 = std::min(lead[0], 0.9 * p.v0);
            const double free_term = 1.0 - std::pow(v0 / p.v0, idm::IdmParams::kDelta);
            const double gap0 = (p.s0 + p.t_h * v0) / std::sqrt(free_term);

            EpisodeRecord rec;
            rec.follower_id = static_cast<long>(i);
            rec.leader_id = -1;
            rec.scenario = scenario_name(plan[i]);
            if (integrate_follower(lead, p, v0, gap0, rec.episode)) {
                rec.episode.validate();
                out.push_back(std::move(rec));
                done = true;
            }
        }
        if (!done)
            throw std::runtime_error("synthesize: episode " + std::to_string(i) +
                                     " kept colliding after retries");
    }
    return out;
}

void write_episode_dir(const std::filesystem::path& dir, const std::vector<EpisodeRecord>& episodes,
                       const RejectionStats* stats) {
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    index["episodes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "episode_%04zu.csv", i);
        episodes[i].episode.to_csv(dir / name);
        index["episodes"].push_back({{"file", name},
                                     {"vehicle_id", episodes[i].follower_id},
                                     {"leader_id", episodes[i].leader_id},
                                     {"start_frame", episodes[i].start_frame},
                                     {"scenario", episodes[i].scenario},
                                     {"steps", episodes[i].episode.length()}});
    }
    if (stats) {
        index["rejections"] = {{"leader_changed", stats->leader_changed},
                               {"leader_missing", stats->leader_missing},
                               {"gap_exceeded", stats->gap_exceeded},
                               {"lateral_exceeded", stats->lateral_exceeded},
                               {"nonpositive_gap", stats->nonpositive_gap},
                               {"too_short", stats->too_short},
                               {"kept", stats->kept}};
    }
    std::ofstream os(dir / "index.json");
    os << index.dump(2) << "\n";
}

std::vector<EpisodeRecord> read_episode_dir(const std::filesystem::path& dir) {
    const std::filesystem::path index_file = dir / "index.json";
    std::ifstream is(index_file);
    if (!is) throw std::runtime_error("episodes: cannot open " + index_file.string());
    nlohmann::json index;
    is >> index;
    std::vector<EpisodeRecord> out;
    for (const auto& entry : index.at("episodes")) {
        EpisodeRecord rec;
        rec.episode = env::FollowEpisode::from_csv(dir / entry.at("file").get<std::string>());
        rec.follower_id = entry.at("vehicle_id").get<long>();
        rec.leader_id = entry.value("leader_id", -1L);
        rec.start_frame = entry.value("start_frame", 0L);
        rec.scenario = entry.value("scenario", std::string{});
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace atd3::data
