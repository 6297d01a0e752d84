#pragma once

#include "atd3/env.hpp"
#include "atd3/idm.hpp"
#include "atd3/rng.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace atd3::data {

// One row of a trajectory file at 0.1 s resolution, already unit-converted.
struct RawVehicleRecord {
    long vehicle_id = 0;
    long frame = 0;
    double lateral = 0.0;       // m
    double longitudinal = 0.0;  // m
    double speed = 0.0;         // m/s
    long lane = 0;
    long preceding = 0;         // 0 = no leader
    double spacing = 0.0;       // m, front-to-front headway; <= 0 if absent
};

struct VehicleTrack {
    long vehicle_id = 0;
    std::vector<RawVehicleRecord> records;  // frame-sorted, contiguous
};

struct ParseResult {
    std::map<long, VehicleTrack> tracks;
    std::vector<long> dropped_noncontiguous;
};

// Input columns: Vehicle_ID, Frame_ID, Local_X, Local_Y, v_Vel, Lane_ID,
// Preceding, Space_Headway. Units come from the sidecar config; raw NGSIM is
// in feet and converted exactly once on ingest.
struct UnitSpec {
    bool feet = true;  // false: already metric, never converted
    static UnitSpec from_sidecar(const std::filesystem::path& csv_file);
};

ParseResult parse_trajectories(const std::filesystem::path& csv_file, const UnitSpec& units);

struct FilterCriteria {
    double max_gap = 120.0;       // m
    double max_lateral = 2.5;     // m
    std::size_t min_steps = 150;  // 15 s
    std::size_t episode_steps = 400;
    bool require_constant_leader = true;
};

struct RejectionStats {
    std::size_t leader_changed = 0;
    std::size_t leader_missing = 0;
    std::size_t gap_exceeded = 0;
    std::size_t lateral_exceeded = 0;
    std::size_t nonpositive_gap = 0;
    std::size_t too_short = 0;
    std::size_t kept = 0;
};

struct EpisodeRecord {
    env::FollowEpisode episode;
    long follower_id = 0;
    long leader_id = 0;
    long start_frame = 0;
    std::string scenario;  // synthetic episodes only
};

struct ExtractResult {
    std::vector<EpisodeRecord> episodes;
    RejectionStats stats;
};

// Maximal contiguous spans per follower with a constant, present leader,
// gap in (0, max_gap), lateral separation < max_lateral; spans longer than
// min_steps are cut into episode_steps-long episodes from the start, with
// remainders >= min_steps kept as additional episodes.
ExtractResult extract_follow_pairs(const ParseResult& parsed, const FilterCriteria& criteria = {});

// Re-check an episode against the criteria (post-hoc validator).
bool satisfies_criteria(const env::FollowEpisode& ep, const FilterCriteria& criteria = {});

struct DatasetSplit {
    std::vector<std::size_t> train;  // indices into the episode vector
    std::vector<std::size_t> test;
    bool test_empty_warning = false;
};

// Seeded uniform split grouped by follower vehicle id; no vehicle
// contributes to both sides.
DatasetSplit split(const std::vector<EpisodeRecord>& episodes, std::size_t train_count,
                   std::uint64_t seed);

// --- synthetic generation -------------------------------------------------

enum class Scenario { Smooth, StopGo, Brake };

const char* scenario_name(Scenario s);

struct ScenarioMix {
    double smooth = 0.5;
    double stopgo = 0.3;
    double brake = 0.2;
};

// Exact largest-remainder apportionment of n episodes over the mix.
std::array<std::size_t, 3> apportion(const ScenarioMix& mix, std::size_t n);

struct SynthConfig {
    std::size_t episodes = 50;
    ScenarioMix mix;
    std::size_t steps = 400;
    std::uint64_t seed = 0;
    idm::IdmParams reference;      // follower behavior core
    double param_jitter = 0.1;     // +-10% per episode
    std::size_t max_retries = 20;  // collision regeneration budget
};

// Lead profiles per scenario driven by seeded noise; followers are closed-
// loop IDM integrated with the same kinematics the environment replays, so
// synthetic episodes satisfy the round-trip identity by construction.
std::vector<EpisodeRecord> synthesize(const SynthConfig& cfg);

// Episode directory I/O: one CSV per episode plus an index.json.
void write_episode_dir(const std::filesystem::path& dir, const std::vector<EpisodeRecord>& episodes,
                       const RejectionStats* stats = nullptr);
std::vector<EpisodeRecord> read_episode_dir(const std::filesystem::path& dir);

}  // namespace atd3::data
