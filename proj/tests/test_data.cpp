#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atd3/data.hpp"
#include "atd3/env.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace atd3;

namespace {

const char* kHeader = "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,Lane_ID,Preceding,Space_Headway\n";

std::filesystem::path write_csv(const std::string& name, const std::string& body,
                                const std::string& units = "meters") {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream os(path);
    os << kHeader << body;
    os.close();
    std::ofstream sidecar(path.string() + ".units.json");
    sidecar << "{\"units\": \"" << units << "\"}\n";
    return path;
}

// leader 1 and follower 2 driving in lockstep for `steps` frames
std::string lockstep_rows(int steps, double gap = 20.0, double speed = 10.0,
                          double follower_lat = 1.0, long leader = 1) {
    std::string body;
    for (int f = 0; f < steps; ++f) {
        const double pos = speed * 0.1 * f;
        body += "1," + std::to_string(f) + ",1.0," + std::to_string(pos + gap) + "," +
                std::to_string(speed) + ",2,0,0\n";
        body += "2," + std::to_string(f) + "," + std::to_string(follower_lat) + "," +
                std::to_string(pos) + "," + std::to_string(speed) + ",2," +
                std::to_string(leader) + "," + std::to_string(gap) + "\n";
    }
    return body;
}

void cleanup(const std::filesystem::path& p) {
    std::filesystem::remove(p);
    std::filesystem::remove(p.string() + ".units.json");
}

}  // namespace

TEST_CASE("empty file with a valid header parses to an empty result") {
    const auto path = write_csv("atd3_empty.csv", "");
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    CHECK(parsed.tracks.empty());
    cleanup(path);
}

TEST_CASE("one vehicle with contiguous frames yields one full track") {
    std::string body;
    for (int f = 1; f <= 100; ++f)
        body += "7," + std::to_string(f) + ",1.0," + std::to_string(2.0 * f) + ",10.0,1,0,0\n";
    const auto path = write_csv("atd3_single.csv", body);
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    REQUIRE(parsed.tracks.size() == 1);
    CHECK(parsed.tracks.at(7).records.size() == 100);
    cleanup(path);
}

TEST_CASE("missing column is rejected with the column named") {
    const auto path = std::filesystem::temp_directory_path() / "atd3_missing_col.csv";
    std::ofstream os(path);
    os << "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,Lane_ID\n";  // no Preceding
    os.close();
    bool named = false;
    try {
        data::parse_trajectories(path, {});
    } catch (const std::exception& e) {
        named = std::string(e.what()).find("Preceding") != std::string::npos;
    }
    CHECK(named);
    std::filesystem::remove(path);
}

TEST_CASE("non-contiguous frames drop the vehicle and log it") {
    std::string body = "3,1,1.0,2.0,10.0,1,0,0\n3,2,1.0,3.0,10.0,1,0,0\n3,9,1.0,4.0,10.0,1,0,0\n";
    const auto path = write_csv("atd3_gappy.csv", body);
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    CHECK(parsed.tracks.empty());
    REQUIRE(parsed.dropped_noncontiguous.size() == 1);
    CHECK(parsed.dropped_noncontiguous[0] == 3);
    cleanup(path);
}

TEST_CASE("feet convert to meters exactly once") {
    // 32.8084 ft/s is 10.0 m/s to within the printed precision
    std::string body = "5,1,3.28084,328.084,32.8084,1,0,65.6168\n";
    const auto path = write_csv("atd3_feet.csv", body, "feet");
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    const auto& rec = parsed.tracks.at(5).records[0];
    CHECK(rec.speed == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(rec.longitudinal == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(rec.spacing == doctest::Approx(20.0).epsilon(1e-6));
    cleanup(path);

    // metric data is never converted
    const auto path2 = write_csv("atd3_metric.csv", body, "meters");
    const auto parsed2 = data::parse_trajectories(path2, data::UnitSpec::from_sidecar(path2));
    CHECK(parsed2.tracks.at(5).records[0].speed == doctest::Approx(32.8084));
    cleanup(path2);
}

TEST_CASE("a clean 400-step pair extracts as one full episode") {
    const auto path = write_csv("atd3_pair.csv", lockstep_rows(400));
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    const auto extracted = data::extract_follow_pairs(parsed);
    REQUIRE(extracted.episodes.size() == 1);
    const auto& rec = extracted.episodes[0];
    CHECK(rec.follower_id == 2);
    CHECK(rec.leader_id == 1);
    CHECK(rec.episode.length() == 400);
    CHECK(rec.episode.recorded_gap(0) == doctest::Approx(20.0));
    CHECK(data::satisfies_criteria(rec.episode));
    cleanup(path);
}

TEST_CASE("a leader change splits the span and keeps both halves") {
    // 400 frames, leader switches from 1 to 9 at frame 200; vehicle 9 mirrors 1
    std::string body;
    for (int f = 0; f < 400; ++f) {
        const double pos = f * 1.0;
        body += "1," + std::to_string(f) + ",1.0," + std::to_string(pos + 20.0) + ",10.0,2,0,0\n";
        body += "9," + std::to_string(f) + ",1.0," + std::to_string(pos + 22.0) + ",10.0,2,0,0\n";
        body += "2," + std::to_string(f) + ",1.0," + std::to_string(pos) + ",10.0,2," +
                (f < 200 ? "1" : "9") + ",20\n";
    }
    const auto path = write_csv("atd3_leaderchange.csv", body);
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    const auto extracted = data::extract_follow_pairs(parsed);
    REQUIRE(extracted.episodes.size() == 2);
    CHECK(extracted.episodes[0].episode.length() == 200);
    CHECK(extracted.episodes[0].leader_id == 1);
    CHECK(extracted.episodes[1].episode.length() == 200);
    CHECK(extracted.episodes[1].leader_id == 9);
    CHECK(extracted.stats.leader_changed == 1);
    cleanup(path);
}

TEST_CASE("a single step beyond the gap bound splits the span") {
    std::string body;
    for (int f = 0; f < 400; ++f) {
        const double gap = f == 200 ? 130.0 : 20.0;
        const double pos = f * 1.0;
        body += "1," + std::to_string(f) + ",1.0," + std::to_string(pos + gap) + ",10.0,2,0,0\n";
        body += "2," + std::to_string(f) + ",1.0," + std::to_string(pos) + ",10.0,2,1," +
                std::to_string(gap) + "\n";
    }
    const auto path = write_csv("atd3_gapsplit.csv", body);
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    const auto extracted = data::extract_follow_pairs(parsed);
    REQUIRE(extracted.episodes.size() == 2);
    CHECK(extracted.episodes[0].episode.length() == 200);  // frames 0..199
    CHECK(extracted.episodes[1].episode.length() == 199);  // frames 201..399
    CHECK(extracted.stats.gap_exceeded == 1);
    cleanup(path);
}

TEST_CASE("lateral separation beyond 2.5 m breaks the span") {
    const auto path = write_csv("atd3_lateral.csv", lockstep_rows(400, 20.0, 10.0, 4.0));
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    const auto extracted = data::extract_follow_pairs(parsed);
    CHECK(extracted.episodes.empty());
    cleanup(path);
}

TEST_CASE("a 140-step candidate is rejected as too short") {
    const auto path = write_csv("atd3_short.csv", lockstep_rows(140));
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    const auto extracted = data::extract_follow_pairs(parsed);
    CHECK(extracted.episodes.empty());
    CHECK(extracted.stats.too_short == 1);
    cleanup(path);
}

TEST_CASE("long spans cut into 400-step episodes plus a kept remainder") {
    const auto path = write_csv("atd3_long.csv", lockstep_rows(950));
    const auto parsed = data::parse_trajectories(path, data::UnitSpec::from_sidecar(path));
    const auto extracted = data::extract_follow_pairs(parsed);
    REQUIRE(extracted.episodes.size() == 3);
    CHECK(extracted.episodes[0].episode.length() == 400);
    CHECK(extracted.episodes[1].episode.length() == 400);
    CHECK(extracted.episodes[2].episode.length() == 150);  // remainder kept at the floor
    cleanup(path);
}

TEST_CASE("split is seeded, by-vehicle disjoint, and exact in the 1:1 case") {
    std::vector<data::EpisodeRecord> episodes(600);
    for (std::size_t i = 0; i < 600; ++i) episodes[i].follower_id = static_cast<long>(i);
    const auto s1 = data::split(episodes, 450, 7);
    const auto s2 = data::split(episodes, 450, 7);
    const auto s3 = data::split(episodes, 450, 8);
    CHECK(s1.train.size() == 450);
    CHECK(s1.test.size() == 150);
    CHECK(s1.train == s2.train);
    CHECK(s1.test == s2.test);
    CHECK(s1.train != s3.train);
    std::vector<bool> seen(600, false);
    for (const auto i : s1.train) seen[i] = true;
    for (const auto i : s1.test) CHECK_FALSE(seen[i]);
}

TEST_CASE("split keeps multi-episode vehicles on one side") {
    std::vector<data::EpisodeRecord> episodes(20);
    for (std::size_t i = 0; i < 20; ++i) episodes[i].follower_id = static_cast<long>(i / 2);
    const auto s = data::split(episodes, 10, 3);
    for (const auto a : s.train)
        for (const auto b : s.test)
            CHECK(episodes[a].follower_id != episodes[b].follower_id);
}

TEST_CASE("degenerate split: everything on the training side warns") {
    std::vector<data::EpisodeRecord> episodes(5);
    for (std::size_t i = 0; i < 5; ++i) episodes[i].follower_id = static_cast<long>(i);
    const auto s = data::split(episodes, 5, 1);
    CHECK(s.test.empty());
    CHECK(s.test_empty_warning);
    CHECK_THROWS_AS(data::split(episodes, 6, 1), std::invalid_argument);
}

TEST_CASE("largest-remainder apportionment is exact") {
    const auto counts = data::apportion({0.5, 0.3, 0.2}, 20);
    CHECK(counts[0] == 10);
    CHECK(counts[1] == 6);
    CHECK(counts[2] == 4);
    // enumeration: totals always match and never drift by more than one seat
    for (std::size_t n = 1; n <= 97; ++n) {
        const auto c = data::apportion({0.37, 0.41, 0.22}, n);
        CHECK(c[0] + c[1] + c[2] == n);
        CHECK(std::abs(double(c[0]) - 0.37 * double(n)) <= 1.0);
        CHECK(std::abs(double(c[1]) - 0.41 * double(n)) <= 1.0);
        CHECK(std::abs(double(c[2]) - 0.22 * double(n)) <= 1.0);
    }
}

TEST_CASE("synthetic smooth episodes keep follower accelerations gentle") {
    data::SynthConfig cfg;
    cfg.episodes = 6;
    cfg.mix = {1.0, 0.0, 0.0};
    cfg.seed = 31;
    for (const auto& rec : data::synthesize(cfg)) {
        CHECK(rec.episode.length() == 400);
        CHECK(rec.scenario == "smooth");
        for (std::size_t t = 0; t + 1 < rec.episode.length(); ++t)
            CHECK(std::abs(rec.episode.recorded_accel(t)) < 1.5);
    }
}

TEST_CASE("sudden-brake episodes show a sharp relative-speed drop") {
    data::SynthConfig cfg;
    cfg.episodes = 6;
    cfg.mix = {0.0, 0.0, 1.0};
    cfg.seed = 37;
    for (const auto& rec : data::synthesize(cfg)) {
        CHECK(rec.scenario == "brake");
        double min_dv = 1e9;
        for (std::size_t t = 0; t < rec.episode.length(); ++t)
            min_dv = std::min(min_dv, rec.episode.lead_speed[t] - rec.episode.fol_speed[t]);
        CHECK(min_dv < -2.0);
    }
}

TEST_CASE("synthesis is deterministic and criteria-clean") {
    data::SynthConfig cfg;
    cfg.episodes = 8;
    cfg.seed = 41;
    const auto a = data::synthesize(cfg);
    const auto b = data::synthesize(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].scenario == b[i].scenario);
        REQUIRE(a[i].episode.length() == b[i].episode.length());
        for (std::size_t t = 0; t < a[i].episode.length(); ++t) {
            CHECK(a[i].episode.fol_speed[t] == b[i].episode.fol_speed[t]);
            CHECK(a[i].episode.lead_pos[t] == b[i].episode.lead_pos[t]);
        }
        CHECK(data::satisfies_criteria(a[i].episode));  // post-hoc validator
    }
}

TEST_CASE("episode directories round-trip through index.json") {
    data::SynthConfig cfg;
    cfg.episodes = 4;
    cfg.seed = 43;
    const auto episodes = data::synthesize(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "atd3_episode_dir_test";
    data::write_episode_dir(dir, episodes);
    const auto back = data::read_episode_dir(dir);
    REQUIRE(back.size() == episodes.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].scenario == episodes[i].scenario);
        CHECK(back[i].follower_id == episodes[i].follower_id);
        REQUIRE(back[i].episode.length() == episodes[i].episode.length());
        for (std::size_t t = 0; t < back[i].episode.length(); ++t)
            CHECK(back[i].episode.fol_speed[t] == episodes[i].episode.fol_speed[t]);
    }
    std::filesystem::remove_all(dir);
}
