#include "atd3/agent.hpp"
#include "atd3/csvio.hpp"
#include "atd3/data.hpp"
#include "atd3/eval.hpp"
#include "atd3/idm.hpp"
#include "atd3/sha256.hpp"
#include "atd3/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;
namespace data = atd3::data;
namespace agent = atd3::agent;
namespace idm = atd3::idm;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    if (!j.is_object()) throw config_error("config: '" + context + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw config_error("config: unknown key '" + context + "." + key + "'");
    }
}

std::string git_describe() {
    FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
    if (!pipe) return "unknown";
    char buf[128] = {0};
    std::string out;
    while (fgets(buf, sizeof(buf), pipe)) out += buf;
    pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

// Everything a run needs, resolved from config file + flags. The manifest
// stores this object verbatim, so a run can be reproduced from it.
struct RunConfig {
    std::string subcommand;
    std::uint64_t seed = 0;
    std::string out;
    std::string data;
    std::string mode = "atd3";
    std::vector<std::string> checkpoints;
    std::string idm_params;
    std::string split_file;
    bool svg = false;
    std::size_t episodes = 50;
    data::ScenarioMix mix;
    std::size_t synth_steps = 400;
    std::size_t train_count = 0;  // 0 = use every episode for training/calibration
    agent::TrainConfig train;
    idm::GaConfig ga;
    data::FilterCriteria filter;
    double brake_threshold = 1.5;

    json to_json() const;
    static RunConfig from_json(const json& j);
};

namespace keys {
constexpr std::initializer_list<const char*> top = {
    "seed", "out", "data", "mode", "checkpoints", "idm_params", "split",
    "svg",  "synth", "train", "ga", "filter", "brake_threshold", "train_count"};
constexpr std::initializer_list<const char*> synth = {"episodes", "mix", "steps"};
constexpr std::initializer_list<const char*> mix = {"smooth", "stopgo", "brake"};
constexpr std::initializer_list<const char*> train = {
    "actor_lr", "critic_lr", "gamma", "tau", "explore_sigma", "smooth_sigma", "smooth_clip",
    "batch_size", "epochs", "cycles_per_epoch", "samples_per_cycle", "updates_per_cycle",
    "policy_delay", "buffer_capacity", "hidden", "a_max", "eval_max_episodes", "checkpoint_every"};
constexpr std::initializer_list<const char*> ga = {
    "population", "generations", "crossover_rate", "mutation_rate", "mutation_scale", "elitism"};
constexpr std::initializer_list<const char*> filter = {"max_gap", "max_lateral", "min_steps",
                                                       "episode_steps"};
}  // namespace keys

json RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["data"] = data;
    j["mode"] = mode;
    j["checkpoints"] = checkpoints;
    j["idm_params"] = idm_params;
    j["split"] = split_file;
    j["svg"] = svg;
    j["train_count"] = train_count;
    j["brake_threshold"] = brake_threshold;
    j["synth"] = {{"episodes", episodes},
                  {"steps", synth_steps},
                  {"mix", {{"smooth", mix.smooth}, {"stopgo", mix.stopgo}, {"brake", mix.brake}}}};
    j["train"] = {{"actor_lr", train.actor_lr},
                  {"critic_lr", train.critic_lr},
                  {"gamma", train.gamma},
                  {"tau", train.tau},
                  {"explore_sigma", train.explore_sigma},
                  {"smooth_sigma", train.smooth_sigma},
                  {"smooth_clip", train.smooth_clip},
                  {"batch_size", train.batch_size},
                  {"epochs", train.epochs},
                  {"cycles_per_epoch", train.cycles_per_epoch},
                  {"samples_per_cycle", train.samples_per_cycle},
                  {"updates_per_cycle", train.updates_per_cycle},
                  {"policy_delay", train.policy_delay},
                  {"buffer_capacity", train.buffer_capacity},
                  {"hidden", train.hidden},
                  {"a_max", train.a_max},
                  {"eval_max_episodes", train.eval_max_episodes},
                  {"checkpoint_every", train.checkpoint_every}};
    j["ga"] = {{"population", ga.population},       {"generations", ga.generations},
               {"crossover_rate", ga.crossover_rate}, {"mutation_rate", ga.mutation_rate},
               {"mutation_scale", ga.mutation_scale}, {"elitism", ga.elitism}};
    j["filter"] = {{"max_gap", filter.max_gap},
                   {"max_lateral", filter.max_lateral},
                   {"min_steps", filter.min_steps},
                   {"episode_steps", filter.episode_steps}};
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    check_keys(j, keys::top, "");
    c.seed = j.value("seed", std::uint64_t{0});
    c.out = j.value("out", std::string{});
    c.data = j.value("data", std::string{});
    c.mode = j.value("mode", std::string{"atd3"});
    c.checkpoints = j.value("checkpoints", std::vector<std::string>{});
    c.idm_params = j.value("idm_params", std::string{});
    c.split_file = j.value("split", std::string{});
    c.svg = j.value("svg", false);
    c.train_count = j.value("train_count", std::size_t{0});
    c.brake_threshold = j.value("brake_threshold", 1.5);
    if (j.contains("synth")) {
        const json& s = j["synth"];
        check_keys(s, keys::synth, "synth");
        c.episodes = s.value("episodes", c.episodes);
        c.synth_steps = s.value("steps", c.synth_steps);
        if (s.contains("mix")) {
            check_keys(s["mix"], keys::mix, "synth.mix");
            c.mix.smooth = s["mix"].value("smooth", 0.0);
            c.mix.stopgo = s["mix"].value("stopgo", 0.0);
            c.mix.brake = s["mix"].value("brake", 0.0);
        }
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        check_keys(t, keys::train, "train");
        agent::TrainConfig& tc = c.train;
        tc.actor_lr = t.value("actor_lr", tc.actor_lr);
        tc.critic_lr = t.value("critic_lr", tc.critic_lr);
        tc.gamma = t.value("gamma", tc.gamma);
        tc.tau = t.value("tau", tc.tau);
        tc.explore_sigma = t.value("explore_sigma", tc.explore_sigma);
        tc.smooth_sigma = t.value("smooth_sigma", tc.smooth_sigma);
        tc.smooth_clip = t.value("smooth_clip", tc.smooth_clip);
        tc.batch_size = t.value("batch_size", tc.batch_size);
        tc.epochs = t.value("epochs", tc.epochs);
        tc.cycles_per_epoch = t.value("cycles_per_epoch", tc.cycles_per_epoch);
        tc.samples_per_cycle = t.value("samples_per_cycle", tc.samples_per_cycle);
        tc.updates_per_cycle = t.value("updates_per_cycle", tc.updates_per_cycle);
        tc.policy_delay = t.value("policy_delay", tc.policy_delay);
        tc.buffer_capacity = t.value("buffer_capacity", tc.buffer_capacity);
        tc.hidden = t.value("hidden", tc.hidden);
        tc.a_max = t.value("a_max", tc.a_max);
        tc.eval_max_episodes = t.value("eval_max_episodes", tc.eval_max_episodes);
        tc.checkpoint_every = t.value("checkpoint_every", tc.checkpoint_every);
    }
    if (j.contains("ga")) {
        const json& g = j["ga"];
        check_keys(g, keys::ga, "ga");
        c.ga.population = g.value("population", c.ga.population);
        c.ga.generations = g.value("generations", c.ga.generations);
        c.ga.crossover_rate = g.value("crossover_rate", c.ga.crossover_rate);
        c.ga.mutation_rate = g.value("mutation_rate", c.ga.mutation_rate);
        c.ga.mutation_scale = g.value("mutation_scale", c.ga.mutation_scale);
        c.ga.elitism = g.value("elitism", c.ga.elitism);
    }
    if (j.contains("filter")) {
        const json& f = j["filter"];
        check_keys(f, keys::filter, "filter");
        c.filter.max_gap = f.value("max_gap", c.filter.max_gap);
        c.filter.max_lateral = f.value("max_lateral", c.filter.max_lateral);
        c.filter.min_steps = f.value("min_steps", c.filter.min_steps);
        c.filter.episode_steps = f.value("episode_steps", c.filter.episode_steps);
    }
    return c;
}

data::ScenarioMix parse_mix(const std::string& s) {
    data::ScenarioMix mix{0.0, 0.0, 0.0};
    for (const std::string& part : atd3::csv::split_line(s, ',')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw config_error("bad --mix entry '" + part + "'");
        const std::string name = part.substr(0, eq);
        const double value = atd3::csv::parse_double(part.substr(eq + 1));
        if (name == "smooth") mix.smooth = value;
        else if (name == "stopgo") mix.stopgo = value;
        else if (name == "brake") mix.brake = value;
        else throw config_error("bad --mix scenario '" + name + "'");
    }
    return mix;
}

std::vector<data::EpisodeRecord> load_episodes(const RunConfig& cfg) {
    if (cfg.data.empty()) throw data_error("no --data episode directory given");
    if (!std::filesystem::exists(std::filesystem::path(cfg.data) / "index.json"))
        throw data_error("missing episode index: " + cfg.data + "/index.json");
    return data::read_episode_dir(cfg.data);
}

void add_input_digest(json& manifest, const std::filesystem::path& p) {
    if (std::filesystem::exists(p) && std::filesystem::is_regular_file(p))
        manifest["inputs"][p.string()] = atd3::Sha256::of_file(p);
}

void digest_episode_dir(json& manifest, const RunConfig& cfg) {
    if (cfg.data.empty()) return;
    add_input_digest(manifest, std::filesystem::path(cfg.data) / "index.json");
}

std::filesystem::path resolve_out_dir(RunConfig& cfg) {
    if (cfg.out.empty()) {
        const std::string hash = atd3::Sha256::of_string(cfg.to_json().dump()).substr(0, 8);
        cfg.out = "runs/" + cfg.subcommand + "_" + hash + "_s" + std::to_string(cfg.seed);
    }
    std::filesystem::create_directories(cfg.out);
    return cfg.out;
}

void write_manifest(const RunConfig& cfg, json manifest) {
    manifest["subcommand"] = cfg.subcommand;
    manifest["seed"] = cfg.seed;
    manifest["config"] = cfg.to_json();
    manifest["git"] = git_describe();
    if (!manifest.contains("inputs")) manifest["inputs"] = json::object();
    std::ofstream os(std::filesystem::path(cfg.out) / "manifest.json");
    os << manifest.dump(2) << "\n";
}

data::DatasetSplit resolve_split(const RunConfig& cfg,
                                 const std::vector<data::EpisodeRecord>& episodes) {
    if (!cfg.split_file.empty()) {
        std::ifstream is(cfg.split_file);
        if (!is) throw data_error("cannot open split file " + cfg.split_file);
        json j;
        is >> j;
        data::DatasetSplit s;
        s.train = j.at("train").get<std::vector<std::size_t>>();
        s.test = j.at("test").get<std::vector<std::size_t>>();
        return s;
    }
    if (cfg.train_count > 0) return data::split(episodes, cfg.train_count, cfg.seed);
    data::DatasetSplit s;  // everything on the training side
    for (std::size_t i = 0; i < episodes.size(); ++i) s.train.push_back(i);
    s.test_empty_warning = true;
    return s;
}

void write_split(const std::filesystem::path& out, const data::DatasetSplit& s) {
    json j;
    j["train"] = s.train;
    j["test"] = s.test;
    std::ofstream os(out / "split.json");
    os << j.dump(2) << "\n";
}

// --- subcommands ------------------------------------------------------------

int cmd_ingest(RunConfig cfg) {
    if (cfg.data.empty()) throw data_error("ingest: --data raw trajectory CSV required");
    if (!std::filesystem::exists(cfg.data)) throw data_error("ingest: no such file " + cfg.data);
    const auto out = resolve_out_dir(cfg);
    const data::UnitSpec units = data::UnitSpec::from_sidecar(cfg.data);
    const data::ParseResult parsed = data::parse_trajectories(cfg.data, units);
    const data::ExtractResult extracted = data::extract_follow_pairs(parsed, cfg.filter);
    data::write_episode_dir(out, extracted.episodes, &extracted.stats);

    json manifest;
    add_input_digest(manifest, cfg.data);
    add_input_digest(manifest, cfg.data + ".units.json");
    manifest["episodes"] = extracted.episodes.size();
    manifest["dropped_noncontiguous"] = parsed.dropped_noncontiguous.size();
    write_manifest(cfg, manifest);
    std::cout << "ingest: " << extracted.episodes.size() << " episodes from "
              << parsed.tracks.size() << " vehicles -> " << out.string() << "\n";
    return kExitOk;
}

int cmd_synth(RunConfig cfg) {
    const auto out = resolve_out_dir(cfg);
    data::SynthConfig sc;
    sc.episodes = cfg.episodes;
    sc.mix = cfg.mix;
    sc.steps = cfg.synth_steps;
    sc.seed = cfg.seed;
    const auto episodes = data::synthesize(sc);
    data::write_episode_dir(out, episodes);
    write_manifest(cfg, {});
    std::cout << "synth: " << episodes.size() << " episodes -> " << out.string() << "\n";
    return kExitOk;
}

int cmd_calibrate_idm(RunConfig cfg) {
    const auto episodes = load_episodes(cfg);
    const auto out = resolve_out_dir(cfg);
    const data::DatasetSplit split = resolve_split(cfg, episodes);
    std::vector<const atd3::env::FollowEpisode*> pool;
    for (const std::size_t i : split.train) pool.push_back(&episodes[i].episode);

    idm::GaConfig ga = cfg.ga;
    ga.seed = cfg.seed;
    const idm::GaResult result = idm::calibrate_ga(ga, pool);

    json params;
    params["v0"] = result.best.v0;
    params["t_h"] = result.best.t_h;
    params["a_m"] = result.best.a_m;
    params["b"] = result.best.b;
    params["s0"] = result.best.s0;
    params["delta"] = idm::IdmParams::kDelta;
    params["rmspe_pct"] = result.best_fitness;
    std::ofstream os(out / "idm_params.json");
    os << params.dump(2) << "\n";

    std::ofstream hist(out / "fitness_history.csv");
    hist << "generation,best,mean\n";
    for (std::size_t g = 0; g < result.best_history.size(); ++g)
        hist << g << ',' << atd3::csv::fmt(result.best_history[g]) << ','
             << atd3::csv::fmt(result.mean_history[g]) << '\n';

    write_split(out, split);
    json manifest;
    digest_episode_dir(manifest, cfg);
    manifest["best_rmspe_pct"] = result.best_fitness;
    write_manifest(cfg, manifest);
    std::cout << "calibrate-idm: best rmspe " << result.best_fitness << "% -> " << out.string()
              << "\n";
    return kExitOk;
}

int cmd_train(RunConfig cfg) {
    const auto episodes = load_episodes(cfg);
    const auto out = resolve_out_dir(cfg);
    const data::DatasetSplit split = resolve_split(cfg, episodes);
    std::vector<const atd3::env::FollowEpisode*> train_pool, eval_pool;
    for (const std::size_t i : split.train) train_pool.push_back(&episodes[i].episode);
    for (const std::size_t i : split.test) eval_pool.push_back(&episodes[i].episode);

    agent::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    agent::Agent learner(agent::mode_from_name(cfg.mode), tc);
    const agent::TrainResult result = learner.train(train_pool, eval_pool, out);

    write_split(out, split);
    json manifest;
    digest_episode_dir(manifest, cfg);
    manifest["final_eval_rmspe"] = result.final_eval_rmspe;
    manifest["env_steps"] = result.env_steps;
    manifest["critic_updates"] = result.critic_update_count;
    manifest["actor_updates"] = result.actor_update_count;
    manifest["max_attention_norm_err"] = result.max_attention_norm_err;
    write_manifest(cfg, manifest);
    std::cout << "train[" << cfg.mode << "]: final eval rmspe " << result.final_eval_rmspe
              << "% -> " << out.string() << "\n";
    return kExitOk;
}

std::vector<atd3::eval::NamedPolicy> load_policies(const RunConfig& cfg,
                                                   std::vector<agent::PolicySnapshot>& keep_alive) {
    std::vector<atd3::eval::NamedPolicy> policies;
    keep_alive.reserve(cfg.checkpoints.size());  // lambdas capture stable refs
    for (const std::string& path : cfg.checkpoints) {
        if (!std::filesystem::exists(path)) throw data_error("no such checkpoint: " + path);
        keep_alive.push_back(agent::PolicySnapshot::load(path));
        agent::PolicySnapshot& snap = keep_alive.back();
        std::string name = agent::mode_name(snap.mode());
        for (const auto& p : policies)
            if (p.name == name) name += "_" + std::to_string(policies.size());
        policies.push_back({name,
                            [&snap](const atd3::env::StateWindow& w, atd3::nets::AttentionTrace* t) {
                                return snap.act(w, t);
                            },
                            snap.has_attention()});
    }
    if (!cfg.idm_params.empty()) {
        if (!std::filesystem::exists(cfg.idm_params))
            throw data_error("no such idm params file: " + cfg.idm_params);
        std::ifstream is(cfg.idm_params);
        json j;
        is >> j;
        idm::IdmParams p{j.at("v0"), j.at("t_h"), j.at("a_m"), j.at("b"), j.at("s0")};
        p.validate();
        policies.push_back({"idm",
                            [p](const atd3::env::StateWindow& w, atd3::nets::AttentionTrace*) {
                                return idm::idm_accel(p, w.newest());
                            },
                            false});
    }
    if (policies.empty()) throw config_error("no policy given (--checkpoint / --idm)");
    return policies;
}

std::vector<std::size_t> eval_side(const RunConfig& cfg,
                                   const std::vector<data::EpisodeRecord>& episodes) {
    const data::DatasetSplit split = resolve_split(cfg, episodes);
    return split.test.empty() ? split.train : split.test;
}

int cmd_eval(RunConfig cfg) {
    const auto episodes = load_episodes(cfg);
    const auto out = resolve_out_dir(cfg);
    std::vector<agent::PolicySnapshot> keep_alive;
    const auto policies = load_policies(cfg, keep_alive);
    const auto side = eval_side(cfg, episodes);

    json summary;
    std::vector<double> pooled_sim, pooled_obs;
    for (const std::size_t i : side) {
        const auto trace = atd3::eval::rollout(policies[0].fn, episodes[i].episode,
                                               policies[0].has_attention);
        char name[32];
        std::snprintf(name, sizeof(name), "rollout_%04zu.csv", i);
        atd3::eval::write_rollout_csv(trace, out / name);
        pooled_sim.insert(pooled_sim.end(), trace.sim_speed.begin(), trace.sim_speed.end());
        pooled_obs.insert(pooled_obs.end(), trace.obs_speed.begin(), trace.obs_speed.end());
        if (cfg.svg) {
            char svg_name[32];
            std::snprintf(svg_name, sizeof(svg_name), "rollout_%04zu.svg", i);
            atd3::svg::write_line_chart(out / svg_name, "speed, episode " + std::to_string(i),
                                        {{"simulated", "#d62728", trace.sim_speed},
                                         {"observed", "#1f77b4", trace.obs_speed}},
                                        "step", "m/s");
        }
    }
    summary["policy"] = policies[0].name;
    summary["episodes"] = side.size();
    summary["rmspe_pct"] = atd3::eval::rmspe(pooled_sim, pooled_obs);
    std::ofstream os(out / "summary.json");
    os << summary.dump(2) << "\n";

    json manifest;
    digest_episode_dir(manifest, cfg);
    for (const std::string& c : cfg.checkpoints) add_input_digest(manifest, c);
    manifest["rmspe_pct"] = summary["rmspe_pct"];
    write_manifest(cfg, manifest);
    std::cout << "eval[" << policies[0].name << "]: pooled rmspe "
              << summary["rmspe_pct"].get<double>() << "% over " << side.size() << " episodes -> "
              << out.string() << "\n";
    return kExitOk;
}

int cmd_attention(RunConfig cfg) {
    const auto episodes = load_episodes(cfg);
    const auto out = resolve_out_dir(cfg);
    std::vector<agent::PolicySnapshot> keep_alive;
    const auto policies = load_policies(cfg, keep_alive);
    if (!policies[0].has_attention)
        throw config_error("attention: checkpoint policy exposes no attention weights");
    const auto side = eval_side(cfg, episodes);

    json events = json::array();
    for (const std::size_t i : side) {
        const auto trace = atd3::eval::rollout(policies[0].fn, episodes[i].episode, true);
        const auto summary =
            atd3::eval::attention_summary(trace, episodes[i].episode, cfg.brake_threshold);
        char name[40];
        std::snprintf(name, sizeof(name), "attention_%04zu.csv", i);
        atd3::eval::write_attention_csv(trace, summary, out / name);
        json ev;
        ev["episode"] = i;
        ev["mean_r3_inside"] = summary.mean_r3_inside;
        ev["mean_r3_outside"] = summary.mean_r3_outside;
        ev["mean_r8"] = summary.mean_r8;
        ev["events"] = json::array();
        for (const auto& e : summary.events) ev["events"].push_back({{"begin", e.begin}, {"end", e.end}});
        events.push_back(ev);
        if (cfg.svg) {
            std::vector<std::vector<double>> grid(atd3::env::kWindow);
            for (std::size_t slot = 0; slot < atd3::env::kWindow; ++slot)
                for (const auto& row : trace.attention)
                    grid[atd3::env::kWindow - 1 - slot].push_back(row.beta[slot]);
            char svg_name[40];
            std::snprintf(svg_name, sizeof(svg_name), "attention_%04zu.svg", i);
            atd3::svg::write_heatmap(out / svg_name, "attention, episode " + std::to_string(i),
                                     grid, "step", "newest..oldest");
        }
    }
    std::ofstream os(out / "events.json");
    os << events.dump(2) << "\n";

    json manifest;
    digest_episode_dir(manifest, cfg);
    for (const std::string& c : cfg.checkpoints) add_input_digest(manifest, c);
    write_manifest(cfg, manifest);
    std::cout << "attention: " << side.size() << " episodes -> " << out.string() << "\n";
    return kExitOk;
}

int cmd_compare(RunConfig cfg) {
    const auto episodes = load_episodes(cfg);
    const auto out = resolve_out_dir(cfg);
    std::vector<agent::PolicySnapshot> keep_alive;
    const auto policies = load_policies(cfg, keep_alive);
    const auto side = eval_side(cfg, episodes);
    std::vector<const atd3::env::FollowEpisode*> pool;
    for (const std::size_t i : side) pool.push_back(&episodes[i].episode);

    const atd3::eval::Comparison comparison = atd3::eval::compare(policies, pool);
    atd3::eval::write_table(comparison, out / "table1.csv");

    std::ofstream breakdown(out / "per_episode.csv");
    breakdown << "policy";
    for (const std::size_t i : side) breakdown << ",episode_" << i;
    breakdown << "\n";
    for (const auto& row : comparison.rows) {
        breakdown << row.policy;
        for (const double v : row.per_episode)
            breakdown << ',' << (std::isnan(v) ? std::string("failed") : atd3::csv::fmt(v));
        breakdown << "\n";
    }

    json manifest;
    digest_episode_dir(manifest, cfg);
    for (const std::string& c : cfg.checkpoints) add_input_digest(manifest, c);
    if (!cfg.idm_params.empty()) add_input_digest(manifest, cfg.idm_params);
    write_manifest(cfg, manifest);
    for (const auto& row : comparison.rows)
        std::cout << "compare: " << row.policy << " rmspe " << row.rmspe_pct << "%"
                  << (row.failures ? " (" + std::to_string(row.failures) + " failures)" : "")
                  << "\n";
    std::cout << "compare: table -> " << (out / "table1.csv").string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"car-following learner: data prep, training, and evaluation"};
    app.require_subcommand(1);

    std::string config_path, out, data_path, mode, mix_str, idm_path, split_path;
    std::vector<std::string> checkpoints;
    std::uint64_t seed = 0;
    bool seed_set = false, svg = false;
    std::size_t episodes = 0;
    std::size_t train_count = 0;
    bool train_count_set = false;

    app.add_option("--config", config_path, "JSON run configuration")->expected(1);
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out, "output directory");
    app.add_option("--data", data_path, "input data (episode dir or raw CSV)");
    app.add_option("--mode", mode, "agent variant: atd3 | ddpg | ddpg-rt");
    app.add_option("--episodes", episodes, "episode count for synth");
    app.add_option("--mix", mix_str, "scenario mix, e.g. smooth=0.5,stopgo=0.3,brake=0.2");
    app.add_option("--checkpoint", checkpoints, "policy checkpoint (repeatable)");
    app.add_option("--idm", idm_path, "calibrated IDM parameter JSON");
    app.add_option("--split", split_path, "split.json from a training run");
    auto* train_count_opt =
        app.add_option("--train-count", train_count, "episodes on the training side of the split");
    app.add_flag("--svg", svg, "emit SVG charts");

    for (const char* name : {"ingest", "synth", "calibrate-idm", "train", "eval", "attention",
                             "compare"})
        app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;
    train_count_set = train_count_opt->count() > 0;

    try {
        json config_json = json::object();
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw data_error("cannot open config " + config_path);
            try {
                is >> config_json;
            } catch (const std::exception& e) {
                throw config_error(std::string("config parse: ") + e.what());
            }
        }
        RunConfig cfg = RunConfig::from_json(config_json);
        cfg.subcommand = app.get_subcommands().front()->get_name();
        if (seed_set) cfg.seed = seed;
        if (!out.empty()) cfg.out = out;
        if (!data_path.empty()) cfg.data = data_path;
        if (!mode.empty()) cfg.mode = mode;
        if (episodes > 0) cfg.episodes = episodes;
        if (!mix_str.empty()) cfg.mix = parse_mix(mix_str);
        if (!checkpoints.empty()) cfg.checkpoints = checkpoints;
        if (!idm_path.empty()) cfg.idm_params = idm_path;
        if (!split_path.empty()) cfg.split_file = split_path;
        if (train_count_set) cfg.train_count = train_count;
        if (svg) cfg.svg = true;
        agent::mode_from_name(cfg.mode);  // validate early
        cfg.train.validate();
        cfg.ga.validate();

        const std::string& sub = cfg.subcommand;
        if (sub == "ingest") return cmd_ingest(std::move(cfg));
        if (sub == "synth") return cmd_synth(std::move(cfg));
        if (sub == "calibrate-idm") return cmd_calibrate_idm(std::move(cfg));
        if (sub == "train") return cmd_train(std::move(cfg));
        if (sub == "eval") return cmd_eval(std::move(cfg));
        if (sub == "attention") return cmd_attention(std::move(cfg));
        if (sub == "compare") return cmd_compare(std::move(cfg));
        throw config_error("unknown subcommand " + sub);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const atd3::num::numeric_error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
