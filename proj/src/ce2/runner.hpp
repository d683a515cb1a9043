#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ce2/goalgen.hpp"

namespace ce2 {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
    std::string env_name;  // required
    std::optional<std::string> map_file;
    std::optional<int> max_episode_len;
    std::optional<double> success_radius;
    std::optional<std::vector<Vec>> env_goals;

    int ensemble_size = 5;
    double bootstrap_fraction = 1.0;

    int latent_dim = 50;
    int latent_hidden = 32;
    double latent_lr = 3e-4;
    double latent_momentum = 0.9;
    double latent_init_scale = 0.1;
    bool latent_linear_dt_norm = false;

    int dt_hidden = 32;
    double dt_lr = 1e-3;
    double dt_momentum = 0.0;

    GmmConfig gmm;
    PolicyConfig policy;
    std::size_t capacity = 10000;

    LoopConfig loop;

    std::vector<std::uint64_t> seeds = {1};
    std::vector<Vec> eval_goals;  // defaults to the env goal distribution
    int eval_episodes = 5;
    std::string out_dir = "out";

    EnvSpec make_env_spec() const;
    void validate() const;
};

// Flat "section.key = value" text; '#' starts a comment. Errors carry the
// offending line number.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

Components build_components(const ExperimentConfig& config, std::uint64_t seed);

// fraction of (goal x episode) greedy rollouts that reach the goal within
// max_episode_len steps
double evaluate(const GoalPolicy& policy, Env& env, const std::vector<Vec>& eval_goals,
                int episodes_per_goal);

// fraction of free cells visited by any state stored in the buffer
double coverage(const ReplayBuffer& buffer, const EnvSpec& spec);

struct SeedResult {
    std::uint64_t seed = 0;
    double final_coverage = 0.0;
    double final_success = 0.0;
    double wall_time_sec = 0.0;
    std::string error;  // empty on success
};

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 run failure, 2 config error
    std::string out_dir;
    std::string error;  // set when exit_code != 0
    std::vector<SeedResult> per_seed;
    double median_coverage = 0.0;
    double median_success = 0.0;
};

// Full experiment: every seed runs the configured training loop as an
// independent job (in parallel when hardware allows) and writes
// seed_<s>/metrics.csv, seed_<s>/snapshots.json and seed_<s>/policy.json;
// a summary.json with per-seed finals and medians lands in out_dir.
// The CE2_OUT_DIR environment variable overrides the configured out_dir.
RunResult run(const ExperimentConfig& config);

// Re-evaluate a saved policy against the config's eval goals.
double eval_saved_policy(const ExperimentConfig& config, const std::string& policy_path);

// Plain-text comparison table assembled from summary.json files.
std::string compare_summaries(const std::vector<std::string>& summary_paths);

// Flatten a snapshots.json array into a plot-ready CSV.
void export_snapshots_csv(const std::string& snapshots_path, const std::string& csv_path);

double median(std::vector<double> values);

}  // namespace ce2
