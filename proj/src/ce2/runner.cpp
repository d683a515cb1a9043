#include "ce2/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace ce2 {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail_line(int line, const std::string& message) {
    throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) fail_line(line, "trailing characters in number '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail_line(line, "expected a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) fail_line(line, "trailing characters in integer '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail_line(line, "expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail_line(line, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

// "x,y | x,y | ..." -> list of vectors
std::vector<Vec> parse_vec_list(const std::string& v, int line) {
    std::vector<Vec> out;
    for (const auto& item : split(v, '|')) {
        if (item.empty()) continue;
        Vec vec;
        for (const auto& comp : split(item, ',')) vec.push_back(parse_double(comp, line));
        if (vec.empty()) fail_line(line, "empty vector in list");
        out.push_back(std::move(vec));
    }
    if (out.empty()) fail_line(line, "empty vector list");
    return out;
}

}  // namespace

EnvSpec ExperimentConfig::make_env_spec() const {
    EnvSpec spec;
    if (map_file) {
        std::ifstream in(*map_file);
        if (!in) throw ConfigError("cannot open map file: " + *map_file);
        std::stringstream ss;
        ss << in.rdbuf();
        if (env_name == "point10" || env_name.rfind("point", 0) == 0) {
            spec = make_point_maze(env_name, GridLayout::from_text(ss.str()));
        } else {
            spec = make_grid_maze(env_name, GridLayout::from_text(ss.str()),
                                  max_episode_len.value_or(50));
        }
    } else {
        spec = builtin_spec(env_name);
    }
    if (max_episode_len) spec.max_episode_len = *max_episode_len;
    if (success_radius) spec.success_radius = *success_radius;
    if (env_goals) spec.goal_distribution = *env_goals;
    spec.validate();
    return spec;
}

void ExperimentConfig::validate() const {
    if (env_name.empty()) throw ConfigError("missing required key env.name");
    if (seeds.empty()) throw ConfigError("run.seeds must be non-empty");
    if (eval_episodes < 1) throw ConfigError("eval.episodes_per_goal must be >= 1");
    if (loop.n_train < 1) throw ConfigError("run.rounds must be >= 1");
    if (loop.n_tau < 1) throw ConfigError("run.episodes_per_round must be >= 1");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto comment = raw.find('#');
        if (comment != std::string::npos) raw = raw.substr(0, comment);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_line(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail_line(line_no, "empty key");
        if (value.empty()) fail_line(line_no, "empty value for key '" + key + "'");

        if (key == "env.name") cfg.env_name = value;
        else if (key == "env.map_file") cfg.map_file = value;
        else if (key == "env.max_episode_len") cfg.max_episode_len = static_cast<int>(parse_int(value, line_no));
        else if (key == "env.success_radius") cfg.success_radius = parse_double(value, line_no);
        else if (key == "env.goals") cfg.env_goals = parse_vec_list(value, line_no);
        else if (key == "strategy.name") {
            try {
                cfg.loop.strategy.strategy = strategy_from_string(value);
            } catch (const std::exception& e) {
                fail_line(line_no, e.what());
            }
        }
        else if (key == "strategy.n_candidate") cfg.loop.strategy.n_candidate = static_cast<int>(parse_int(value, line_no));
        else if (key == "strategy.n_edge") cfg.loop.strategy.n_edge = static_cast<int>(parse_int(value, line_no));
        else if (key == "strategy.k_rollouts") cfg.loop.strategy.potential_rollouts = static_cast<int>(parse_int(value, line_no));
        else if (key == "strategy.t_go") cfg.loop.strategy.t_go = static_cast<int>(parse_int(value, line_no));
        else if (key == "strategy.t_explore") cfg.loop.strategy.t_explore = static_cast<int>(parse_int(value, line_no));
        else if (key == "strategy.kde_support") cfg.loop.strategy.kde_support = static_cast<int>(parse_int(value, line_no));
        else if (key == "strategy.mega_top") cfg.loop.strategy.mega_top = static_cast<int>(parse_int(value, line_no));
        else if (key == "run.seeds") {
            cfg.seeds.clear();
            for (const auto& s : split(value, ',')) {
                cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(s, line_no)));
            }
        }
        else if (key == "run.rounds") cfg.loop.n_train = static_cast<int>(parse_int(value, line_no));
        else if (key == "run.episodes_per_round") cfg.loop.n_tau = static_cast<int>(parse_int(value, line_no));
        else if (key == "run.reassign_period") cfg.loop.reassign_period = static_cast<int>(parse_int(value, line_no));
        else if (key == "run.assign_batch") cfg.loop.assign_batch = static_cast<int>(parse_int(value, line_no));
        else if (key == "run.imagination_horizon") cfg.loop.imagination_horizon = static_cast<int>(parse_int(value, line_no));
        else if (key == "run.capacity") cfg.capacity = static_cast<std::size_t>(parse_int(value, line_no));
        else if (key == "run.out_dir") cfg.out_dir = value;
        else if (key == "model.ensemble") cfg.ensemble_size = static_cast<int>(parse_int(value, line_no));
        else if (key == "model.bootstrap_fraction") cfg.bootstrap_fraction = parse_double(value, line_no);
        else if (key == "latent.dim") cfg.latent_dim = static_cast<int>(parse_int(value, line_no));
        else if (key == "latent.hidden") cfg.latent_hidden = static_cast<int>(parse_int(value, line_no));
        else if (key == "latent.lr") cfg.latent_lr = parse_double(value, line_no);
        else if (key == "latent.momentum") cfg.latent_momentum = parse_double(value, line_no);
        else if (key == "latent.init_scale") cfg.latent_init_scale = parse_double(value, line_no);
        else if (key == "latent.linear_dt_norm") cfg.latent_linear_dt_norm = parse_bool(value, line_no);
        else if (key == "latent.steps_per_round") cfg.loop.latent_steps = static_cast<int>(parse_int(value, line_no));
        else if (key == "latent.batch") cfg.loop.latent_batch = static_cast<int>(parse_int(value, line_no));
        else if (key == "dt.hidden") cfg.dt_hidden = static_cast<int>(parse_int(value, line_no));
        else if (key == "dt.lr") cfg.dt_lr = parse_double(value, line_no);
        else if (key == "dt.momentum") cfg.dt_momentum = parse_double(value, line_no);
        else if (key == "dt.steps_per_round") cfg.loop.dt_steps = static_cast<int>(parse_int(value, line_no));
        else if (key == "dt.batch") cfg.loop.dt_batch = static_cast<int>(parse_int(value, line_no));
        else if (key == "dt.rollouts_per_round") cfg.loop.dt_rollouts = static_cast<int>(parse_int(value, line_no));
        else if (key == "dt.real_pairs") cfg.loop.dt_real_pairs = parse_bool(value, line_no);
        else if (key == "gmm.clusters") cfg.gmm.n_components = static_cast<int>(parse_int(value, line_no));
        else if (key == "gmm.step_size") cfg.gmm.step_size = parse_double(value, line_no);
        else if (key == "gmm.uniform_prior_weight") cfg.gmm.uniform_prior_weight = parse_double(value, line_no);
        else if (key == "gmm.init_sigma2") cfg.gmm.init_sigma2 = parse_double(value, line_no);
        else if (key == "gmm.sigma2_floor") cfg.gmm.sigma2_floor = parse_double(value, line_no);
        else if (key == "gmm.steps_per_round") cfg.loop.gmm_steps = static_cast<int>(parse_int(value, line_no));
        else if (key == "gmm.batch") cfg.loop.gmm_batch = static_cast<int>(parse_int(value, line_no));
        else if (key == "policy.gamma") cfg.policy.gamma = parse_double(value, line_no);
        else if (key == "policy.epsilon") cfg.policy.epsilon = parse_double(value, line_no);
        else if (key == "policy.alpha") cfg.policy.alpha = parse_double(value, line_no);
        else if (key == "policy.goal_rollouts_per_round") cfg.loop.goal_policy_rollouts = static_cast<int>(parse_int(value, line_no));
        else if (key == "policy.explore_rollouts_per_round") cfg.loop.explore_policy_rollouts = static_cast<int>(parse_int(value, line_no));
        else if (key == "eval.goals") cfg.eval_goals = parse_vec_list(value, line_no);
        else if (key == "eval.episodes_per_goal") cfg.eval_episodes = static_cast<int>(parse_int(value, line_no));
        else fail_line(line_no, "unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

Components build_components(const ExperimentConfig& config, std::uint64_t seed) {
    Components c;
    c.spec = config.make_env_spec();
    c.seed = seed;
    c.env = std::make_unique<Env>(c.spec);
    c.buffer = std::make_unique<ReplayBuffer>(config.capacity);
    c.model = std::make_unique<EnsembleTabularModel>(c.spec, config.ensemble_size,
                                                     config.bootstrap_fraction,
                                                     derive_seed(seed, 10));
    c.latent = std::make_unique<LatentSpace>(c.spec.state_dim, config.latent_hidden,
                                             config.latent_dim, config.latent_init_scale,
                                             config.latent_lr, config.latent_momentum,
                                             derive_seed(seed, 11));
    c.latent->use_linear_dt_norm = config.latent_linear_dt_norm;
    c.dist = std::make_unique<TemporalDistanceEstimator>(config.latent_dim, config.dt_hidden,
                                                         config.dt_lr, derive_seed(seed, 12),
                                                         config.dt_momentum);
    c.gmm = std::make_unique<GmmModel>(config.latent_dim, config.gmm);
    c.goal_policy = std::make_unique<GoalPolicy>(c.spec, config.policy);
    c.explore_policy = std::make_unique<ExplorePolicy>(c.spec, config.policy);
    return c;
}

double evaluate(const GoalPolicy& policy, Env& env, const std::vector<Vec>& eval_goals,
                int episodes_per_goal) {
    if (eval_goals.empty()) throw std::invalid_argument("evaluate: empty eval goal set");
    Rng rng = make_rng(0);  // greedy rollouts; rng only feeds reset
    int hits = 0;
    int total = 0;
    for (std::size_t g = 0; g < eval_goals.size(); ++g) {
        for (int e = 0; e < episodes_per_goal; ++e) {
            Vec state = env.reset(derive_seed(g, static_cast<std::uint64_t>(e)));
            bool reached = success(state, eval_goals[g], env.spec());
            for (int t = 0; t < env.spec().max_episode_len && !reached; ++t) {
                const int a = policy.act(state, eval_goals[g], /*greedy=*/true, rng);
                state = env.step(a).next_state;
                reached = success(state, eval_goals[g], env.spec());
            }
            hits += reached ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

double coverage(const ReplayBuffer& buffer, const EnvSpec& spec) {
    std::vector<char> seen(static_cast<std::size_t>(spec.walls.cell_count()), 0);
    for (std::size_t i = 0; i < buffer.size(Partition::All); ++i) {
        const Trajectory& t = buffer.trajectory(Partition::All, i);
        for (const auto& s : t.states) seen[static_cast<std::size_t>(discretize(s, spec))] = 1;
    }
    int visited = 0;
    for (int c = 0; c < spec.walls.cell_count(); ++c) {
        if (seen[static_cast<std::size_t>(c)] && spec.walls.occ[static_cast<std::size_t>(c)] == 0) {
            ++visited;
        }
    }
    return static_cast<double>(visited) / spec.walls.free_cell_count();
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

SeedResult run_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                        const std::filesystem::path& seed_dir) {
    SeedResult result;
    result.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::filesystem::create_directories(seed_dir);
        Components c = build_components(config, seed);
        Env eval_env(c.spec);
        const std::vector<Vec>& eval_goals =
            config.eval_goals.empty() ? c.spec.goal_distribution : config.eval_goals;
        if (eval_goals.empty()) throw ConfigError("eval goal set is empty");

        std::ofstream csv(seed_dir / "metrics.csv");
        csv << "round,episodes,env_steps,coverage,success_rate,elbo,mean_goal_density\n";
        nlohmann::json snapshots = nlohmann::json::array();

        TrainSinks sinks;
        sinks.on_snapshot = [&](const nlohmann::json& snap) { snapshots.push_back(snap); };
        sinks.on_round = [&](const RoundReport& report) {
            result.final_coverage = coverage(*c.buffer, c.spec);
            result.final_success = evaluate(*c.goal_policy, eval_env, eval_goals,
                                            config.eval_episodes);
            char row[256];
            std::snprintf(row, sizeof(row), "%d,%d,%lld,%.6f,%.6f,%.6f,%.8f\n", report.round,
                          report.episodes, report.env_steps, result.final_coverage,
                          result.final_success, report.elbo, report.mean_goal_density);
            csv << row;
        };

        run_training(c, config.loop, sinks);

        std::ofstream snap_out(seed_dir / "snapshots.json");
        snap_out << snapshots.dump(2) << '\n';
        std::ofstream policy_out(seed_dir / "policy.json");
        c.goal_policy->save(policy_out);
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    result.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
    RunResult result;
    try {
        config.validate();
        config.make_env_spec();
    } catch (const ConfigError& e) {
        result.exit_code = 2;
        result.error = e.what();
        return result;
    }

    std::string out_dir = config.out_dir;
    if (const char* env_override = std::getenv("CE2_OUT_DIR")) {
        if (*env_override != '\0') out_dir = env_override;
    }
    result.out_dir = out_dir;
    std::filesystem::create_directories(out_dir);

    result.per_seed.resize(config.seeds.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(hw, config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.seeds.size()) break;
            const std::uint64_t seed = config.seeds[i];
            result.per_seed[i] = run_one_seed(
                config, seed, std::filesystem::path(out_dir) / ("seed_" + std::to_string(seed)));
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }

    std::vector<double> covs;
    std::vector<double> succs;
    nlohmann::json per_seed = nlohmann::json::array();
    bool any_error = false;
    for (const auto& r : result.per_seed) {
        if (!r.error.empty() && result.error.empty()) result.error = r.error;
        nlohmann::json j;
        j["seed"] = r.seed;
        j["coverage"] = r.final_coverage;
        j["success"] = r.final_success;
        j["wall_time_sec"] = r.wall_time_sec;
        if (!r.error.empty()) {
            j["error"] = r.error;
            any_error = true;
        } else {
            covs.push_back(r.final_coverage);
            succs.push_back(r.final_success);
        }
        per_seed.push_back(std::move(j));
    }
    result.median_coverage = median(covs);
    result.median_success = median(succs);

    nlohmann::json summary;
    summary["env"] = config.env_name;
    summary["strategy"] = strategy_name(config.loop.strategy.strategy);
    summary["rounds"] = config.loop.n_train;
    summary["episodes_per_round"] = config.loop.n_tau;
    summary["per_seed"] = std::move(per_seed);
    summary["median_coverage"] = result.median_coverage;
    summary["median_success"] = result.median_success;
    std::ofstream out(std::filesystem::path(out_dir) / "summary.json");
    out << summary.dump(2) << '\n';

    result.exit_code = any_error ? 1 : 0;
    return result;
}

double eval_saved_policy(const ExperimentConfig& config, const std::string& policy_path) {
    const EnvSpec spec = config.make_env_spec();
    Env env(spec);
    GoalPolicy policy(spec, config.policy);
    std::ifstream in(policy_path);
    if (!in) throw std::runtime_error("cannot open policy file: " + policy_path);
    policy.load(in);
    const std::vector<Vec>& goals =
        config.eval_goals.empty() ? spec.goal_distribution : config.eval_goals;
    return evaluate(policy, env, goals, config.eval_episodes);
}

std::string compare_summaries(const std::vector<std::string>& summary_paths) {
    std::ostringstream out;
    out << "strategy        env                   seeds  median_coverage  median_success\n";
    for (const auto& path : summary_paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open summary file: " + path);
        nlohmann::json j;
        in >> j;
        char row[256];
        std::snprintf(row, sizeof(row), "%-15s %-21s %5zu  %15.4f  %14.4f\n",
                      j.at("strategy").get<std::string>().c_str(),
                      j.at("env").get<std::string>().c_str(), j.at("per_seed").size(),
                      j.at("median_coverage").get<double>(),
                      j.at("median_success").get<double>());
        out << row;
    }
    return out.str();
}

void export_snapshots_csv(const std::string& snapshots_path, const std::string& csv_path) {
    std::ifstream in(snapshots_path);
    if (!in) throw std::runtime_error("cannot open snapshots file: " + snapshots_path);
    nlohmann::json snaps;
    in >> snaps;
    std::size_t max_dim = 0;
    for (const auto& snap : snaps) {
        if (snap.at("kind") == "gmm") {
            for (const auto& c : snap.at("centroids")) max_dim = std::max(max_dim, c.size());
        } else {
            for (const auto& g : snap.at("selected_goals")) max_dim = std::max(max_dim, g.size());
        }
    }
    std::ofstream out(csv_path);
    out << "round,kind,index,weight,sigma2";
    for (std::size_t d = 0; d < max_dim; ++d) out << ",v" << d;
    out << '\n';
    auto write_row = [&](int round, const char* kind, std::size_t index, const std::string& weight,
                         const std::string& sigma2, const std::vector<double>& values) {
        out << round << ',' << kind << ',' << index << ',' << weight << ',' << sigma2;
        for (std::size_t d = 0; d < max_dim; ++d) {
            out << ',';
            if (d < values.size()) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f", values[d]);
                out << buf;
            }
        }
        out << '\n';
    };
    for (const auto& snap : snaps) {
        const int round = snap.at("round").get<int>();
        if (snap.at("kind") == "gmm") {
            const auto centroids = snap.at("centroids").get<std::vector<std::vector<double>>>();
            const auto weights = snap.at("weights").get<std::vector<double>>();
            char sigma_buf[32];
            std::snprintf(sigma_buf, sizeof(sigma_buf), "%.8f", snap.at("sigma2").get<double>());
            for (std::size_t i = 0; i < centroids.size(); ++i) {
                char weight_buf[32];
                std::snprintf(weight_buf, sizeof(weight_buf), "%.8f", weights[i]);
                write_row(round, "centroid", i, weight_buf, sigma_buf, centroids[i]);
            }
        } else {
            const auto goals = snap.at("selected_goals").get<std::vector<std::vector<double>>>();
            for (std::size_t i = 0; i < goals.size(); ++i) {
                write_row(round, "goal", i, "", "", goals[i]);
            }
        }
    }
}

}  // namespace ce2
