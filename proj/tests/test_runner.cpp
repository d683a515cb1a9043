#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ce2/runner.hpp"

using namespace ce2;

namespace {

std::string small_config(const std::string& out_dir, const std::string& strategy = "RANDOM") {
    std::ostringstream cfg;
    cfg << "env.name = grid5\n"
        << "strategy.name = " << strategy << "\n"
        << "strategy.n_candidate = 16\n"
        << "strategy.n_edge = 4\n"
        << "strategy.k_rollouts = 2\n"
        << "run.seeds = 1,2\n"
        << "run.rounds = 4\n"
        << "run.episodes_per_round = 1\n"
        << "run.reassign_period = 2\n"
        << "run.assign_batch = 16\n"
        << "run.imagination_horizon = 6\n"
        << "latent.dim = 2\n"
        << "latent.hidden = 8\n"
        << "latent.steps_per_round = 1\n"
        << "latent.batch = 8\n"
        << "dt.hidden = 8\n"
        << "dt.steps_per_round = 1\n"
        << "dt.batch = 8\n"
        << "dt.rollouts_per_round = 1\n"
        << "gmm.clusters = 3\n"
        << "gmm.steps_per_round = 1\n"
        << "gmm.batch = 16\n"
        << "policy.goal_rollouts_per_round = 2\n"
        << "policy.explore_rollouts_per_round = 2\n"
        << "eval.goals = 4,4\n"
        << "eval.episodes_per_goal = 2\n"
        << "run.out_dir = " << out_dir << "\n";
    return cfg.str();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing applies defaults and overrides") {
    const ExperimentConfig cfg = parse_config_text(
        "env.name = grid10_four_rooms\n"
        "strategy.name = CE2\n"
        "# a comment\n"
        "gmm.clusters = 50\n"
        "run.seeds = 3,4,5\n");
    CHECK(cfg.env_name == "grid10_four_rooms");
    CHECK(cfg.loop.strategy.strategy == Strategy::CE2);
    CHECK(cfg.loop.strategy.n_candidate == 1000);  // paper defaults
    CHECK(cfg.loop.strategy.n_edge == 100);
    CHECK(cfg.loop.strategy.potential_rollouts == 10);
    CHECK(cfg.gmm.n_components == 50);
    CHECK(cfg.gmm.step_size == 3e-4);
    CHECK(cfg.latent_dim == 50);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4, 5});
    CHECK(cfg.loop.reassign_period == 10);
    CHECK(cfg.capacity == 10000);
}

TEST_CASE("config errors carry line numbers") {
    try {
        parse_config_text("env.name = grid5\nnot a key value\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("env.name = grid5\nbogus.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("env.name = grid5\nrun.rounds = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("run.rounds = 5\n"), ConfigError);  // missing env name
}

TEST_CASE("evaluate on oracle policies") {
    const EnvSpec spec = builtin_spec("grid5");
    Env env(spec);

    // shortest-path policy: move right then up
    GoalPolicy oracle(spec);
    for (int x = 0; x < 5; ++x) {
        for (int y = 0; y < 5; ++y) {
            const int cell = spec.walls.cell_index(x, y);
            for (int g = 0; g < 25; ++g) {
                const int gx = g % 5;
                const int gy = g / 5;
                int a = 0;
                if (x < gx) a = 0;
                else if (x > gx) a = 2;
                else if (y < gy) a = 1;
                else if (y > gy) a = 3;
                oracle.set_q(cell, g, a, 1.0);
            }
        }
    }
    CHECK(evaluate(oracle, env, {{1.0, 1.0}}, 3) == 1.0);
    CHECK(evaluate(oracle, env, {{4.0, 4.0}}, 3) == 1.0);

    // unreachable goal behind an unbroken wall
    GridLayout cut = GridLayout::open(5, 1);
    cut.occ[2] = 1;
    Env cut_env(make_grid_maze("cut", cut, 20));
    GoalPolicy cut_policy(cut_env.spec());
    CHECK(evaluate(cut_policy, cut_env, {{4.0, 0.0}}, 3) == 0.0);
}

TEST_CASE("untrained policy rarely reaches the far corner") {
    // the greedy untrained policy marches right and sticks to the wall
    const EnvSpec spec = builtin_spec("grid10");
    Env env(spec);
    GoalPolicy policy(spec);
    CHECK(evaluate(policy, env, {{9.0, 9.0}}, 100) <= 0.1);
}

TEST_CASE("coverage counts distinct visited cells") {
    const EnvSpec spec = builtin_spec("grid5");
    ReplayBuffer buf(10);
    CHECK(coverage(buf, spec) == 0.0);

    Trajectory t;
    t.states.push_back({0.0, 0.0});
    buf.append(t, Partition::All);
    CHECK(coverage(buf, spec) == doctest::Approx(1.0 / 25));

    Trajectory all;
    for (int c = 0; c < 25; ++c) all.states.push_back(cell_center(spec, c));
    for (int i = 0; i < 24; ++i) {
        all.actions.push_back(action_vector(spec, 0));
        all.phases.push_back(Phase::Explore);
    }
    buf.append(all, Partition::All);
    CHECK(coverage(buf, spec) == 1.0);

    // exactly half of a 2-cell corridor
    const EnvSpec two = make_grid_maze("two", GridLayout::open(2, 1), 10);
    ReplayBuffer half(10);
    Trajectory h;
    h.states.push_back({0.0, 0.0});
    half.append(h, Partition::All);
    CHECK(coverage(half, two) == 0.5);
}

TEST_CASE("run writes deterministic artifacts") {
    const auto dir1 = std::filesystem::temp_directory_path() / "ce2_run_a";
    const auto dir2 = std::filesystem::temp_directory_path() / "ce2_run_b";
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);

    const ExperimentConfig cfg1 = parse_config_text(small_config(dir1.string()));
    const ExperimentConfig cfg2 = parse_config_text(small_config(dir2.string()));
    const RunResult r1 = run(cfg1);
    const RunResult r2 = run(cfg2);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);

    for (const char* seed_dir : {"seed_1", "seed_2"}) {
        const std::string a = slurp(dir1 / seed_dir / "metrics.csv");
        const std::string b = slurp(dir2 / seed_dir / "metrics.csv");
        CHECK(!a.empty());
        CHECK(a == b);  // byte-identical reruns
    }
    CHECK(std::filesystem::exists(dir1 / "summary.json"));
    CHECK(std::filesystem::exists(dir1 / "seed_1" / "policy.json"));
    CHECK(std::filesystem::exists(dir1 / "seed_1" / "snapshots.json"));

    // metrics rows: header + one per round
    std::istringstream csv(slurp(dir1 / "seed_1" / "metrics.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 5);

    // summary medians equal recomputation from the per-seed results
    std::ifstream sin(dir1 / "summary.json");
    nlohmann::json summary;
    sin >> summary;
    std::vector<double> covs;
    for (const auto& row : summary.at("per_seed")) covs.push_back(row.at("coverage").get<double>());
    CHECK(summary.at("median_coverage").get<double>() == doctest::Approx(median(covs)));

    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("saved policies re-evaluate") {
    const auto dir = std::filesystem::temp_directory_path() / "ce2_run_eval";
    std::filesystem::remove_all(dir);
    const ExperimentConfig cfg = parse_config_text(small_config(dir.string()));
    REQUIRE(run(cfg).exit_code == 0);
    const double success = eval_saved_policy(cfg, (dir / "seed_1" / "policy.json").string());
    CHECK(success >= 0.0);
    CHECK(success <= 1.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("compare and export-snapshots produce readable artifacts") {
    const auto dir = std::filesystem::temp_directory_path() / "ce2_run_cmp";
    std::filesystem::remove_all(dir);
    const ExperimentConfig cfg = parse_config_text(small_config(dir.string(), "CE2"));
    REQUIRE(run(cfg).exit_code == 0);

    const std::string table = compare_summaries({(dir / "summary.json").string()});
    CHECK(table.find("CE2") != std::string::npos);
    CHECK(table.find("grid5") != std::string::npos);

    const auto csv = dir / "snapshots.csv";
    export_snapshots_csv((dir / "seed_1" / "snapshots.json").string(), csv.string());
    const std::string content = slurp(csv);
    CHECK(content.find("round,kind,index") != std::string::npos);
    CHECK(content.find("centroid") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("CE2_OUT_DIR overrides the configured output directory") {
    const auto dir = std::filesystem::temp_directory_path() / "ce2_env_override";
    std::filesystem::remove_all(dir);
    const ExperimentConfig cfg = parse_config_text(small_config("ignored_dir"));
    setenv("CE2_OUT_DIR", dir.c_str(), 1);
    const RunResult r = run(cfg);
    unsetenv("CE2_OUT_DIR");
    REQUIRE(r.exit_code == 0);
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK_FALSE(std::filesystem::exists("ignored_dir"));
    std::filesystem::remove_all(dir);
}
